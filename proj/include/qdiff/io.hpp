#pragma once

// Plain-text and CSV output. Floats use the shortest representation that
// round-trips, so identical runs give byte-identical files.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "qdiff/error.hpp"
#include "qdiff/expr.hpp"
#include "qdiff/ivp.hpp"
#include "qdiff/spectral.hpp"

namespace qdiff {

inline std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_double(v);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

/// x followed by re/im columns per component, sampled at `samples` evenly
/// spaced points.
inline std::string trajectory_csv(const VectorTrajectory& y, std::size_t samples) {
  if (samples < 2) samples = 2;
  std::string out = "x";
  for (const auto& label : y.labels()) out += ",re(" + label + "),im(" + label + ")";
  out += '\n';
  for (std::size_t k = 0; k < samples; ++k) {
    const double x = k + 1 == samples ? 1.0 : static_cast<double>(k) / static_cast<double>(samples - 1);
    const cvec v = y.at(x);
    out += csv_number(x);
    for (Eigen::Index c = 0; c < v.size(); ++c) out += "," + csv_number(v(c).real()) + "," + csv_number(v(c).imag());
    out += '\n';
  }
  return out;
}

inline std::string spectrum_csv(const std::vector<Eigenpair>& ev) {
  std::string out = "re(lambda),im(lambda),multiplicity,residual\n";
  for (const auto& e : ev)
    out += csv_number(e.lambda.real()) + "," + csv_number(e.lambda.imag()) + "," + std::to_string(e.multiplicity) + "," +
           csv_number(e.residual) + "\n";
  return out;
}

}  // namespace qdiff
