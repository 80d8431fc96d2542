#pragma once

// Lower-Hessenberg coefficient systems Y_i' = sum_{j <= i+1} A_ij Y_j,
// their fundamental matrices, and reconstruction from the top component.

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qdiff/coeffs.hpp"
#include "qdiff/error.hpp"
#include "qdiff/ivp.hpp"
#include "qdiff/linalg.hpp"

namespace qdiff {

class CoefficientSystem {
 public:
  CoefficientSystem() = default;
  explicit CoefficientSystem(std::size_t n) : n_(n) {}

  /// A_{i,i+1} = 1, everything else absent.
  static CoefficientSystem sobolev(std::size_t n) {
    CoefficientSystem a(n);
    for (std::size_t i = 0; i < n; ++i) a.set(i, i + 1, CoefficientFunction(1.0));
    return a;
  }

  std::size_t order() const noexcept { return n_; }

  CoefficientSystem& set(std::size_t i, std::size_t j, CoefficientFunction f) {
    entries_[{i, j}] = std::move(f);
    return *this;
  }
  bool has(std::size_t i, std::size_t j) const { return entries_.count({i, j}) > 0; }
  /// Absent entries read as zero.
  CoefficientFunction get(std::size_t i, std::size_t j) const {
    auto it = entries_.find({i, j});
    return it == entries_.end() ? CoefficientFunction(0.0) : it->second;
  }
  const std::map<std::pair<std::size_t, std::size_t>, CoefficientFunction>& entries() const noexcept {
    return entries_;
  }
  bool is_real_valued() const {
    for (const auto& [key, f] : entries_)
      if (!f.is_real_valued()) return false;
    return true;
  }

  /// The n x n system Y_i' = sum_{j < n} A_ij Y_j driving the fundamental matrix.
  FirstOrderSystem truncated() const {
    FirstOrderSystem sys(n_);
    for (const auto& [key, f] : entries_)
      if (key.first < n_ && key.second < n_) sys.entry(key.first, key.second) = f;
    return sys;
  }

 private:
  std::size_t n_ = 0;
  std::map<std::pair<std::size_t, std::size_t>, CoefficientFunction> entries_;
};

struct Violation {
  std::string kind;  // "shape", "monotonicity", "atoms", ...
  std::size_t i = 0, j = 0;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::vector<std::string> notes;

  bool ok() const noexcept { return violations.empty(); }
  void add(std::string kind, std::size_t i, std::size_t j, std::string message) {
    violations.push_back({std::move(kind), i, j, std::move(message)});
  }
  void merge(const ValidationReport& other, const std::string& prefix) {
    for (Violation v : other.violations) {
      v.message = prefix + v.message;
      violations.push_back(std::move(v));
    }
    for (const auto& n : other.notes) notes.push_back(prefix + n);
  }
  bool has(const std::string& kind) const {
    for (const auto& v : violations)
      if (v.kind == kind) return true;
    return false;
  }
  std::string str() const {
    if (ok() && notes.empty()) return "valid\n";
    std::string out = ok() ? "valid\n" : "invalid\n";
    for (const auto& v : violations)
      out += "  [" + v.kind + "] (" + std::to_string(v.i) + ", " + std::to_string(v.j) + "): " + v.message + "\n";
    for (const auto& n : notes) out += "  note: " + n + "\n";
    return out;
  }
};

inline ValidationReport validate_system(const CoefficientSystem& a, double resolution = 0x1p-20) {
  ValidationReport report;
  const std::size_t n = a.order();
  if (n == 0) report.add("shape", 0, 0, "order must be positive");
  for (const auto& [key, f] : a.entries()) {
    const auto [i, j] = key;
    if (i >= n) report.add("shape", i, j, "row index beyond the order");
    else if (j > i + 1) report.add("shape", i, j, "entry above the superdiagonal");
    if (!f.atoms().empty()) report.add("atoms", i, j, "point masses are not allowed in a coefficient system");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const MonotonicityReport m = a.get(i, i + 1).strictly_monotone_primitive(resolution);
    if (!m.strictly_monotone) {
      std::string where = m.witness ? " on [" + format_double(m.witness->first) + ", " +
                                          format_double(m.witness->second) + "]"
                                    : "";
      report.add("monotonicity", i, i + 1, "|A_{i,i+1}| vanishes" + where);
    }
  }
  return report;
}

inline void require_valid(const CoefficientSystem& a, const char* what) {
  const ValidationReport r = validate_system(a);
  if (!r.ok()) throw SpecError(std::string(what) + ": " + r.str());
}

/// Condition number above which a sampled fundamental matrix is rejected.
inline constexpr double kConditionCap = 1e12;

/// Matrix function on [0, 1] sampled on a grid, re-integrated in between.
class FundamentalMatrix {
 public:
  using Evaluator = std::function<cmat(double)>;

  FundamentalMatrix(std::size_t n, std::vector<double> grid, std::vector<cmat> values, Evaluator eval)
      : n_(n), grid_(std::move(grid)), values_(std::move(values)), eval_(std::move(eval)) {}

  std::size_t dim() const noexcept { return n_; }
  const std::vector<double>& grid() const noexcept { return grid_; }
  const std::vector<cmat>& values() const noexcept { return values_; }

  cmat at(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("fundamental matrix evaluated outside [0, 1]", x);
    auto it = std::lower_bound(grid_.begin(), grid_.end(), x);
    if (it != grid_.end() && *it == x) return values_[static_cast<std::size_t>(it - grid_.begin())];
    return eval_(x);
  }

  /// Largest sampled condition number.
  double max_condition() const {
    double c = 1.0;
    for (const cmat& m : values_) c = std::max(c, condition_number(m));
    return c;
  }

 private:
  std::size_t n_;
  std::vector<double> grid_;
  std::vector<cmat> values_;
  Evaluator eval_;
};

namespace detail {

inline void check_conditioning(const std::vector<double>& grid, const std::vector<cmat>& values) {
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double c = condition_number(values[k]);
    if (!(c <= kConditionCap))
      throw ConditioningError("fundamental matrix numerically singular at x = " + format_double(grid[k]), c);
  }
}

}  // namespace detail

/// M_n' = A_trunc M_n, M_n(0) = I.
inline FundamentalMatrix fundamental_matrix(const CoefficientSystem& a, const IvpOptions& opts = {}) {
  require_valid(a, "fundamental_matrix");
  const std::size_t n = a.order();
  MatrixSolution sol(a.truncated(), cmat::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)),
                     ForcingMode::none, opts);
  std::vector<cmat> values;
  for (std::size_t k = 0; k < sol.size(); ++k) values.push_back(sol.sample(k));
  detail::check_conditioning(sol.grid(), values);
  return FundamentalMatrix(n, sol.grid(), std::move(values), [sol](double x) { return sol.at(x); });
}

inline FundamentalMatrix invert_fundamental(const FundamentalMatrix& m) {
  detail::check_conditioning(m.grid(), m.values());
  std::vector<cmat> inv;
  for (const cmat& v : m.values()) inv.push_back(v.partialPivLu().inverse());
  return FundamentalMatrix(m.dim(), m.grid(), std::move(inv),
                           [m](double x) -> cmat { return m.at(x).partialPivLu().inverse(); });
}

/// Y = M (init + int_0^x M^{-1} e_{n-1} A_{n-1,n} Yn), plus Yn as component n.
inline VectorTrajectory reconstruct(const CoefficientSystem& a, const cvec& init, const CoefficientFunction& yn,
                                    const IvpOptions& opts = {}) {
  require_valid(a, "reconstruct");
  const std::size_t n = a.order();
  if (static_cast<std::size_t>(init.size()) != n) throw SpecError("reconstruct: init has the wrong length");
  FirstOrderSystem sys = a.truncated();
  sys.forcing[n - 1] = a.get(n - 1, n) * yn;
  const auto ni = static_cast<Eigen::Index>(n);
  cmat y0(ni, ni + 1);
  y0.leftCols(ni).setIdentity();
  y0.col(ni) = init;
  MatrixSolution sol(sys, y0, ForcingMode::variation, opts);
  std::vector<std::string> labels;
  for (std::size_t k = 0; k <= n; ++k) labels.push_back("Y" + std::to_string(k));
  std::vector<cvec> values;
  for (std::size_t k = 0; k < sol.size(); ++k) {
    cvec v(ni + 1);
    v.head(ni) = sol.sample(k).leftCols(ni) * sol.sample(k).col(ni);
    v(ni) = yn.value(sol.grid()[k]);
    values.push_back(std::move(v));
  }
  auto eval = [sol, yn, ni](double x) -> cvec {
    const cmat s = sol.at(x);
    cvec v(ni + 1);
    v.head(ni) = s.leftCols(ni) * s.col(ni);
    v(ni) = yn.value(x);
    return v;
  };
  return VectorTrajectory(sol.grid(), std::move(values), eval, std::move(labels));
}

/// (Y_0(0), ..., Y_{n-1}(0), Y_0(1), ..., Y_{n-1}(1)).
inline cvec boundary_trace(const VectorTrajectory& y, std::size_t n) {
  if (y.components() < n) throw SpecError("boundary_trace: trajectory has fewer than n components");
  const auto ni = static_cast<Eigen::Index>(n);
  const cvec left = y.at(0.0), right = y.at(1.0);
  cvec out(2 * ni);
  out.head(ni) = left.head(ni);
  out.tail(ni) = right.head(ni);
  return out;
}

}  // namespace qdiff
