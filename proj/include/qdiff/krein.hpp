#pragma once

// Strings -d/dG (dy/dH) = lambda y with Dirichlet ends, G = N o H. After the
// substitution t = H(x) this is -u'' = lambda u dN on [0, 1], solved with
// transfer matrices across the atoms of N.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "qdiff/coeffs.hpp"
#include "qdiff/error.hpp"
#include "qdiff/ivp.hpp"
#include "qdiff/operator.hpp"
#include "qdiff/spectral.hpp"

namespace qdiff {

/// Nonnegative measure on [0, 1]: density plus point masses.
struct MeasureFunction {
  CoefficientFunction density;
  std::vector<Atom> atoms;

  static MeasureFunction lebesgue() { return {CoefficientFunction(1.0), {}}; }

  void validate() const {
    double prev = 0.0;
    for (const Atom& a : atoms) {
      if (!(a.location > 0.0 && a.location < 1.0))
        throw SpecError("measure atoms must lie strictly inside (0, 1), got " + format_double(a.location));
      if (!(a.location > prev) && &a != &atoms.front())
        throw SpecError("measure atoms must be sorted with distinct locations");
      if (a.weight.imag() != 0.0 || !(a.weight.real() > 0.0))
        throw SpecError("measure atoms need positive real weights");
      prev = a.location;
    }
    if (!density.is_real_valued()) throw SpecError("measure density must be real");
    if (!density.atoms().empty()) throw SpecError("put point masses in the atom list, not the density");
    for (double x : detail::check_nodes(density))
      if (density.value(x).real() < 0.0)
        throw SpecError("measure density is negative at x = " + format_double(x));
  }

  /// As a coefficient with atoms.
  CoefficientFunction coefficient() const { return density.with_atoms(atoms); }

  double total() const {
    double t = density.is_zero() ? 0.0 : density.integrate(0.0, 1.0).real();
    for (const Atom& a : atoms) t += a.weight.real();
    return t;
  }
};

struct KreinOptions {
  std::size_t grid = 400;
  IvpOptions ivp = [] {
    IvpOptions o;
    o.tol = 1e-12;
    return o;
  }();
};

class KreinFeller {
 public:
  KreinFeller(CoefficientFunction H, MeasureFunction N, KreinOptions opts = {})
      : H_(std::move(H)), N_(std::move(N)), opts_(std::move(opts)) {
    N_.validate();
    if (!H_.atoms().empty()) throw SpecError("H must be continuous");
    if (std::abs(H_(0.0)) > 1e-12 || std::abs(H_(1.0) - 1.0) > 1e-12)
      throw SpecError("H must satisfy H(0) = 0 and H(1) = 1");
    double prev = 0.0;
    for (int k = 1; k <= 4096; ++k) {
      const double x = k / 4096.0;
      const double v = H_(x).real();
      if (v < prev - 1e-14) throw SpecError("H decreases near x = " + format_double(x));
      prev = v;
    }
    if (!(N_.total() > 0.0)) throw SpecError("the measure has zero total mass: there is no spectrum");
  }

  /// u(1; lambda) for -u'' = lambda u dN, u(0) = 0, u'(0) = 1.
  complex boundary_value(complex lambda) const { return shoot(lambda).final_state()(0, 0); }

  /// Eigenvalues in [a, b]: sign changes of u(1; lambda) refined by TOMS 748.
  std::vector<double> eigenvalues(double a, double b) const {
    if (!(b > a) || opts_.grid < 2) throw SpecError("krein_feller: need a < b");
    const std::size_t g = opts_.grid;
    std::vector<double> xs(g), fs(g);
    for (std::size_t k = 0; k < g; ++k) {
      xs[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(g - 1);
      fs[k] = boundary_value(xs[k]).real();
    }
    auto f = [this](double l) { return boundary_value(l).real(); };
    std::vector<double> out;
    for (std::size_t k = 0; k + 1 < g; ++k) {
      if (fs[k] == 0.0) {
        out.push_back(xs[k]);
        continue;
      }
      if ((fs[k] < 0.0) == (fs[k + 1] < 0.0) || fs[k + 1] == 0.0) continue;
      std::uintmax_t iters = 200;
      const auto r = boost::math::tools::toms748_solve(f, xs[k], xs[k + 1], fs[k], fs[k + 1],
                                                       detail::BracketTolerance{b - a}, iters);
      out.push_back(0.5 * (r.first + r.second));
    }
    if (fs[g - 1] == 0.0) out.push_back(xs[g - 1]);
    return out;
  }

  /// (u, u') in the string variable t = H(x).
  VectorTrajectory eigenfunction(double lambda) const {
    const MatrixSolution sol = shoot(lambda);
    return sol.to_trajectory([](const cmat& s) -> cvec { return s.col(0); }, {"u", "u'"});
  }

  /// y(x) = u(H(x)) in the original variable.
  complex original(const VectorTrajectory& u, double x) const { return u.at(std::clamp(H_(x).real(), 0.0, 1.0))(0); }

  /// The form int u' conj(v') with Dirichlet ends, flagged non-injective.
  static OperatorSpec form_spec() {
    OperatorSpec spec;
    spec.n = spec.m = 1;
    spec.s = 2.0;
    spec.A = spec.B = CoefficientSystem::sobolev(1);
    spec.U = cmat::Identity(2, 2);
    spec.V = cmat::Identity(2, 2);
    spec.Q = cmat::Zero(2, 2);
    spec.set_p(1, 1, 1.0);
    spec.non_injective = true;
    spec.lambda_convention = "lambda pairs with the measure dG; handled by the transfer-matrix solver";
    return spec;
  }

  /// Positivity diagnostic: sector of sampled form values.
  SectorEstimate positivity(std::size_t trials, std::uint64_t seed = 1) const {
    return numerical_range_sector(form_spec(), trials, seed);
  }

  const MeasureFunction& measure() const noexcept { return N_; }

 private:
  MatrixSolution shoot(complex lambda) const {
    FirstOrderSystem sys(2);
    sys.entry(0, 1) = 1.0;
    sys.entry(1, 0) = CoefficientFunction(-lambda) * N_.coefficient();
    sys.lambda = lambda;
    cmat y0(2, 1);
    y0 << 0.0, 1.0;
    return MatrixSolution(sys, y0, ForcingMode::none, opts_.ivp);
  }

  CoefficientFunction H_;
  MeasureFunction N_;
  KreinOptions opts_;
};

inline KreinFeller krein_feller(const CoefficientFunction& H, const MeasureFunction& N, KreinOptions opts = {}) {
  return KreinFeller(H, N, std::move(opts));
}

}  // namespace qdiff
