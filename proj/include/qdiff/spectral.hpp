#pragma once

// Eigenvalues of the pencil lambda -> T(lambda) through the boundary
// determinant, eigenfunctions, and form diagnostics on random trajectories.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "qdiff/error.hpp"
#include "qdiff/ivp.hpp"
#include "qdiff/linalg.hpp"
#include "qdiff/operator.hpp"
#include "qdiff/sampler.hpp"

namespace qdiff {

struct SpectralOptions {
  /// Points of the real-window scan.
  std::size_t grid = 400;
  /// Rectangle scan grid (real x imaginary direction).
  std::size_t grid_re = 161, grid_im = 11;
  IvpOptions ivp = [] {
    IvpOptions o;
    o.tol = 1e-12;
    return o;
  }();
  /// Relative singular-value threshold deciding kernel dimension at a root.
  double kernel_tol = 1e-7;
  double dedup_tol = 1e-8;
  /// Real-window roots may carry at most this imaginary part (relative).
  double imag_tol = 1e-6;
  std::size_t max_polish = 80;
  bool eigenfunctions = false;
  /// Worker threads for the grid scan; 0 picks the hardware count.
  unsigned threads = 1;
};

struct Eigenpair {
  complex lambda;
  std::size_t multiplicity = 0;
  double residual = 0.0;  // |normalized determinant| at lambda
};

struct SpectralResult {
  std::vector<Eigenpair> eigenvalues;
  std::vector<VectorTrajectory> eigenfunctions;
  // scan metadata
  bool rectangle = false;
  complex lo, hi;  // interval ends or opposite rectangle corners
  std::size_t grid_points = 0;
  std::vector<std::string> rejected;  // candidates that failed to polish or verify
};

namespace detail {

struct BoundaryAt {
  cmat D;  // raw
  cmat E;  // row-equilibrated
  FirstOrderSystem system;
  TopComponentMap top;
};

inline BoundaryAt boundary_at(const OperatorSpec& spec, complex lambda, const IvpOptions& opts) {
  const Reduction red = reduce(spec, lambda, FunctionalData::zero(spec.m));
  const auto di = static_cast<Eigen::Index>(spec.n + spec.m);
  const MatrixSolution sol(red.system, cmat::Identity(di, di), ForcingMode::none, opts);
  const BoundaryOperator bop = boundary_matrix(spec);
  auto [D, rhs] = boundary_system(bop, sol.final_state(), cvec::Zero(di), cvec());
  cmat E = D;
  cvec none;
  equilibrate(E, none, bop.condition_scales());
  return {std::move(D), std::move(E), red.system, red.top};
}

inline void require_square(const OperatorSpec& spec) {
  const BoundaryOperator bop = boundary_matrix(spec);
  if (bop.condition_count() != spec.n + spec.m)
    throw SpecError("boundary system has " + std::to_string(bop.condition_count()) + " conditions for " +
                    std::to_string(spec.n + spec.m) +
                    " unknowns; the determinant is undefined, scan kernel_dim with solve_bvp instead");
}

inline SpectralOptions default_spectral() { return SpectralOptions{}; }

inline complex determinant(const cmat& D) { return D.rows() ? D.partialPivLu().determinant() : complex(1.0); }

/// Kernel dimension of an equilibrated boundary matrix.
inline std::size_t kernel_dimension(const cmat& D, double rel_tol) {
  const Eigen::VectorXd sv = Eigen::JacobiSVD<cmat>(D).singularValues();
  const double smax = sv.size() ? std::max(sv(0), 1e-300) : 1.0;
  std::size_t k = static_cast<std::size_t>(D.cols() - sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) <= rel_tol * smax) ++k;
  return k;
}

template <class F>
std::vector<complex> parallel_map(const std::vector<complex>& xs, F f, unsigned threads) {
  std::vector<complex> out(xs.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  if (threads <= 1 || xs.size() < 2) {
    for (std::size_t k = 0; k < xs.size(); ++k) out[k] = f(xs[k]);
    return out;
  }
  std::vector<std::future<void>> jobs;
  const std::size_t chunk = (xs.size() + threads - 1) / threads;
  for (std::size_t start = 0; start < xs.size(); start += chunk) {
    const std::size_t stop = std::min(xs.size(), start + chunk);
    jobs.push_back(std::async(std::launch::async, [&, start, stop] {
      for (std::size_t k = start; k < stop; ++k) out[k] = f(xs[k]);
    }));
  }
  for (auto& j : jobs) j.get();
  return out;
}

}  // namespace detail

/// Boundary determinant at lambda (F = 0) after row equilibration.
inline complex char_det(const OperatorSpec& spec, complex lambda, const IvpOptions& opts = detail::default_spectral().ivp) {
  require_valid(spec, "char_det");
  detail::require_square(spec);
  return detail::determinant(detail::boundary_at(spec, lambda, opts).E);
}

/// Geometric multiplicity of lambda (kernel dimension of the boundary system).
inline std::size_t kernel_dim_at(const OperatorSpec& spec, complex lambda, const SpectralOptions& opts = {}) {
  return detail::kernel_dimension(detail::boundary_at(spec, lambda, opts.ivp).E, opts.kernel_tol);
}

/// Kernel solution at an eigenvalue: the state trajectory y^[0..n+m-1],
/// scaled so the largest-magnitude value of y^[0] equals 1.
inline VectorTrajectory eigenfunction(const OperatorSpec& spec, complex lambda, const SpectralOptions& opts = {}) {
  require_valid(spec, "eigenfunction");
  const detail::BoundaryAt b = detail::boundary_at(spec, lambda, opts.ivp);
  if (detail::kernel_dimension(b.E, opts.kernel_tol) == 0)
    throw NotAnEigenvalue("lambda = (" + format_double(lambda.real()) + ", " + format_double(lambda.imag()) +
                          ") is not an eigenvalue: boundary matrix has trivial kernel");
  Eigen::JacobiSVD<cmat> svd(b.E, Eigen::ComputeFullV);
  const cvec c = svd.matrixV().col(svd.matrixV().cols() - 1);
  const MatrixSolution sol(b.system, cmat(c), ForcingMode::none, opts.ivp);
  VectorTrajectory y = sol.to_trajectory([](const cmat& s) -> cvec { return s.col(0); }, b.system.labels);
  // Largest |y^[0]| sample, refined between its grid neighbours.
  const auto& grid = y.grid();
  std::size_t best = 0;
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (std::abs(y.values()[k](0)) > std::abs(y.values()[best](0))) best = k;
  complex peak = y.values()[best](0);
  {
    const double lo = grid[best == 0 ? 0 : best - 1], hi = grid[std::min(best + 1, grid.size() - 1)];
    if (hi > lo) {
      auto neg = [&y](double x) { return -std::abs(y.at(x)(0)); };
      const auto r = boost::math::tools::brent_find_minima(neg, lo, hi, 52);
      if (-r.second > std::abs(peak)) peak = y.at(r.first)(0);
    }
  }
  if (peak == complex{}) peak = 1.0;
  const complex scale = 1.0 / peak;
  std::vector<cvec> values;
  for (const cvec& v : y.values()) values.push_back(v * scale);
  return VectorTrajectory(y.grid(), std::move(values), [sol, scale](double x) -> cvec {
    return sol.at(x).col(0) * scale;
  }, b.system.labels);
}

/// Trial components Y_0..Y_n of an eigenfunction.
inline VectorTrajectory eigenfunction_trial(const OperatorSpec& spec, complex lambda, const VectorTrajectory& state) {
  return trial_from_state(spec, top_component_map(spec, lambda, FunctionalData::zero(spec.m)), state);
}

namespace detail {

struct Scanner {
  const OperatorSpec& spec;
  const SpectralOptions& opts;

  complex raw(complex l) const { return determinant(boundary_at(spec, l, opts.ivp).D); }
  complex normalized(complex l) const { return determinant(boundary_at(spec, l, opts.ivp).E); }

  /// Secant iteration on the raw determinant from two nearby points.
  std::optional<complex> polish(complex l0, complex l1) const {
    complex f0 = raw(l0), f1 = raw(l1);
    for (std::size_t it = 0; it < opts.max_polish; ++it) {
      if (f1 == complex{}) return l1;
      const complex den = f1 - f0;
      if (den == complex{}) break;
      const complex step = f1 * (l1 - l0) / den;
      if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
      l0 = l1;
      f0 = f1;
      l1 -= step;
      if (std::abs(step) <= 1e-14 * (1.0 + std::abs(l1))) return l1;
      f1 = raw(l1);
    }
    return std::nullopt;
  }

  std::optional<Eigenpair> verify(complex l) const {
    const cmat E = boundary_at(spec, l, opts.ivp).E;
    const std::size_t k = kernel_dimension(E, opts.kernel_tol);
    if (k == 0) return std::nullopt;
    return Eigenpair{l, k, std::abs(determinant(E))};
  }
};

inline void dedup_sorted(std::vector<Eigenpair>& ev, double tol) {
  std::sort(ev.begin(), ev.end(), [](const Eigenpair& a, const Eigenpair& b) {
    if (a.lambda.real() != b.lambda.real()) return a.lambda.real() < b.lambda.real();
    return a.lambda.imag() < b.lambda.imag();
  });
  std::vector<Eigenpair> out;
  for (const Eigenpair& e : ev) {
    bool dup = false;
    for (Eigenpair& o : out)
      if (std::abs(o.lambda - e.lambda) <= tol * std::max(1.0, std::abs(e.lambda))) {
        if (e.residual < o.residual) o = e;
        dup = true;
        break;
      }
    if (!dup) out.push_back(e);
  }
  ev = std::move(out);
}

/// Relative bracket tolerance with an absolute floor, so a root at zero
/// terminates instead of chasing denormals.
struct BracketTolerance {
  double scale;
  bool operator()(double a, double b) const {
    const double eps = std::numeric_limits<double>::epsilon();
    return std::abs(a - b) <= std::max(4.0 * eps * std::min(std::abs(a), std::abs(b)), 1e-15 * scale);
  }
};

inline std::string describe(complex l) {
  return "(" + format_double(l.real()) + ", " + format_double(l.imag()) + ")";
}

}  // namespace detail

/// Eigenvalues in the real interval [a, b].
inline SpectralResult find_eigenvalues(const OperatorSpec& spec, double a, double b, const SpectralOptions& opts = {}) {
  require_valid(spec, "find_eigenvalues");
  if (spec.non_injective)
    throw UnsupportedSpec("find_eigenvalues: spec is flagged non-injective; use its dedicated solver");
  detail::require_square(spec);
  if (!(b > a) || opts.grid < 3) throw SpecError("find_eigenvalues: need a < b and at least 3 grid points");
  const detail::Scanner sc{spec, opts};

  SpectralResult res;
  res.lo = a;
  res.hi = b;
  res.grid_points = opts.grid;
  const std::size_t g = opts.grid;
  std::vector<complex> xs(g);
  for (std::size_t k = 0; k < g; ++k) xs[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(g - 1);
  const std::vector<complex> d = detail::parallel_map(xs, [&](complex l) { return sc.normalized(l); }, opts.threads);

  // Rotate by the phase at the largest sample; real along the window if the
  // rotated imaginary parts are negligible.
  std::size_t big = 0;
  for (std::size_t k = 0; k < g; ++k)
    if (std::abs(d[k]) > std::abs(d[big])) big = k;
  const complex rot = d[big] == complex{} ? complex(1.0) : std::abs(d[big]) / d[big];
  double worst_imag = 0.0;
  for (const complex v : d) worst_imag = std::max(worst_imag, std::abs((v * rot).imag()));
  const bool real_valued = worst_imag <= 1e-8 * std::abs(d[big]);

  std::vector<Eigenpair> found;
  auto consider = [&](std::optional<complex> l) {
    if (!l || !std::isfinite(l->real()) || !std::isfinite(l->imag())) return;
    if (l->real() < a - 1e-9 * std::abs(a) || l->real() > b + 1e-9 * std::abs(b)) return;
    if (std::abs(l->imag()) > opts.imag_tol * (1.0 + std::abs(*l))) return;
    const auto e = sc.verify(*l);
    if (e) found.push_back(*e);
    else res.rejected.push_back("candidate " + detail::describe(*l) + " has trivial kernel");
  };

  if (real_valued) {
    auto fr = [&](double x) { return (sc.normalized(x) * rot).real(); };
    for (std::size_t k = 0; k + 1 < g; ++k) {
      const double fa = (d[k] * rot).real(), fb = (d[k + 1] * rot).real();
      if (fa == 0.0) {
        consider(xs[k]);
        continue;
      }
      if ((fa < 0.0) == (fb < 0.0) || fb == 0.0) continue;
      std::uintmax_t iters = 200;
      const auto r = boost::math::tools::toms748_solve(fr, xs[k].real(), xs[k + 1].real(), fa, fb,
                                                       detail::BracketTolerance{b - a}, iters);
      consider(complex(0.5 * (r.first + r.second)));
    }
    if ((d[g - 1] * rot).real() == 0.0) consider(xs[g - 1]);
  }
  // Local minima of |Delta| catch tangential and complex-phase roots.
  for (std::size_t k = 0; k < g; ++k) {
    const double v = std::abs(d[k]);
    const bool left = k == 0 || v < std::abs(d[k - 1]);
    const bool right = k + 1 == g || v < std::abs(d[k + 1]);
    if (!(left && right)) continue;
    const double h = (b - a) / static_cast<double>(g - 1);
    auto r = sc.polish(xs[k], xs[k] + 0.25 * h);
    if (!r) {
      res.rejected.push_back("polish failed near " + detail::describe(xs[k]));
      continue;
    }
    if (real_valued) r = complex(r->real(), 0.0);
    consider(r);
  }
  detail::dedup_sorted(found, opts.dedup_tol);
  res.eigenvalues = std::move(found);
  if (opts.eigenfunctions)
    for (const Eigenpair& e : res.eigenvalues) res.eigenfunctions.push_back(eigenfunction(spec, e.lambda, opts));
  return res;
}

/// Eigenvalues in the rectangle with corners lo and hi. Roots are found from
/// grid minima of |Delta|; nothing guarantees all roots are caught.
inline SpectralResult find_eigenvalues(const OperatorSpec& spec, complex lo, complex hi, const SpectralOptions& opts = {}) {
  require_valid(spec, "find_eigenvalues");
  if (spec.non_injective)
    throw UnsupportedSpec("find_eigenvalues: spec is flagged non-injective; use its dedicated solver");
  detail::require_square(spec);
  if (!(hi.real() > lo.real()) || !(hi.imag() > lo.imag()) || opts.grid_re < 3 || opts.grid_im < 3)
    throw SpecError("find_eigenvalues: degenerate rectangle or grid");
  const detail::Scanner sc{spec, opts};

  SpectralResult res;
  res.rectangle = true;
  res.lo = lo;
  res.hi = hi;
  res.grid_points = opts.grid_re * opts.grid_im;
  const std::size_t gr = opts.grid_re, gi = opts.grid_im;
  const double hr = (hi.real() - lo.real()) / static_cast<double>(gr - 1);
  const double hm = (hi.imag() - lo.imag()) / static_cast<double>(gi - 1);
  std::vector<complex> xs;
  for (std::size_t j = 0; j < gi; ++j)
    for (std::size_t k = 0; k < gr; ++k)
      xs.emplace_back(lo.real() + hr * static_cast<double>(k), lo.imag() + hm * static_cast<double>(j));
  const std::vector<complex> d = detail::parallel_map(xs, [&](complex l) { return sc.normalized(l); }, opts.threads);
  auto at = [&](std::size_t k, std::size_t j) { return std::abs(d[j * gr + k]); };

  std::vector<Eigenpair> found;
  for (std::size_t j = 0; j < gi; ++j)
    for (std::size_t k = 0; k < gr; ++k) {
      const double v = at(k, j);
      bool minimum = true;
      for (int dj = -1; dj <= 1 && minimum; ++dj)
        for (int dk = -1; dk <= 1; ++dk) {
          if (dj == 0 && dk == 0) continue;
          const long jj = static_cast<long>(j) + dj, kk = static_cast<long>(k) + dk;
          if (jj < 0 || kk < 0 || jj >= static_cast<long>(gi) || kk >= static_cast<long>(gr)) continue;
          if (at(static_cast<std::size_t>(kk), static_cast<std::size_t>(jj)) < v) {
            minimum = false;
            break;
          }
        }
      if (!minimum) continue;
      const complex start = xs[j * gr + k];
      const auto r = sc.polish(start, start + complex(0.25 * hr, 0.1 * hm));
      if (!r) {
        res.rejected.push_back("polish failed near " + detail::describe(start));
        continue;
      }
      const double slack = 1e-9 * (1.0 + std::abs(*r));
      if (r->real() < lo.real() - slack || r->real() > hi.real() + slack || r->imag() < lo.imag() - slack ||
          r->imag() > hi.imag() + slack)
        continue;
      if (const auto e = sc.verify(*r)) found.push_back(*e);
      else res.rejected.push_back("candidate " + detail::describe(*r) + " has trivial kernel");
    }
  detail::dedup_sorted(found, opts.dedup_tol);
  res.eigenvalues = std::move(found);
  if (opts.eigenfunctions)
    for (const Eigenpair& e : res.eigenvalues) res.eigenfunctions.push_back(eigenfunction(spec, e.lambda, opts));
  return res;
}

// ---------------------------------------------------------------------------
// form diagnostics

/// Test trajectory K Y = (Y_0, ..., Y_m) for a trial trajectory Y; defined
/// when m <= n, the first m rows of A and B coincide, and K Y meets V.
class InclusionMap {
 public:
  explicit InclusionMap(const OperatorSpec& spec) : spec_(spec) {
    if (spec.m > spec.n) throw UnsupportedSpec("trial-to-test inclusion needs m <= n");
    for (std::size_t i = 0; i < spec.m; ++i)
      for (std::size_t j = 0; j <= i + 1; ++j)
        if (spec.A.get(i, j).str() != spec.B.get(i, j).str())
          throw UnsupportedSpec("trial-to-test inclusion needs A and B to agree on their first m rows");
  }

  VectorTrajectory operator()(const VectorTrajectory& y) const {
    const auto mi = static_cast<Eigen::Index>(spec_.m);
    std::vector<cvec> values;
    for (const cvec& v : y.values()) values.push_back(v.head(mi + 1));
    std::vector<std::string> labels;
    for (std::size_t k = 0; k <= spec_.m; ++k) labels.push_back("Z" + std::to_string(k));
    VectorTrajectory z(y.grid(), std::move(values), [y, mi](double x) -> cvec { return y.at(x).head(mi + 1); },
                       std::move(labels));
    const cvec vz = spec_.V * boundary_trace(z, spec_.m);
    const double scale = 1.0 + boundary_trace(z, spec_.m).norm();
    if (vz.norm() > 1e-8 * scale) throw UnsupportedSpec("trial-to-test inclusion violates the V conditions");
    return z;
  }

 private:
  OperatorSpec spec_;
};

struct SymmetryReport {
  double sigma = 0.0;
  std::vector<std::pair<complex, complex>> pairs;  // (<TY1, KY2>, <TY2, KY1>)
};

struct SectorEstimate {
  double center = 0.0;      // argument of the sector axis
  double half_angle = 0.0;
  double arg_min = 0.0, arg_max = 0.0;
  std::vector<complex> values;
};

inline AdmissibleSampler trial_sampler(const OperatorSpec& spec, const IvpOptions& opts = {}) {
  return AdmissibleSampler(spec.A, spec.U, opts);
}

/// max |a - conj(b)| / (|a| + |b|) over random admissible pairs at lambda = 0.
inline SymmetryReport check_symmetry(const OperatorSpec& spec, std::size_t trials, std::uint64_t seed = 1) {
  require_valid(spec, "check_symmetry");
  const InclusionMap K(spec);
  const AdmissibleSampler sampler = trial_sampler(spec);
  std::mt19937_64 rng(seed);
  SymmetryReport r;
  for (std::size_t t = 0; t < trials; ++t) {
    const VectorTrajectory y1 = sampler.draw(rng), y2 = sampler.draw(rng);
    const complex a = apply_T(spec, 0.0, y1, K(y2));
    const complex b = apply_T(spec, 0.0, y2, K(y1));
    r.pairs.emplace_back(a, b);
    const double denom = std::abs(a) + std::abs(b);
    if (denom > 0.0) r.sigma = std::max(r.sigma, std::abs(a - std::conj(b)) / denom);
  }
  return r;
}

/// Smallest sector with vertex 0 containing the sampled values <T Y, K Y>.
inline SectorEstimate numerical_range_sector(const OperatorSpec& spec, std::size_t trials, std::uint64_t seed = 1) {
  require_valid(spec, "numerical_range_sector");
  const InclusionMap K(spec);
  const AdmissibleSampler sampler = trial_sampler(spec);
  std::mt19937_64 rng(seed);
  SectorEstimate s;
  std::vector<double> args;
  for (std::size_t t = 0; t < trials; ++t) {
    const VectorTrajectory y = sampler.draw(rng);
    const complex v = apply_T(spec, 0.0, y, K(y));
    s.values.push_back(v);
    if (v != complex{}) args.push_back(std::arg(v));
  }
  if (args.empty()) return s;
  std::sort(args.begin(), args.end());
  // The sector is the complement of the widest gap between sorted arguments.
  double gap = 2.0 * M_PI - (args.back() - args.front());
  std::size_t after = 0;
  for (std::size_t k = 1; k < args.size(); ++k)
    if (args[k] - args[k - 1] > gap) {
      gap = args[k] - args[k - 1];
      after = k;
    }
  const double start = args[after];
  const double span = 2.0 * M_PI - gap;
  s.arg_min = start;
  s.arg_max = std::remainder(start + span, 2.0 * M_PI);
  s.half_angle = 0.5 * span;
  s.center = std::remainder(start + 0.5 * span, 2.0 * M_PI);
  return s;
}

}  // namespace qdiff
