#pragma once

// The operator T defined by a bilinear form over two quasi-derivative
// systems A (trial, order n) and B (test, order m), its Fredholm index, and
// its reduction to an (n+m)-dimensional first-order boundary-value problem.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qdiff/coeffs.hpp"
#include "qdiff/error.hpp"
#include "qdiff/ivp.hpp"
#include "qdiff/linalg.hpp"
#include "qdiff/quadrature.hpp"
#include "qdiff/quasisystem.hpp"

namespace qdiff {

/// p(x, lambda) = p0(x) + lambda * p1(x).
struct AffineCoefficient {
  CoefficientFunction p0;
  CoefficientFunction p1;

  bool depends_on_lambda() const { return !p1.is_zero(); }
  CoefficientFunction at(complex lambda) const {
    if (p1.is_zero() || lambda == complex{}) return p0;
    return p0 + CoefficientFunction(lambda) * p1;
  }
};

struct OperatorSpec {
  std::size_t n = 0, m = 0;
  double s = 2.0;
  CoefficientSystem A, B;
  cmat U, V, Q;
  std::map<std::pair<std::size_t, std::size_t>, AffineCoefficient> p;
  /// Set when the embedding behind the pencil is not injective; the generic
  /// spectral scanner refuses such specs.
  bool non_injective = false;
  /// Where lambda enters, for output metadata.
  std::string lambda_convention;

  OperatorSpec& set_p(std::size_t i, std::size_t j, CoefficientFunction p0, CoefficientFunction p1 = 0.0) {
    p[{i, j}] = AffineCoefficient{std::move(p0), std::move(p1)};
    return *this;
  }
  AffineCoefficient get_p(std::size_t i, std::size_t j) const {
    auto it = p.find({i, j});
    return it == p.end() ? AffineCoefficient{} : it->second;
  }
  CoefficientFunction p_at(std::size_t i, std::size_t j, complex lambda) const { return get_p(i, j).at(lambda); }
};

/// <F, Z> = sum_{j<m} int f_j conj(Z_j) + int w_B f_m conj(Z_m) + sum_i mu_i conj(Z_i(0)).
struct FunctionalData {
  std::vector<CoefficientFunction> f;
  cvec mu;

  static FunctionalData zero(std::size_t m) { return FunctionalData{std::vector<CoefficientFunction>(m + 1), cvec()}; }
  /// Only the f_0 slot set.
  static FunctionalData scalar(std::size_t m, CoefficientFunction f0) {
    FunctionalData F = zero(m);
    F.f[0] = std::move(f0);
    return F;
  }
  bool is_zero() const {
    for (const auto& c : f)
      if (!c.is_zero()) return false;
    return mu.size() == 0 || mu.isZero(0.0);
  }
  FunctionalData scaled(complex alpha) const {
    FunctionalData out = *this;
    for (auto& c : out.f) c = CoefficientFunction(alpha) * c;
    if (out.mu.size()) out.mu *= alpha;
    return out;
  }
};

/// L1 norms of the f_j plus the Euclidean norm of mu.
inline double functional_norm(const FunctionalData& F) {
  double total = 0.0;
  for (const auto& c : F.f)
    if (!c.is_zero()) total += abs(c).integrate(0.0, 1.0).real();
  if (F.mu.size()) total += F.mu.norm();
  return total;
}

// ---------------------------------------------------------------------------
// weights

/// |A_{n-1,n}|^{1/s}.
inline CoefficientFunction weight_a(const OperatorSpec& spec) {
  return pow(abs(spec.A.get(spec.n - 1, spec.n)), 1.0 / spec.s);
}

/// |B_{m-1,m}|^{(s-1)/s}; the constant 1 when s = 1.
inline CoefficientFunction weight_b(const OperatorSpec& spec) {
  if (spec.s == 1.0) return CoefficientFunction(1.0);
  return pow(abs(spec.B.get(spec.m - 1, spec.m)), (spec.s - 1.0) / spec.s);
}

// ---------------------------------------------------------------------------
// validation

namespace detail {

/// Sample points for pointwise checks: 15 Kronrod nodes on each of 32 cells
/// per piece, plus regular piece endpoints.
inline std::vector<double> check_nodes(const CoefficientFunction& f) {
  std::vector<double> xs;
  for (const Piece& p : f.pieces()) {
    if (p.left_alpha == 0.0) xs.push_back(p.a);
    const int cells = 32;
    for (int c = 0; c < cells; ++c) {
      const double lo = p.a + (p.b - p.a) * c / cells, hi = p.a + (p.b - p.a) * (c + 1) / cells;
      const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
      xs.push_back(mid);
      for (double node : detail::kXgk) {
        if (node == 0.0) continue;
        xs.push_back(mid - half * node);
        xs.push_back(mid + half * node);
      }
    }
    if (p.right_alpha == 0.0) xs.push_back(p.b);
  }
  return xs;
}

inline double min_left_alpha(const CoefficientFunction& f) {
  double a = 0.0;
  for (const Piece& p : f.pieces()) a = std::min({a, p.left_alpha, p.right_alpha});
  return a;
}

}  // namespace detail

/// Relative floor under which |p_nm| counts as vanishing.
inline constexpr double kLeadingFloor = 1e-10;

inline ValidationReport validate_spec(const OperatorSpec& spec) {
  ValidationReport r;
  const std::size_t n = spec.n, m = spec.m;
  if (n == 0 || m == 0) {
    r.add("shape", n, m, "orders n and m must be positive");
    return r;
  }
  if (!(spec.s >= 1.0)) r.add("shape", 0, 0, "exponent s must lie in [1, inf)");
  auto shape = [&](const cmat& M, std::size_t rows, std::size_t cols, const char* name) {
    if (static_cast<std::size_t>(M.rows()) != rows || static_cast<std::size_t>(M.cols()) != cols)
      r.add("shape", static_cast<std::size_t>(M.rows()), static_cast<std::size_t>(M.cols()),
            std::string(name) + " must be " + std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
                std::to_string(M.rows()) + "x" + std::to_string(M.cols()));
  };
  shape(spec.U, 2 * n, 2 * n, "U");
  shape(spec.V, 2 * m, 2 * m, "V");
  shape(spec.Q, 2 * m, 2 * n, "Q");
  if (spec.A.order() != n) r.add("shape", spec.A.order(), n, "system A order differs from n");
  if (spec.B.order() != m) r.add("shape", spec.B.order(), m, "system B order differs from m");
  r.merge(validate_system(spec.A), "A: ");
  r.merge(validate_system(spec.B), "B: ");

  for (const auto& [key, c] : spec.p) {
    const auto [i, j] = key;
    if (i > n || j > m) r.add("shape", i, j, "coefficient index outside 0..n x 0..m");
    for (const CoefficientFunction* f : {&c.p0, &c.p1})
      if (!f->atoms().empty()) r.add("atoms", i, j, "point masses are not allowed in the p-table");
  }
  if (!r.ok()) return r;

  // Leading coefficient: bounded, bounded away from zero, lambda-free.
  const AffineCoefficient lead = spec.get_p(n, m);
  if (lead.depends_on_lambda()) r.add("leading", n, m, "p_nm must not depend on lambda");
  if (lead.p0.has_singularities()) r.add("leading", n, m, "p_nm is unbounded (declared singularity)");
  {
    double lo = INFINITY, hi = 0.0;
    double where = 0.0;
    for (double x : detail::check_nodes(lead.p0)) {
      const double v = std::abs(lead.p0.value(x));
      if (!std::isfinite(v)) {
        hi = INFINITY;
        where = x;
        break;
      }
      if (v < lo) {
        lo = v;
        where = x;
      }
      hi = std::max(hi, v);
    }
    if (!std::isfinite(hi)) r.add("leading", n, m, "p_nm is not finite near x = " + format_double(where));
    else if (!(lo > kLeadingFloor * hi))
      r.add("leading", n, m, "reciprocal of p_nm is unbounded (|p_nm| ~ " + format_double(lo) + " at x = " +
                                 format_double(where) + ")");
  }

  // Integrability classes at the level of declared endpoint exponents.
  for (const auto& [key, c] : spec.p) {
    const auto [i, j] = key;
    const double alpha = std::min(detail::min_left_alpha(c.p0), detail::min_left_alpha(c.p1));
    if (alpha == 0.0) continue;
    if (i < n && j == m) {
      if (spec.s == 1.0) r.add("integrability", i, j, "p_im must be bounded when s = 1");
      else if (!(alpha * spec.s / (spec.s - 1.0) > -1.0))
        r.add("integrability", i, j, "p_im is not in L_{s/(s-1)}");
    } else if (i == n && j < m) {
      if (!(alpha * spec.s > -1.0)) r.add("integrability", i, j, "p_nj is not in L_s");
    }
  }

  // Zero sets of A_{n-1,n} and B_{m-1,m} must coincide.
  {
    const CoefficientFunction a = spec.A.get(n - 1, n), b = spec.B.get(m - 1, m);
    std::vector<double> xs = detail::check_nodes(a);
    for (double x : detail::check_nodes(b)) xs.push_back(x);
    for (double x : xs) {
      const bool za = std::abs(a.value(x)) == 0.0, zb = std::abs(b.value(x)) == 0.0;
      if (za != zb) {
        r.add("zero-sets", n - 1, m - 1,
              "A_{n-1,n} and B_{m-1,m} do not vanish together at x = " + format_double(x));
        break;
      }
    }
  }

  if (!spec.B.is_real_valued()) r.notes.push_back("complex B system: conjugated B entries used formula-literal mode");
  if (spec.non_injective) r.notes.push_back("embedding flagged non-injective: generic spectral scan disabled");
  return r;
}

inline void require_valid(const OperatorSpec& spec, const char* what) {
  const ValidationReport r = validate_spec(spec);
  if (!r.ok()) throw SpecError(std::string(what) + ": " + r.str());
}

inline long fredholm_index(const OperatorSpec& spec, double rel_tol = kRankTolerance) {
  return static_cast<long>(spec.n) - static_cast<long>(spec.m) - static_cast<long>(numerical_rank(spec.U, rel_tol)) +
         static_cast<long>(numerical_rank(spec.V, rel_tol));
}

// ---------------------------------------------------------------------------
// reduction to a first-order system

/// Y_n = sum_k coeff[k] y^[k] + offset, recovering the top trial component
/// from the first-order state.
struct TopComponentMap {
  std::vector<CoefficientFunction> coeff;  // length n + m
  CoefficientFunction offset;
};

namespace detail {

struct Reduction {
  FirstOrderSystem system;
  TopComponentMap top;
};

inline void check_leading_floor(const OperatorSpec& spec) {
  const CoefficientFunction lead = spec.get_p(spec.n, spec.m).p0;
  double lo = INFINITY, hi = 0.0;
  for (double x : detail::check_nodes(lead)) {
    const double v = std::abs(lead.value(x));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(lo > kLeadingFloor * hi) || !std::isfinite(hi))
    throw SpecError("p_nm falls below the boundedness floor; cannot divide by it");
}

inline Reduction reduce(const OperatorSpec& spec, complex lambda, const FunctionalData& F) {
  const std::size_t n = spec.n, m = spec.m, dim = n + m;
  if (F.f.size() != m + 1) throw SpecError("functional needs m + 1 components");
  check_leading_floor(spec);

  const CoefficientFunction wa = weight_a(spec), wb = weight_b(spec);
  const CoefficientFunction pinv = CoefficientFunction(1.0) / spec.p_at(n, m, lambda);
  const CoefficientFunction an = spec.A.get(n - 1, n);
  const CoefficientFunction bm_conj = conj(spec.B.get(m - 1, m));
  const CoefficientFunction fm = F.f[m];
  auto p = [&](std::size_t i, std::size_t j) { return spec.p_at(i, j, lambda); };

  Reduction out{FirstOrderSystem(dim), {}};
  FirstOrderSystem& sys = out.system;
  sys.lambda = lambda;

  // Rows i < n - 1: the A system itself.
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = 0; j <= i + 1; ++j) sys.entry(i, j) = spec.A.get(i, j);

  // Row n - 1.
  const CoefficientFunction an_over_wa = an / wa;
  for (std::size_t i = 0; i < n; ++i) sys.entry(n - 1, i) = spec.A.get(n - 1, i) - pinv * p(i, m) * an_over_wa;
  sys.entry(n - 1, n) = pinv * an_over_wa * bm_conj / wb;
  sys.forcing[n - 1] = pinv * an_over_wa * fm;

  // Rows for j < m, stored at index n + m - j - 1.
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t row = n + m - j - 1;
    const CoefficientFunction pnj = p(n, j);
    for (std::size_t i = 0; i < n; ++i) sys.entry(row, i) = p(i, j) - pinv * p(i, m) * pnj;
    sys.entry(row, n) = pinv * bm_conj / wb * pnj - conj(spec.B.get(m - 1, j));
    for (std::size_t k = std::max<std::size_t>(j, 1); k < m; ++k)
      sys.entry(row, n + m - k) = sys.entry(row, n + m - k) - conj(spec.B.get(k - 1, j));
    sys.forcing[row] = pinv * pnj * fm - F.f[j];
  }

  // Top trial component.
  TopComponentMap& top = out.top;
  top.coeff.assign(dim, CoefficientFunction(0.0));
  const CoefficientFunction scale = pinv / wa;
  for (std::size_t i = 0; i < n; ++i) top.coeff[i] = -(scale * p(i, m));
  top.coeff[n] = scale * bm_conj / wb;
  top.offset = scale * fm;
  return out;
}

}  // namespace detail

inline FirstOrderSystem assemble_system(const OperatorSpec& spec, complex lambda, const FunctionalData& F) {
  require_valid(spec, "assemble_system");
  return detail::reduce(spec, lambda, F).system;
}

inline TopComponentMap top_component_map(const OperatorSpec& spec, complex lambda, const FunctionalData& F) {
  return detail::reduce(spec, lambda, F).top;
}

// ---------------------------------------------------------------------------
// boundary conditions

/// U Y^ = 0 (independent rows of U) and N^H (Q Y^ - Y^v) = N^H mu~ with N a
/// basis of ker V.
struct BoundaryOperator {
  std::size_t n = 0, m = 0;
  cmat rows_U;      // rank U x 2n
  cmat null_basis;  // 2m x (2m - rank V), orthonormal columns
  cmat Q;
  bool rank_ambiguous = false;

  cmat rows_V() const { return null_basis.adjoint(); }
  std::size_t condition_count() const {
    return static_cast<std::size_t>(rows_U.rows() + null_basis.cols());
  }
  /// Norm of each condition as a functional of (Y^, Y^v), independent of the
  /// solution; floors row scaling so a numerically zero row stays zero.
  Eigen::VectorXd condition_scales() const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(condition_count()));
    for (Eigen::Index r = 0; r < rows_U.rows(); ++r) out(r) = rows_U.row(r).norm();
    const cmat nh = null_basis.adjoint();
    for (Eigen::Index r = 0; r < nh.rows(); ++r) {
      const double q = Q.size() ? (nh.row(r) * Q).norm() : 0.0;
      out(rows_U.rows() + r) = std::hypot(q, nh.row(r).norm());
    }
    return out;
  }
};

/// Divide each row of D (and rhs) by max(|row|, scale).
inline void equilibrate(cmat& D, cvec& rhs, const Eigen::VectorXd& scales) {
  for (Eigen::Index r = 0; r < D.rows(); ++r) {
    const double s = std::max(D.row(r).norm(), scales(r));
    if (s > 0.0) {
      D.row(r) /= s;
      if (rhs.size()) rhs(r) /= s;
    }
  }
}

inline BoundaryOperator boundary_matrix(const OperatorSpec& spec, double rel_tol = kRankTolerance) {
  BoundaryOperator b;
  b.n = spec.n;
  b.m = spec.m;
  b.rows_U = independent_rows(spec.U, rel_tol);
  b.null_basis = null_space(spec.V, rel_tol);
  b.Q = spec.Q;
  b.rank_ambiguous = rank_info(spec.U, rel_tol).ambiguous || rank_info(spec.V, rel_tol).ambiguous;
  return b;
}

/// Trace Y^ from the first-order state at both ends.
inline cvec trace_hat(const cvec& left, const cvec& right, std::size_t n) {
  const auto ni = static_cast<Eigen::Index>(n);
  cvec out(2 * ni);
  out.head(ni) = left.head(ni);
  out.tail(ni) = right.head(ni);
  return out;
}

/// Y^v: y^[n+m-k-1](0) for k < m, -y^[n+2m-k-1](1) for k >= m.
inline cvec trace_vee(const cvec& left, const cvec& right, std::size_t n, std::size_t m) {
  cvec out(static_cast<Eigen::Index>(2 * m));
  for (std::size_t k = 0; k < 2 * m; ++k) {
    if (k < m) out(static_cast<Eigen::Index>(k)) = left(static_cast<Eigen::Index>(n + m - k - 1));
    else out(static_cast<Eigen::Index>(k)) = -right(static_cast<Eigen::Index>(n + 2 * m - k - 1));
  }
  return out;
}

/// Residuals of the boundary conditions for end states of a trajectory.
inline cvec boundary_residual(const BoundaryOperator& b, const cvec& left, const cvec& right, const cvec& mu) {
  const cvec hat = trace_hat(left, right, b.n);
  const cvec vee = trace_vee(left, right, b.n, b.m);
  cvec mu_t = cvec::Zero(static_cast<Eigen::Index>(2 * b.m));
  if (mu.size()) mu_t.head(mu.size()) = mu;
  cvec out(static_cast<Eigen::Index>(b.condition_count()));
  out.head(b.rows_U.rows()) = b.rows_U * hat;
  out.tail(b.null_basis.cols()) = b.null_basis.adjoint() * (b.Q * hat - vee - mu_t);
  return out;
}

/// Linear conditions D c = rhs on the initial state c for y = Phi c + y_p,
/// given Phi(1) and y_p(1).
inline std::pair<cmat, cvec> boundary_system(const BoundaryOperator& b, const cmat& phi1, const cvec& yp1,
                                             const cvec& mu) {
  const auto dim = static_cast<Eigen::Index>(b.n + b.m);
  const std::size_t conds = b.condition_count();
  cmat D(static_cast<Eigen::Index>(conds), dim);
  // Columns: response of the residual to unit initial vectors.
  const cvec zero = cvec::Zero(dim);
  const cvec base = boundary_residual(b, zero, yp1, mu);
  for (Eigen::Index c = 0; c < dim; ++c) {
    const cvec e = cvec::Unit(dim, c);
    D.col(c) = boundary_residual(b, e, cvec(phi1.col(c) + yp1), mu) - base;
  }
  return {D, -base};
}

// ---------------------------------------------------------------------------
// the bilinear form

namespace detail {

inline void add_cuts(std::vector<double>& cuts, const CoefficientFunction& f) {
  for (const Piece& p : f.pieces()) cuts.push_back(p.a);
}

/// Quadrature segments over the union of all cut points, carrying the most
/// singular declared exponent of the coefficients at each end.
inline std::vector<Segment> form_segments(std::vector<double> cuts, const std::vector<const CoefficientFunction*>& coeffs) {
  cuts.push_back(0.0);
  cuts.push_back(1.0);
  for (const auto* f : coeffs) add_cuts(cuts, *f);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<Segment> segs;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    Segment s{cuts[k], cuts[k + 1], 0.0, 0.0};
    for (const auto* f : coeffs) {
      const Piece& p = f->pieces()[f->piece_index(0.5 * (s.a + s.b))];
      if (s.a == p.a) s.left_alpha = std::min(s.left_alpha, p.left_alpha);
      if (s.b == p.b) s.right_alpha = std::min(s.right_alpha, p.right_alpha);
    }
    segs.push_back(s);
  }
  return segs;
}

inline QuadratureOptions form_quadrature() {
  QuadratureOptions q;
  q.abs_tol = 1e-11;
  q.rel_tol = 1e-11;
  q.max_subdivisions = 40000;
  return q;
}

}  // namespace detail

/// <T Y, Z> with p evaluated at lambda. Y carries n + 1 components, Z m + 1.
inline complex apply_T(const OperatorSpec& spec, complex lambda, const VectorTrajectory& Y, const VectorTrajectory& Z) {
  const std::size_t n = spec.n, m = spec.m;
  if (Y.components() != n + 1) throw SpecError("apply_T: trial trajectory needs n + 1 components");
  if (Z.components() != m + 1) throw SpecError("apply_T: test trajectory needs m + 1 components");
  const CoefficientFunction wa = weight_a(spec), wb = weight_b(spec);

  // Collapse the four weighted sums into one coefficient per (i, j) pair.
  struct Pair {
    std::size_t i, j;
    CoefficientFunction c;
  };
  std::vector<Pair> pairs;
  for (const auto& [key, affine] : spec.p) {
    const auto [i, j] = key;
    CoefficientFunction c = affine.at(lambda);
    if (c.is_zero()) continue;
    if (i == n) c = wa * c;
    if (j == m) c = wb * c;
    pairs.push_back({i, j, std::move(c)});
  }

  std::vector<const CoefficientFunction*> coeffs;
  for (const auto& pr : pairs) coeffs.push_back(&pr.c);
  std::vector<double> cuts = Y.grid();
  cuts.insert(cuts.end(), Z.grid().begin(), Z.grid().end());
  const auto segs = detail::form_segments(std::move(cuts), coeffs);

  auto integrand = [&](double x) -> complex {
    const cvec y = Y.at(x), z = Z.at(x);
    complex sum{};
    for (const auto& pr : pairs)
      sum += pr.c.value(x) * y(static_cast<Eigen::Index>(pr.i)) * std::conj(z(static_cast<Eigen::Index>(pr.j)));
    return sum;
  };
  complex total = pairs.empty() ? complex{} : integrate_segments(integrand, segs, detail::form_quadrature());

  if (spec.Q.size() && !spec.Q.isZero(0.0)) {
    const cvec yh = boundary_trace(Y, n), zh = boundary_trace(Z, m);
    total += zh.dot(spec.Q * yh);  // sum (Q Y^)_k conj(Z^_k)
  }
  return total;
}

/// <F, Z> for a test trajectory with m + 1 components.
inline complex functional_pairing(const OperatorSpec& spec, const FunctionalData& F, const VectorTrajectory& Z) {
  const std::size_t m = spec.m;
  if (F.f.size() != m + 1) throw SpecError("functional needs m + 1 components");
  if (Z.components() != m + 1) throw SpecError("test trajectory needs m + 1 components");
  std::vector<CoefficientFunction> weights(F.f);
  weights[m] = weight_b(spec) * F.f[m];
  std::vector<const CoefficientFunction*> coeffs;
  for (const auto& w : weights) coeffs.push_back(&w);
  const auto segs = detail::form_segments(Z.grid(), coeffs);
  auto integrand = [&](double x) -> complex {
    const cvec z = Z.at(x);
    complex sum{};
    for (std::size_t j = 0; j <= m; ++j)
      if (!weights[j].is_zero()) sum += weights[j].value(x) * std::conj(z(static_cast<Eigen::Index>(j)));
    return sum;
  };
  bool any = false;
  for (const auto& w : weights) any = any || !w.is_zero();
  complex total = any ? integrate_segments(integrand, segs, detail::form_quadrature()) : complex{};
  if (F.mu.size()) {
    const cvec z0 = Z.at(0.0);
    for (Eigen::Index i = 0; i < F.mu.size(); ++i) total += F.mu(i) * std::conj(z0(i));
  }
  return total;
}

/// Trial trajectory (Y_0..Y_n) recovered from a first-order state trajectory.
inline VectorTrajectory trial_from_state(const OperatorSpec& spec, const TopComponentMap& top,
                                         const VectorTrajectory& y) {
  const std::size_t n = spec.n;
  const auto ni = static_cast<Eigen::Index>(n);
  auto lift = [top, ni](double x, const cvec& state) {
    cvec out(ni + 1);
    out.head(ni) = state.head(ni);
    complex yn = top.offset.value(x);
    for (std::size_t k = 0; k < top.coeff.size(); ++k)
      if (!top.coeff[k].is_zero()) yn += top.coeff[k].value(x) * state(static_cast<Eigen::Index>(k));
    out(ni) = yn;
    return out;
  };
  std::vector<cvec> values;
  for (std::size_t k = 0; k < y.grid().size(); ++k) values.push_back(lift(y.grid()[k], y.values()[k]));
  std::vector<std::string> labels;
  for (std::size_t k = 0; k <= n; ++k) labels.push_back("Y" + std::to_string(k));
  return VectorTrajectory(y.grid(), std::move(values), [y, lift](double x) { return lift(x, y.at(x)); },
                          std::move(labels));
}

}  // namespace qdiff
