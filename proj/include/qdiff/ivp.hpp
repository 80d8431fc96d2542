#pragma once

// Linear first-order systems y' = C(x) y + g(x) with piecewise coefficients,
// integrated by an embedded Dormand-Prince 5(4) pair on each smooth segment.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "qdiff/coeffs.hpp"
#include "qdiff/error.hpp"
#include "qdiff/linalg.hpp"
#include "qdiff/quadrature.hpp"

namespace qdiff {

struct IvpOptions {
  /// Local error tolerance per step (absolute and relative).
  double tol = 1e-10;
  std::size_t max_steps = 200000;
  /// Extra points no step may straddle.
  std::vector<double> breakpoints;
};

inline std::string quasi_label(std::size_t k) { return "y^[" + std::to_string(k) + "]"; }

/// y' = C y + g on [0, 1]. Entries are CoefficientFunctions; atoms are only
/// meaningful in measure mode and act as jumps I + w E_ij.
struct FirstOrderSystem {
  std::size_t dim = 0;
  std::vector<CoefficientFunction> matrix;  // row-major, dim * dim
  std::vector<CoefficientFunction> forcing;
  std::vector<std::string> labels;
  complex lambda{};

  FirstOrderSystem() = default;
  explicit FirstOrderSystem(std::size_t d) : dim(d), matrix(d * d), forcing(d) {
    for (std::size_t k = 0; k < d; ++k) labels.push_back(quasi_label(k));
  }

  CoefficientFunction& entry(std::size_t i, std::size_t j) { return matrix[i * dim + j]; }
  const CoefficientFunction& entry(std::size_t i, std::size_t j) const { return matrix[i * dim + j]; }

  bool has_forcing() const {
    return std::any_of(forcing.begin(), forcing.end(), [](const CoefficientFunction& f) { return !f.is_zero(); });
  }

  /// One row per line, entries in the expression grammar.
  std::string str() const {
    std::string out;
    for (std::size_t i = 0; i < dim; ++i) {
      std::string rhs;
      auto add = [&rhs](std::string term) {
        if (rhs.empty()) {
          rhs = std::move(term);
        } else if (term.front() == '-') {
          rhs += " - " + term.substr(1);
        } else {
          rhs += " + " + term;
        }
      };
      for (std::size_t j = 0; j < dim; ++j) {
        const CoefficientFunction& c = entry(i, j);
        if (c.is_zero()) continue;
        std::string s = c.str();
        if (s == "1") add(labels[j]);
        else if (s == "-1") add("-" + labels[j]);
        else if (simple_term(s)) add(s + "*" + labels[j]);
        else add("(" + s + ")*" + labels[j]);
      }
      if (!forcing[i].is_zero()) {
        const std::string s = forcing[i].str();
        add(simple_term(s) ? s : "(" + s + ")");
      }
      if (rhs.empty()) rhs = "0";
      out += "(" + labels[i] + ")' = " + rhs + "\n";
    }
    return out;
  }

 private:
  static bool simple_term(const std::string& s) {
    // A product/quotient chain with at most a leading sign.
    int depth = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      const char c = s[k];
      if (c == '(') ++depth;
      else if (c == ')') --depth;
      else if (depth == 0 && k > 0 && (c == '+' || c == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') return false;
    }
    return true;
  }
};

/// Sampled vector function on [0, 1]. Between samples, values come from the
/// attached evaluator (re-integration for ODE solutions).
class VectorTrajectory {
 public:
  using Evaluator = std::function<cvec(double)>;

  VectorTrajectory() = default;
  VectorTrajectory(std::vector<double> grid, std::vector<cvec> values, Evaluator eval,
                   std::vector<std::string> labels = {})
      : grid_(std::move(grid)), values_(std::move(values)), eval_(std::move(eval)), labels_(std::move(labels)) {
    if (labels_.empty() && !values_.empty())
      for (Eigen::Index k = 0; k < values_.front().size(); ++k) labels_.push_back(quasi_label(static_cast<std::size_t>(k)));
  }

  /// Trajectory given by a closed form, sampled on a uniform grid.
  static VectorTrajectory from_function(Evaluator fn, std::size_t intervals = 64, std::vector<std::string> labels = {}) {
    std::vector<double> grid;
    std::vector<cvec> values;
    for (std::size_t k = 0; k <= intervals; ++k) {
      const double x = static_cast<double>(k) / static_cast<double>(intervals);
      grid.push_back(x);
      values.push_back(fn(x));
    }
    return VectorTrajectory(std::move(grid), std::move(values), std::move(fn), std::move(labels));
  }

  std::size_t components() const { return values_.empty() ? 0 : static_cast<std::size_t>(values_.front().size()); }
  const std::vector<double>& grid() const noexcept { return grid_; }
  const std::vector<cvec>& values() const noexcept { return values_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  bool has_evaluator() const noexcept { return static_cast<bool>(eval_); }

  cvec at(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("trajectory evaluated outside [0, 1]", x);
    auto it = std::lower_bound(grid_.begin(), grid_.end(), x);
    if (it != grid_.end() && *it == x) {
      // Duplicate grid points mark jumps; the right limit wins.
      auto last = std::upper_bound(it, grid_.end(), x) - 1;
      return values_[static_cast<std::size_t>(last - grid_.begin())];
    }
    if (!eval_) throw Error("trajectory has no evaluator between samples");
    return eval_(x);
  }

  /// Largest |component k| over the samples.
  double sup_norm(std::size_t k) const {
    double best = 0.0;
    for (const cvec& v : values_) best = std::max(best, std::abs(v(static_cast<Eigen::Index>(k))));
    return best;
  }

 private:
  std::vector<double> grid_;
  std::vector<cvec> values_;
  Evaluator eval_;
  std::vector<std::string> labels_;
};

/// How the last state column is driven.
enum class ForcingMode {
  none,       // every column solves y' = C y
  direct,     // last column solves y' = C y + g
  variation,  // state [M | w]: M' = C M, w' = M^{-1} g
};

namespace detail {

struct Term {
  std::size_t i = 0, j = 0;
  Expr expr;
  complex value{};
  bool constant = true;
};

struct CompiledSegment {
  SegmentMap map{0.0, 1.0, 0.0, 0.0};
  double lo = 0.0, hi = 1.0;  // evaluation window strictly inside the segment
  std::vector<Term> terms;
  std::vector<Term> forcing;
};

struct Jump {
  double x = 0.0;
  std::size_t i = 0, j = 0;
  complex weight{};
};

/// Per-segment active pieces of every entry, so evaluation needs no search.
class CompiledSystem {
 public:
  CompiledSystem(const FirstOrderSystem& sys, const std::vector<double>& extra_cuts) : dim_(sys.dim) {
    std::vector<double> cuts{0.0, 1.0};
    auto collect = [&cuts](const CoefficientFunction& f) {
      for (const Piece& p : f.pieces()) cuts.push_back(p.a);
      for (const Atom& a : f.atoms()) cuts.push_back(a.location);
    };
    for (const auto& f : sys.matrix) collect(f);
    for (const auto& f : sys.forcing) collect(f);
    for (double c : extra_cuts)
      if (c > 0.0 && c < 1.0) cuts.push_back(c);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      const double a = cuts[k], b = cuts[k + 1];
      double la = 0.0, ra = 0.0;
      auto alphas = [&](const CoefficientFunction& f) {
        const Piece& p = f.pieces()[f.piece_index(0.5 * (a + b))];
        if (a == p.a) la = std::min(la, p.left_alpha);
        if (b == p.b) ra = std::min(ra, p.right_alpha);
      };
      for (const auto& f : sys.matrix) alphas(f);
      for (const auto& f : sys.forcing) alphas(f);
      if (la < 0.0 && ra < 0.0) {
        const double mid = 0.5 * (a + b);
        add_segment(sys, a, mid, la, 0.0);
        add_segment(sys, mid, b, 0.0, ra);
      } else {
        add_segment(sys, a, b, la, ra);
      }
    }

    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j)
        for (const Atom& at : sys.entry(i, j).atoms()) jumps_.push_back({at.location, i, j, at.weight});
    for (std::size_t i = 0; i < dim_; ++i)
      if (!sys.forcing[i].atoms().empty()) throw UnsupportedSpec("atoms in the inhomogeneity are not supported");
    std::stable_sort(jumps_.begin(), jumps_.end(), [](const Jump& l, const Jump& r) { return l.x < r.x; });
  }

  std::size_t dim() const noexcept { return dim_; }
  const std::vector<CompiledSegment>& segments() const noexcept { return segments_; }
  const std::vector<Jump>& jumps() const noexcept { return jumps_; }

  /// Physical point for a segment parameter, kept strictly inside the piece.
  double point(const CompiledSegment& s, double u) const {
    return std::clamp(s.map.x(guarded(s, u)), s.lo, s.hi);
  }
  double guarded(const CompiledSegment& s, double u) const {
    if (!s.map.singular()) return u;
    const double g = s.map.u_guard();
    return s.map.singular_at_left() ? std::max(u, g) : std::min(u, 1.0 - g);
  }

  void fill_matrix(const CompiledSegment& s, double x, cmat& c) const {
    c.setZero();
    for (const Term& t : s.terms) c(static_cast<Eigen::Index>(t.i), static_cast<Eigen::Index>(t.j)) = t.constant ? t.value : t.expr(x);
  }
  void fill_forcing(const CompiledSegment& s, double x, cvec& g) const {
    g.setZero();
    for (const Term& t : s.forcing) g(static_cast<Eigen::Index>(t.i)) = t.constant ? t.value : t.expr(x);
  }

 private:
  void add_segment(const FirstOrderSystem& sys, double a, double b, double la, double ra) {
    CompiledSegment seg;
    seg.map = SegmentMap(a, b, la, ra);
    seg.lo = std::nextafter(a, b);
    seg.hi = std::nextafter(b, a);
    if (seg.lo > seg.hi) seg.lo = seg.hi = 0.5 * (a + b);
    const double mid = 0.5 * (a + b);
    auto term = [&](std::size_t i, std::size_t j, const CoefficientFunction& f, std::vector<Term>& out) {
      if (f.pieces().size() == 1 && f.pieces().front().expr.is_zero()) return;
      const Expr& e = f.pieces()[f.piece_index(mid)].expr;
      if (e.is_zero()) return;
      Term t;
      t.i = i;
      t.j = j;
      t.expr = e;
      t.constant = e.is_constant();
      if (t.constant) t.value = *e.constant_value();
      out.push_back(std::move(t));
    };
    for (std::size_t i = 0; i < sys.dim; ++i)
      for (std::size_t j = 0; j < sys.dim; ++j) term(i, j, sys.entry(i, j), seg.terms);
    for (std::size_t i = 0; i < sys.dim; ++i) term(i, 0, sys.forcing[i], seg.forcing);
    segments_.push_back(std::move(seg));
  }

  std::size_t dim_;
  std::vector<CompiledSegment> segments_;
  std::vector<Jump> jumps_;
};

/// Dormand-Prince 5(4) tableau.
struct Dopri {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
};

struct Sample {
  double x = 0.0;
  double u = 0.0;
  std::size_t segment = 0;
  cmat state;
};

/// Integration engine shared by every solution built from one system.
class Integrator {
 public:
  Integrator(std::shared_ptr<const CompiledSystem> sys, ForcingMode mode, IvpOptions opts)
      : sys_(std::move(sys)), mode_(mode), opts_(std::move(opts)) {}

  const CompiledSystem& system() const noexcept { return *sys_; }

  /// Integrate from x = 0 over all segments, recording every accepted step.
  std::vector<Sample> run(const cmat& y0) const {
    std::vector<Sample> samples;
    cmat y = y0;
    std::size_t next_jump = 0;
    const auto& jumps = sys_->jumps();
    while (next_jump < jumps.size() && jumps[next_jump].x <= 0.0) ++next_jump;  // (0, 1] convention
    double h_x = 0.0;
    std::size_t steps = 0;
    const auto& segs = sys_->segments();
    samples.push_back({segs.front().map.a(), 0.0, 0, y});
    for (std::size_t s = 0; s < segs.size(); ++s) {
      const CompiledSegment& seg = segs[s];
      const double len = seg.map.b() - seg.map.a();
      double h = h_x > 0.0 ? std::min(1.0, h_x / len) : 0.05;
      if (seg.map.singular()) h = std::min(h, 0.05);
      y = advance(s, 0.0, 1.0, y, h, &samples, steps);
      h_x = h * len;
      while (next_jump < jumps.size() && jumps[next_jump].x <= seg.map.b()) {
        const Jump& j = jumps[next_jump++];
        y.row(static_cast<Eigen::Index>(j.i)) += j.weight * y.row(static_cast<Eigen::Index>(j.j));
      }
      if (s + 1 < segs.size()) samples.push_back({seg.map.b(), 0.0, s + 1, y});
      else samples.push_back({seg.map.b(), 1.0, s, y});
    }
    return samples;
  }

  /// State at x, re-integrated from the sample at or before x.
  cmat resume(const Sample& from, double x) const {
    const CompiledSegment& seg = sys_->segments()[from.segment];
    const double u_target = std::clamp(seg.map.u(x), from.u, 1.0);
    if (u_target <= from.u) return from.state;
    std::size_t steps = 0;
    double h = u_target - from.u;
    return advance(from.segment, from.u, u_target, from.state, h, nullptr, steps);
  }

 private:
  void rhs(const CompiledSegment& seg, double u, const cmat& y, cmat& dy, cmat& c, cvec& g) const {
    const double ug = sys_->guarded(seg, u);
    const double x = std::clamp(seg.map.x(ug), seg.lo, seg.hi);
    const double scale = seg.map.dx_du(ug);
    sys_->fill_matrix(seg, x, c);
    const Eigen::Index last = y.cols() - 1;
    switch (mode_) {
      case ForcingMode::none:
        dy.noalias() = c * y;
        break;
      case ForcingMode::direct:
        dy.noalias() = c * y;
        sys_->fill_forcing(seg, x, g);
        dy.col(last) += g;
        break;
      case ForcingMode::variation: {
        dy.leftCols(last).noalias() = c * y.leftCols(last);
        sys_->fill_forcing(seg, x, g);
        dy.col(last) = y.leftCols(last).partialPivLu().solve(g);
        break;
      }
    }
    dy *= scale;
  }

  /// Adaptive steps over [u0, u1] of one segment. On return h holds the
  /// last proposed step.
  cmat advance(std::size_t s, double u0, double u1, cmat y, double& h, std::vector<Sample>* record,
               std::size_t& steps) const {
    using D = Dopri;
    const CompiledSegment& seg = sys_->segments()[s];
    const Eigen::Index rows = y.rows(), cols = y.cols();
    cmat k1(rows, cols), k2(rows, cols), k3(rows, cols), k4(rows, cols), k5(rows, cols), k6(rows, cols),
        k7(rows, cols), tmp(rows, cols), ynew(rows, cols), err(rows, cols);
    cmat c(rows, rows);
    cvec g(rows);
    const double tol = opts_.tol;
    double u = u0;
    rhs(seg, u, y, k1, c, g);
    h = std::min(h, u1 - u0);
    while (u < u1) {
      if (++steps > opts_.max_steps)
        throw IntegrationError("step limit exceeded", seg.map.x(u), seg.map.x(std::min(u1, u + h)));
      bool last = false;
      if (u + h >= u1 || u1 - (u + h) < 1e-12 * (u1 - u0)) {
        h = u1 - u;
        last = true;
      }
      tmp = y + h * D::a21 * k1;
      rhs(seg, u + D::c2 * h, tmp, k2, c, g);
      tmp = y + h * (D::a31 * k1 + D::a32 * k2);
      rhs(seg, u + D::c3 * h, tmp, k3, c, g);
      tmp = y + h * (D::a41 * k1 + D::a42 * k2 + D::a43 * k3);
      rhs(seg, u + D::c4 * h, tmp, k4, c, g);
      tmp = y + h * (D::a51 * k1 + D::a52 * k2 + D::a53 * k3 + D::a54 * k4);
      rhs(seg, u + D::c5 * h, tmp, k5, c, g);
      tmp = y + h * (D::a61 * k1 + D::a62 * k2 + D::a63 * k3 + D::a64 * k4 + D::a65 * k5);
      rhs(seg, u + h, tmp, k6, c, g);
      ynew = y + h * (D::b1 * k1 + D::b3 * k3 + D::b4 * k4 + D::b5 * k5 + D::b6 * k6);
      rhs(seg, u + h, ynew, k7, c, g);
      err = h * (D::e1 * k1 + D::e3 * k3 + D::e4 * k4 + D::e5 * k5 + D::e6 * k6 + D::e7 * k7);

      double e = 0.0;
      for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) {
          const double sc = tol * (1.0 + std::max(std::abs(y(i, j)), std::abs(ynew(i, j))));
          e = std::max(e, std::abs(err(i, j)) / sc);
        }
      if (!std::isfinite(e))
        throw IntegrationError("non-finite state", seg.map.x(u), seg.map.x(u + h));

      if (e <= 1.0) {
        u = last ? u1 : u + h;
        y.swap(ynew);
        k1.swap(k7);
        if (record && u < u1) record->push_back({seg.map.x(u), u, s, y});
        const double fac = e == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(e, -0.2), 0.2, 5.0);
        if (!last) h *= fac;
        else h = std::max(h, std::min(h * fac, u1 - u0));
      } else {
        h *= std::clamp(0.9 * std::pow(e, -0.2), 0.1, 0.9);
        if (h < 1e-15 * std::max(1.0, std::abs(u)))
          throw IntegrationError("step size underflow", seg.map.x(u), seg.map.x(std::min(u1, u + 1e-12)));
      }
    }
    return y;
  }

  std::shared_ptr<const CompiledSystem> sys_;
  ForcingMode mode_;
  IvpOptions opts_;
};

}  // namespace detail

/// Matrix-valued solution of a linear system with a re-integrating evaluator.
class MatrixSolution {
 public:
  MatrixSolution() = default;
  MatrixSolution(const FirstOrderSystem& sys, const cmat& y0, ForcingMode mode, const IvpOptions& opts)
      : engine_(std::make_shared<detail::Integrator>(
            std::make_shared<detail::CompiledSystem>(sys, opts.breakpoints), mode, opts)) {
    samples_ = engine_->run(y0);
    grid_.reserve(samples_.size());
    for (const auto& s : samples_) grid_.push_back(s.x);
  }

  const std::vector<double>& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return samples_.size(); }
  const cmat& sample(std::size_t k) const { return samples_[k].state; }
  const cmat& final_state() const { return samples_.back().state; }

  cmat at(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("solution evaluated outside [0, 1]", x);
    auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - grid_.begin()) - 1;
    if (grid_[k] == x) return samples_[k].state;
    return engine_->resume(samples_[k], x);
  }

  /// Map every sample (and every off-grid evaluation) through fn.
  VectorTrajectory to_trajectory(std::function<cvec(const cmat&)> fn, std::vector<std::string> labels = {}) const {
    std::vector<cvec> values;
    values.reserve(samples_.size());
    for (const auto& s : samples_) values.push_back(fn(s.state));
    auto self = *this;
    return VectorTrajectory(grid_, std::move(values), [self, fn](double x) { return fn(self.at(x)); },
                            std::move(labels));
  }

 private:
  std::shared_ptr<const detail::Integrator> engine_;
  std::vector<detail::Sample> samples_;
  std::vector<double> grid_;
};

/// Solve y' = C y + g, y(0) = y0.
inline VectorTrajectory integrate_ivp(const FirstOrderSystem& system, const cvec& y0, const IvpOptions& opts = {}) {
  if (static_cast<std::size_t>(y0.size()) != system.dim) throw SpecError("initial vector has the wrong length");
  if (!(opts.tol > 0.0)) throw SpecError("IVP tolerance must be positive");
  const ForcingMode mode = system.has_forcing() ? ForcingMode::direct : ForcingMode::none;
  MatrixSolution sol(system, cmat(y0), mode, opts);
  return sol.to_trajectory([](const cmat& m) -> cvec { return m.col(0); }, system.labels);
}

}  // namespace qdiff
