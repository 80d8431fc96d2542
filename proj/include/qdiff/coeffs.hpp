#pragma once

// Piecewise closed-form coefficient functions on [0, 1].

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qdiff/error.hpp"
#include "qdiff/expr.hpp"
#include "qdiff/quadrature.hpp"

namespace qdiff {

/// One closed-form stretch of a coefficient. A negative alpha marks an
/// integrable blow-up ~ |x - endpoint|^alpha at that end.
struct Piece {
  double a = 0.0, b = 1.0;
  Expr expr;
  double left_alpha = 0.0;
  double right_alpha = 0.0;
};

/// Point mass; only the measure (string) problems use these.
struct Atom {
  double location = 0.0;
  complex weight{};
};

struct MonotonicityReport {
  bool strictly_monotone = true;
  /// Subinterval on which |f| vanishes, when not monotone.
  std::optional<std::pair<double, double>> witness;
};

class Primitive;

class CoefficientFunction {
 public:
  CoefficientFunction() : CoefficientFunction(Expr(0.0)) {}
  CoefficientFunction(double c) : CoefficientFunction(Expr(c)) {}  // NOLINT
  CoefficientFunction(complex c) : CoefficientFunction(Expr(c)) {}  // NOLINT
  CoefficientFunction(Expr e) {  // NOLINT
    pieces_.push_back(Piece{0.0, 1.0, std::move(e)});
    split_at_switch_points();
  }

  static CoefficientFunction parse(std::string_view text) { return CoefficientFunction(Expr::parse(text)); }

  /// Pieces must tile [0, 1] in order; exponents must lie in (-1, 0].
  static CoefficientFunction piecewise(std::vector<Piece> pieces) {
    if (pieces.empty()) throw SpecError("piecewise coefficient needs at least one piece");
    if (pieces.front().a != 0.0 || pieces.back().b != 1.0)
      throw SpecError("pieces must cover [0, 1]");
    for (std::size_t k = 0; k < pieces.size(); ++k) {
      const Piece& p = pieces[k];
      if (!(p.b > p.a)) throw SpecError("empty or reversed piece [" + format_double(p.a) + ", " + format_double(p.b) + "]");
      if (k + 1 < pieces.size() && pieces[k + 1].a != p.b)
        throw SpecError("pieces overlap or leave a gap at " + format_double(p.b));
      for (double alpha : {p.left_alpha, p.right_alpha})
        if (!(alpha > -1.0 && alpha <= 0.0))
          throw SpecError("singular exponent " + format_double(alpha) + " is not integrable");
    }
    CoefficientFunction f;
    f.pieces_ = std::move(pieces);
    f.split_at_switch_points();
    return f;
  }

  CoefficientFunction with_atoms(std::vector<Atom> atoms) const {
    for (const Atom& at : atoms)
      if (!(at.location >= 0.0 && at.location <= 1.0)) throw SpecError("atom outside [0, 1]");
    std::sort(atoms.begin(), atoms.end(), [](const Atom& l, const Atom& r) { return l.location < r.location; });
    CoefficientFunction f = *this;
    f.atoms_ = std::move(atoms);
    return f;
  }

  const std::vector<Piece>& pieces() const noexcept { return pieces_; }
  const std::vector<Atom>& atoms() const noexcept { return atoms_; }

  /// Interior piece boundaries, sorted.
  std::vector<double> breakpoints() const {
    std::vector<double> out;
    for (std::size_t k = 1; k < pieces_.size(); ++k) out.push_back(pieces_[k].a);
    return out;
  }

  bool is_zero() const {
    return atoms_.empty() && std::all_of(pieces_.begin(), pieces_.end(), [](const Piece& p) { return p.expr.is_zero(); });
  }
  std::optional<complex> constant_value() const {
    if (!atoms_.empty()) return std::nullopt;
    std::optional<complex> v;
    for (const Piece& p : pieces_) {
      auto c = p.expr.constant_value();
      if (!c || (v && *v != *c)) return std::nullopt;
      v = c;
    }
    return v;
  }
  bool is_real_valued() const {
    return std::all_of(pieces_.begin(), pieces_.end(), [](const Piece& p) { return p.expr.is_real_valued(); }) &&
           std::all_of(atoms_.begin(), atoms_.end(), [](const Atom& a) { return a.weight.imag() == 0.0; });
  }
  bool has_singularities() const {
    return std::any_of(pieces_.begin(), pieces_.end(),
                       [](const Piece& p) { return p.left_alpha < 0.0 || p.right_alpha < 0.0; });
  }

  std::size_t piece_index(double x) const {
    auto it = std::upper_bound(pieces_.begin(), pieces_.end(), x,
                               [](double v, const Piece& p) { return v < p.a; });
    if (it == pieces_.begin()) return 0;
    return static_cast<std::size_t>(it - pieces_.begin()) - 1;
  }

  /// Pointwise value. At a breakpoint the piece to the right is used.
  complex operator()(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("evaluation outside [0, 1]", x);
    for (const Atom& at : atoms_)
      if (at.location == x) throw DomainError("evaluation at an atom", x);
    const Piece& p = pieces_[piece_index(x)];
    if ((x == p.a && p.left_alpha < 0.0) || (x == p.b && p.right_alpha < 0.0))
      throw DomainError("evaluation at a singular endpoint", x);
    return p.expr(x);
  }

  /// Value without domain checks; callers guarantee x is strictly inside a
  /// piece or at a regular endpoint. Used on integrator hot paths.
  complex value(double x) const { return pieces_[piece_index(x)].expr(x); }

  /// Clip the pieces to [a, b], keeping endpoint singularities that survive.
  std::vector<Segment> segments(double a, double b) const {
    std::vector<Segment> out;
    for (const Piece& p : pieces_) {
      const double lo = std::max(a, p.a), hi = std::min(b, p.b);
      if (!(hi > lo)) continue;
      out.push_back({lo, hi, lo == p.a ? p.left_alpha : 0.0, hi == p.b ? p.right_alpha : 0.0});
    }
    return out;
  }

  /// Integral over [a, b], including atoms in (a, b].
  complex integrate(double a, double b, const QuadratureOptions& opts = {}) const {
    if (!(a <= b) || a < 0.0 || b > 1.0) throw DomainError("integration bounds out of order or outside [0, 1]", a);
    complex total = integrate_segments([this](double x) { return value(x); }, segments(a, b), opts);
    for (const Atom& at : atoms_)
      if (at.location > a && at.location <= b) total += at.weight;
    return total;
  }

  Primitive antiderivative(const QuadratureOptions& opts = {}) const;

  /// Whether the primitive of |f| is strictly increasing: |f| must not
  /// vanish on any subinterval of width >= resolution.
  MonotonicityReport strictly_monotone_primitive(double resolution = 0x1p-20) const {
    for (const Piece& p : pieces_) {
      const bool flat_ops = p.expr.may_vanish_on_intervals();
      std::size_t n;
      if (!flat_ops) n = 32;
      else if (has_only_custom(p)) n = 4096;
      else n = static_cast<std::size_t>(std::ceil((p.b - p.a) / (0.5 * resolution)));
      n = std::max<std::size_t>(n, 2);
      auto zero_at = [&](std::size_t k) {
        double x = p.a + (p.b - p.a) * static_cast<double>(k) / static_cast<double>(n);
        if (k == 0 && p.left_alpha < 0.0) return false;
        if (k == n && p.right_alpha < 0.0) return false;
        return std::abs(p.expr(x)) == 0.0;
      };
      if (!flat_ops) {
        bool all_zero = true;
        for (std::size_t k = 0; k <= n && all_zero; ++k) all_zero = zero_at(k);
        if (all_zero) return {false, std::pair{p.a, p.b}};
        continue;
      }
      std::size_t run_start = 0;
      bool in_run = false;
      for (std::size_t k = 0; k <= n; ++k) {
        const bool z = zero_at(k);
        if (z && !in_run) {
          in_run = true;
          run_start = k;
        }
        if ((!z || k == n) && in_run) {
          const std::size_t run_end = z ? k : k - 1;
          const double lo = p.a + (p.b - p.a) * static_cast<double>(run_start) / static_cast<double>(n);
          const double hi = p.a + (p.b - p.a) * static_cast<double>(run_end) / static_cast<double>(n);
          if (hi - lo >= 0.5 * resolution) return {false, std::pair{lo, hi}};
          in_run = false;
        }
      }
    }
    return {};
  }

  /// Human-readable form in the expression grammar.
  std::string str() const {
    bool same = true;
    for (const Piece& p : pieces_)
      same = same && p.expr.str() == pieces_.front().expr.str() && p.left_alpha == 0.0 && p.right_alpha == 0.0;
    std::string s;
    if (same) {
      s = pieces_.front().expr.str();
    } else {
      s = "piecewise{";
      for (std::size_t k = 0; k < pieces_.size(); ++k) {
        const Piece& p = pieces_[k];
        if (k) s += "; ";
        s += "[" + format_double(p.a) + "," + format_double(p.b) + "]: " + p.expr.str();
        if (p.left_alpha < 0.0) s += " (sing a " + format_double(p.left_alpha) + ")";
        if (p.right_alpha < 0.0) s += " (sing b " + format_double(p.right_alpha) + ")";
      }
      s += "}";
    }
    for (const Atom& at : atoms_) {
      const Expr w(at.weight);
      s += " + " + w.str() + "*delta(x-" + format_double(at.location) + ")";
    }
    return s;
  }

  /// Apply an expression transform piece by piece.
  CoefficientFunction map(const std::function<Expr(const Expr&)>& fn,
                          const std::function<double(double)>& alpha_rule) const {
    if (!atoms_.empty()) throw Error("nonlinear operation on a coefficient with atoms");
    CoefficientFunction out;
    out.pieces_.clear();
    for (const Piece& p : pieces_)
      out.pieces_.push_back(Piece{p.a, p.b, fn(p.expr), alpha_rule(p.left_alpha), alpha_rule(p.right_alpha)});
    out.split_at_switch_points();
    return out;
  }

  friend CoefficientFunction operator+(const CoefficientFunction& f, const CoefficientFunction& g) {
    CoefficientFunction out = combine(f, g, [](const Expr& a, const Expr& b) { return a + b; },
                                      [](double a, double b) { return std::min(a, b); });
    out.atoms_ = merge_atoms(f.atoms_, g.atoms_, 1.0);
    return out;
  }
  friend CoefficientFunction operator-(const CoefficientFunction& f, const CoefficientFunction& g) {
    CoefficientFunction out = combine(f, g, [](const Expr& a, const Expr& b) { return a - b; },
                                      [](double a, double b) { return std::min(a, b); });
    out.atoms_ = merge_atoms(f.atoms_, g.atoms_, -1.0);
    return out;
  }
  friend CoefficientFunction operator-(const CoefficientFunction& f) {
    CoefficientFunction out = f.without_atoms().map([](const Expr& e) { return -e; }, [](double a) { return a; });
    for (const Atom& at : f.atoms_) out.atoms_.push_back({at.location, -at.weight});
    return out;
  }
  friend CoefficientFunction operator*(const CoefficientFunction& f, const CoefficientFunction& g) {
    if (!f.atoms_.empty() && !g.atoms_.empty()) throw Error("product of two coefficients with atoms");
    CoefficientFunction out = combine(f, g, [](const Expr& a, const Expr& b) { return a * b; },
                                      [](double a, double b) {
                                        if (a + b <= -1.0) throw SpecError("product of singular coefficients is not integrable");
                                        return a + b;
                                      });
    for (const Atom& at : f.atoms_) out.atoms_.push_back({at.location, at.weight * g.value(at.location)});
    for (const Atom& at : g.atoms_) out.atoms_.push_back({at.location, at.weight * f.value(at.location)});
    out.drop_zero_atoms();
    return out;
  }
  friend CoefficientFunction operator/(const CoefficientFunction& f, const CoefficientFunction& g) {
    if (!g.atoms_.empty()) throw Error("division by a coefficient with atoms");
    CoefficientFunction out = combine(f, g, [](const Expr& a, const Expr& b) { return a / b; },
                                      [](double a, double b) { return std::min(0.0, a - b); });
    for (const Atom& at : f.atoms_) out.atoms_.push_back({at.location, at.weight / g.value(at.location)});
    return out;
  }

  friend CoefficientFunction abs(const CoefficientFunction& f) {
    return f.map([](const Expr& e) { return abs(e); }, [](double a) { return a; });
  }
  friend CoefficientFunction conj(const CoefficientFunction& f) {
    CoefficientFunction out = f.without_atoms().map([](const Expr& e) { return conj(e); }, [](double a) { return a; });
    for (const Atom& at : f.atoms_) out.atoms_.push_back({at.location, std::conj(at.weight)});
    return out;
  }
  friend CoefficientFunction pow(const CoefficientFunction& f, double exponent) {
    if (exponent == 1.0) return f;
    return f.map([exponent](const Expr& e) { return pow(e, Expr(exponent)); },
                 [exponent](double a) {
                   const double alpha = std::min(0.0, a * exponent);
                   if (alpha <= -1.0) throw SpecError("power of a singular coefficient is not integrable");
                   return alpha;
                 });
  }

 private:
  CoefficientFunction without_atoms() const {
    CoefficientFunction f = *this;
    f.atoms_.clear();
    return f;
  }

  static bool has_only_custom(const Piece& p) {
    // A custom function without any step(): switch points cannot be located
    // symbolically, so a coarser scan is used.
    return p.expr.may_vanish_on_intervals() && p.expr.switch_points(p.a, p.b, 8).empty() &&
           p.expr.str().find("step(") == std::string::npos;
  }

  void drop_zero_atoms() {
    atoms_.erase(std::remove_if(atoms_.begin(), atoms_.end(), [](const Atom& a) { return a.weight == complex{}; }),
                 atoms_.end());
  }

  static std::vector<Atom> merge_atoms(const std::vector<Atom>& f, const std::vector<Atom>& g, double sign) {
    std::vector<Atom> out = f;
    for (const Atom& at : g) {
      auto it = std::find_if(out.begin(), out.end(), [&](const Atom& o) { return o.location == at.location; });
      if (it != out.end()) it->weight += sign * at.weight;
      else out.push_back({at.location, sign * at.weight});
    }
    std::sort(out.begin(), out.end(), [](const Atom& l, const Atom& r) { return l.location < r.location; });
    return out;
  }

  template <class Op, class AlphaRule>
  static CoefficientFunction combine(const CoefficientFunction& f, const CoefficientFunction& g, Op op,
                                     AlphaRule rule) {
    std::vector<double> cuts{0.0, 1.0};
    for (const Piece& p : f.pieces_) cuts.push_back(p.a);
    for (const Piece& p : g.pieces_) cuts.push_back(p.a);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    CoefficientFunction out;
    out.pieces_.clear();
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      const double lo = cuts[k], hi = cuts[k + 1];
      const double mid = 0.5 * (lo + hi);
      const Piece& pf = f.pieces_[f.piece_index(mid)];
      const Piece& pg = g.pieces_[g.piece_index(mid)];
      const double fl = lo == pf.a ? pf.left_alpha : 0.0, fr = hi == pf.b ? pf.right_alpha : 0.0;
      const double gl = lo == pg.a ? pg.left_alpha : 0.0, gr = hi == pg.b ? pg.right_alpha : 0.0;
      out.pieces_.push_back(Piece{lo, hi, op(pf.expr, pg.expr), rule(fl, gl), rule(fr, gr)});
    }
    return out;
  }

  void split_at_switch_points() {
    std::vector<Piece> out;
    for (const Piece& p : pieces_) {
      std::vector<double> cuts = p.expr.is_constant() ? std::vector<double>{} : p.expr.switch_points(p.a, p.b);
      double lo = p.a;
      double la = p.left_alpha;
      for (double c : cuts) {
        out.push_back(Piece{lo, c, p.expr, la, 0.0});
        lo = c;
        la = 0.0;
      }
      out.push_back(Piece{lo, p.b, p.expr, la, p.right_alpha});
    }
    pieces_ = std::move(out);
  }

  std::vector<Piece> pieces_;
  std::vector<Atom> atoms_;
};

/// F(x) = integral of f over [0, x] (atoms included, right-continuous).
class Primitive {
 public:
  explicit Primitive(CoefficientFunction f, const QuadratureOptions& opts = {})
      : f_(std::move(f)), opts_(opts) {
    cuts_.push_back(0.0);
    for (double b : f_.breakpoints()) cuts_.push_back(b);
    for (const Atom& at : f_.atoms()) cuts_.push_back(at.location);
    cuts_.push_back(1.0);
    std::sort(cuts_.begin(), cuts_.end());
    cuts_.erase(std::unique(cuts_.begin(), cuts_.end()), cuts_.end());
    cumulative_.resize(cuts_.size());
    cumulative_[0] = 0.0;
    for (std::size_t k = 1; k < cuts_.size(); ++k)
      cumulative_[k] = cumulative_[k - 1] + f_.integrate(cuts_[k - 1], cuts_[k], opts_);
  }

  complex operator()(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("primitive evaluated outside [0, 1]", x);
    auto it = std::upper_bound(cuts_.begin(), cuts_.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - cuts_.begin()) - 1;
    if (cuts_[k] == x) return cumulative_[k];
    return cumulative_[k] + integrate_segments([this](double t) { return f_.value(t); }, f_.segments(cuts_[k], x), opts_);
  }

  const CoefficientFunction& integrand() const noexcept { return f_; }

 private:
  CoefficientFunction f_;
  QuadratureOptions opts_;
  std::vector<double> cuts_;
  std::vector<complex> cumulative_;
};

inline Primitive CoefficientFunction::antiderivative(const QuadratureOptions& opts) const {
  return Primitive(*this, opts);
}

}  // namespace qdiff
