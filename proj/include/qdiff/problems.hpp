#pragma once

// Ready-made operator specifications for the standard example families.

#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "qdiff/coeffs.hpp"
#include "qdiff/error.hpp"
#include "qdiff/operator.hpp"
#include "qdiff/quasisystem.hpp"

namespace qdiff {

namespace detail {

inline cmat identity(std::size_t k) {
  return cmat::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
}

}  // namespace detail

/// (p y'')'' - (q' y')' + r'' y = lambda y + f with clamped ends. Lambda sits
/// in the p_00 slot as -lambda.
inline OperatorSpec fourth_order_dirichlet(const CoefficientFunction& p, const CoefficientFunction& q,
                                           const CoefficientFunction& r) {
  OperatorSpec spec;
  spec.n = spec.m = 2;
  spec.s = 2.0;
  spec.A = spec.B = CoefficientSystem::sobolev(2);
  spec.U = detail::identity(4);
  spec.V = detail::identity(4);
  spec.Q = cmat::Zero(4, 4);
  const CoefficientFunction mq = -q;
  spec.set_p(2, 2, p);
  spec.set_p(1, 2, mq);
  spec.set_p(0, 2, r);
  spec.set_p(2, 1, mq);
  spec.set_p(1, 1, CoefficientFunction(2.0) * r);
  spec.set_p(2, 0, r);
  spec.set_p(0, 0, 0.0, -1.0);
  spec.lambda_convention = "p_00 = -lambda (L2 pairing of y^[0])";
  require_valid(spec, "fourth_order_dirichlet");
  return spec;
}

/// -y'' + q' y = lambda y + f with Dirichlet ends; quasi-derivative y' - q y.
inline OperatorSpec second_order_dirichlet(const CoefficientFunction& q) {
  OperatorSpec spec;
  spec.n = spec.m = 1;
  spec.s = 2.0;
  spec.A = spec.B = CoefficientSystem::sobolev(1);
  spec.U = detail::identity(2);
  spec.V = detail::identity(2);
  spec.Q = cmat::Zero(2, 2);
  spec.set_p(1, 1, 1.0);
  spec.set_p(0, 1, -q);
  spec.set_p(1, 0, -q);
  spec.set_p(0, 0, 0.0, -1.0);
  spec.lambda_convention = "p_00 = -lambda (L2 pairing of y^[0])";
  require_valid(spec, "second_order_dirichlet");
  return spec;
}

/// -i y''' - (p y')' + q' y = lambda y + f with periodic ends, s = 1.
inline OperatorSpec third_order_periodic(const CoefficientFunction& p, const CoefficientFunction& q) {
  OperatorSpec spec;
  spec.n = 2;
  spec.m = 1;
  spec.s = 1.0;
  spec.A = CoefficientSystem::sobolev(2);
  spec.B = CoefficientSystem::sobolev(1);
  spec.U = cmat::Zero(4, 4);
  spec.U(0, 0) = -1.0;
  spec.U(0, 2) = 1.0;
  spec.U(1, 1) = -1.0;
  spec.U(1, 3) = 1.0;
  spec.V = cmat::Zero(2, 2);
  spec.V(0, 0) = 1.0;
  spec.V(0, 1) = -1.0;
  spec.Q = cmat::Zero(2, 4);
  const CoefficientFunction mq = -q;
  spec.set_p(2, 1, complex(0.0, 1.0));
  spec.set_p(1, 1, p);
  spec.set_p(0, 1, mq);
  spec.set_p(1, 0, mq);
  spec.set_p(0, 0, 0.0, -1.0);
  spec.lambda_convention = "p_00 = -lambda (enters the y^[2] row)";
  require_valid(spec, "third_order_periodic");
  return spec;
}

// ---------------------------------------------------------------------------
// change of variables for the measure-coefficient beam

/// phi(x) = (x + H(x) - H(0)) / (1 + H(1) - H(0)) and its inverse xi, with
/// eta = H o xi.
class MeasureSubstitution {
 public:
  explicit MeasureSubstitution(CoefficientFunction h) : state_(std::make_shared<State>()) {
    State& s = *state_;
    s.H = std::move(h);
    if (!s.H.atoms().empty()) throw SpecError("H must be continuous (no atoms)");
    std::vector<Piece> dpieces;
    for (const Piece& p : s.H.pieces()) {
      if (p.left_alpha < 0.0 || p.right_alpha < 0.0) throw SpecError("H must be bounded");
      dpieces.push_back(Piece{p.a, p.b, p.expr.derivative(), 0.0, 0.0});
    }
    s.dH = CoefficientFunction::piecewise(std::move(dpieces));
    s.h0 = s.H(0.0).real();
    s.h1 = s.H(1.0).real();
    s.scale = 1.0 + s.h1 - s.h0;

    // Strictly increasing and continuous, checked on a fine grid and at joins.
    const int samples = 4096;
    double prev = s.h0;
    for (int k = 1; k <= samples; ++k) {
      const double x = static_cast<double>(k) / samples;
      const complex v = s.H(x);
      if (std::abs(v.imag()) > 0.0) throw SpecError("H must be real-valued");
      if (!(v.real() > prev)) throw SpecError("H is not strictly increasing near x = " + format_double(x));
      prev = v.real();
    }
    for (std::size_t k = 1; k < s.H.pieces().size(); ++k) {
      const Piece& l = s.H.pieces()[k - 1];
      const Piece& r = s.H.pieces()[k];
      const double jump = std::abs(l.expr(l.b) - r.expr(r.a));
      if (jump > 1e-12 * (1.0 + std::abs(s.h1 - s.h0)))
        throw SpecError("H jumps at x = " + format_double(l.b));
    }
  }

  double phi(double x) const { return (x + state_->H.value(x).real() - state_->h0) / state_->scale; }
  double xi(double t) const { return state_->invert(t); }
  double scale() const noexcept { return state_->scale; }
  const CoefficientFunction& H() const noexcept { return state_->H; }

  /// Images of the given cut points (and of the H breakpoints) under phi.
  std::vector<double> image_cuts(const std::vector<double>& extra = {}) const {
    std::vector<double> t;
    for (double b : state_->H.breakpoints()) t.push_back(phi(b));
    for (double b : extra) t.push_back(phi(b));
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
  }

  /// xi' = D / (1 + H'(xi)).
  CoefficientFunction xi_prime() const {
    auto st = state_;
    return build("xi'", {}, [st](double t) {
      const double x = st->invert(t);
      return complex(st->scale / (1.0 + st->dH.value(x).real()));
    });
  }
  /// eta' = H'(xi) D / (1 + H'(xi)).
  CoefficientFunction eta_prime() const {
    auto st = state_;
    return build("eta'", {}, [st](double t) {
      const double x = st->invert(t);
      const double d = st->dH.value(x).real();
      return complex(d * st->scale / (1.0 + d));
    });
  }
  CoefficientFunction xi_function() const {
    auto st = state_;
    return build("xi", {}, [st](double t) { return complex(st->invert(t)); });
  }
  /// f o xi, cut at the images of the breakpoints of f.
  CoefficientFunction compose(const CoefficientFunction& f, const std::string& name) const {
    if (f.is_zero()) return CoefficientFunction(0.0);
    if (auto c = f.constant_value()) return CoefficientFunction(*c);
    if (!f.atoms().empty()) throw UnsupportedSpec("cannot compose a coefficient with atoms");
    auto st = state_;
    return build(name, f.breakpoints(), [st, f](double t) { return f.value(st->invert(t)); });
  }

 private:
  struct State {
    CoefficientFunction H, dH;
    double h0 = 0.0, h1 = 1.0, scale = 2.0;

    double invert(double t) const {
      // Consecutive calls at the same point are common (several coefficients
      // of one system are evaluated together).
      thread_local const State* last_state = nullptr;
      thread_local double last_t = NAN, last_x = NAN;
      if (last_state == this && last_t == t) return last_x;
      double x;
      if (t <= 0.0) x = 0.0;
      else if (t >= 1.0) x = 1.0;
      else {
        auto f = [this, t](double y) {
          const double v = (y + H.value(y).real() - h0) / scale - t;
          const double d = (1.0 + dH.value(y).real()) / scale;
          return std::make_pair(v, d);
        };
        std::uintmax_t iters = 100;
        x = boost::math::tools::newton_raphson_iterate(f, t, 0.0, 1.0, 52, iters);
      }
      last_state = this;
      last_t = t;
      last_x = x;
      return x;
    }
  };

  CoefficientFunction build(const std::string& name, const std::vector<double>& extra,
                            std::function<complex(double)> fn) const {
    std::vector<double> cuts{0.0};
    for (double t : image_cuts(extra))
      if (t > 0.0 && t < 1.0) cuts.push_back(t);
    cuts.push_back(1.0);
    CustomFunction cf;
    cf.name = name;
    cf.value = std::move(fn);
    cf.real_valued = true;
    const Expr e = Expr::custom(std::move(cf));
    std::vector<Piece> pieces;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) pieces.push_back(Piece{cuts[k], cuts[k + 1], e});
    return CoefficientFunction::piecewise(std::move(pieces));
  }

  std::shared_ptr<State> state_;
};

/// Beam with measure-type leading coefficient p^{-1} = H' after the change
/// of variables x = xi(t). Lambda pairs with xi' y^[0] conj(z^[0]).
inline OperatorSpec fourth_order_measure(const CoefficientFunction& H, const CoefficientFunction& q,
                                         const CoefficientFunction& r) {
  const MeasureSubstitution sub(H);
  const CoefficientFunction dxi = sub.xi_prime(), deta = sub.eta_prime();
  const CoefficientFunction sigma = sub.compose(q, "q(xi)"), rho = sub.compose(r, "r(xi)");
  const CoefficientFunction root = pow(deta, 0.5);

  OperatorSpec spec;
  spec.n = spec.m = 2;
  spec.s = 2.0;
  CoefficientSystem a(2);
  a.set(0, 1, dxi).set(1, 2, deta);
  spec.A = spec.B = a;
  spec.U = detail::identity(4);
  spec.V = detail::identity(4);
  spec.Q = cmat::Zero(4, 4);
  const CoefficientFunction mroot_sigma = -(root * sigma);
  const CoefficientFunction root_rho = root * rho;
  spec.set_p(2, 2, 1.0);
  spec.set_p(1, 2, mroot_sigma);
  spec.set_p(0, 2, root_rho);
  spec.set_p(2, 1, mroot_sigma);
  spec.set_p(1, 1, CoefficientFunction(2.0) * dxi * rho);
  spec.set_p(2, 0, root_rho);
  spec.set_p(0, 0, 0.0, -dxi);
  spec.lambda_convention = "p_00 = -lambda xi' (L2 pairing in the original variable)";
  require_valid(spec, "fourth_order_measure");
  return spec;
}

/// Right-hand side f (in the original variable) as a functional on the
/// substituted problem: f_0 = xi' (f o xi).
inline FunctionalData measure_rhs(const CoefficientFunction& H, const CoefficientFunction& f) {
  const MeasureSubstitution sub(H);
  return FunctionalData::scalar(2, sub.xi_prime() * sub.compose(f, "f(xi)"));
}

}  // namespace qdiff
