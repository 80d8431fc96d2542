#pragma once

// Closed-form scalar expressions in x: the grammar coefficient pieces are
// written in.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?          (right associative)
//   primary := number | 'x' | 'pi' | 'i' | func '(' expr ')' | '(' expr ')'
//   func    := sin | cos | exp | log | abs | step | conj
//
// step(u) is the Heaviside function with step(0) = 0.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qdiff/error.hpp"

namespace qdiff {

using complex = std::complex<double>;

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// A user-supplied function of x embedded in an expression, e.g. a
/// numerically inverted change of variables.
struct CustomFunction {
  std::string name;
  std::function<complex(double)> value;
  std::function<complex(double)> derivative;  // optional
  std::string derivative_name;
  bool real_valued = true;
};

class Expr {
 public:
  enum class Op : std::uint8_t {
    constant, variable, add, sub, mul, div, pow, neg,
    sin, cos, exp, log, abs, step, conj, custom
  };

  Expr() : Expr(complex{0.0, 0.0}) {}
  Expr(double c) : Expr(complex{c, 0.0}) {}  // NOLINT(google-explicit-constructor)
  Expr(complex c) : node_(make(Op::constant, c)) {}  // NOLINT(google-explicit-constructor)

  static Expr variable() { return Expr(make(Op::variable, {})); }
  static Expr custom(CustomFunction fn) {
    auto n = std::make_shared<Node>();
    n->op = Op::custom;
    n->fn = std::make_shared<const CustomFunction>(std::move(fn));
    return Expr(std::move(n));
  }
  static Expr parse(std::string_view text);

  complex operator()(double x) const { return eval(*node_, x); }

  Op op() const noexcept { return node_->op; }
  bool is_constant() const noexcept { return node_->op == Op::constant; }
  std::optional<complex> constant_value() const {
    if (is_constant()) return node_->value;
    return std::nullopt;
  }
  bool is_zero() const noexcept { return is_constant() && node_->value == complex{}; }
  bool is_one() const noexcept { return is_constant() && node_->value == complex{1.0, 0.0}; }

  /// Structural test: true when the expression cannot produce non-real values.
  bool is_real_valued() const { return real_valued(*node_); }
  /// True when the expression contains step() or a custom function, i.e. may
  /// vanish on whole intervals without being identically zero.
  bool may_vanish_on_intervals() const { return has_flat_ops(*node_); }

  /// Symbolic d/dx (almost-everywhere derivative; step' = 0).
  Expr derivative() const;

  /// Points in (lo, hi) where the argument of a step() or abs() changes sign:
  /// jumps and kinks that integrators must not step across. Detected on a
  /// uniform grid of `samples` cells, then bisected to machine precision.
  std::vector<double> switch_points(double lo, double hi, std::size_t samples = 1024) const {
    std::vector<double> out;
    collect_switch_points(*node_, lo, hi, samples, out);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::string str() const { return print(*node_).first; }

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  friend Expr pow(const Expr& base, const Expr& exponent);
  friend Expr sin(const Expr& u) { return unary(Op::sin, u); }
  friend Expr cos(const Expr& u) { return unary(Op::cos, u); }
  friend Expr exp(const Expr& u) { return unary(Op::exp, u); }
  friend Expr log(const Expr& u) { return unary(Op::log, u); }
  friend Expr abs(const Expr& u) { return unary(Op::abs, u); }
  friend Expr step(const Expr& u) { return unary(Op::step, u); }
  friend Expr conj(const Expr& u);

 private:
  struct Node {
    Op op = Op::constant;
    complex value{};
    std::shared_ptr<const Node> lhs, rhs;
    std::shared_ptr<const CustomFunction> fn;
  };
  using NodePtr = std::shared_ptr<const Node>;

  explicit Expr(NodePtr n) : node_(std::move(n)) {}

  static NodePtr make(Op op, complex v, NodePtr l = nullptr, NodePtr r = nullptr) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->value = v;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    return n;
  }
  static Expr binary(Op op, const Expr& a, const Expr& b) {
    return Expr(make(op, {}, a.node_, b.node_));
  }
  static Expr unary(Op op, const Expr& u);

  static complex power(complex b, complex e) {
    if (b.imag() == 0.0 && e.imag() == 0.0) {
      const double be = b.real(), ee = e.real();
      if (be >= 0.0 || ee == std::floor(ee)) return std::pow(be, ee);
    }
    if (b == complex{}) return e.real() > 0.0 ? complex{} : complex{INFINITY, 0.0};
    if (e.imag() == 0.0 && e.real() == std::floor(e.real()) && std::abs(e.real()) <= 64.0) {
      // Exact integer powers keep i^2 == -1.
      int k = static_cast<int>(std::abs(e.real()));
      complex r{1.0, 0.0}, base = b;
      for (; k; k >>= 1, base *= base)
        if (k & 1) r *= base;
      return e.real() < 0.0 ? 1.0 / r : r;
    }
    return std::pow(b, e);
  }

  static complex eval(const Node& n, double x) {
    switch (n.op) {
      case Op::constant: return n.value;
      case Op::variable: return x;
      case Op::add: return eval(*n.lhs, x) + eval(*n.rhs, x);
      case Op::sub: return eval(*n.lhs, x) - eval(*n.rhs, x);
      case Op::mul: return eval(*n.lhs, x) * eval(*n.rhs, x);
      case Op::div: return eval(*n.lhs, x) / eval(*n.rhs, x);
      case Op::pow: return power(eval(*n.lhs, x), eval(*n.rhs, x));
      case Op::neg: return -eval(*n.lhs, x);
      case Op::sin: {
        const complex u = eval(*n.lhs, x);
        return u.imag() == 0.0 ? complex{std::sin(u.real())} : std::sin(u);
      }
      case Op::cos: {
        const complex u = eval(*n.lhs, x);
        return u.imag() == 0.0 ? complex{std::cos(u.real())} : std::cos(u);
      }
      case Op::exp: {
        const complex u = eval(*n.lhs, x);
        return u.imag() == 0.0 ? complex{std::exp(u.real())} : std::exp(u);
      }
      case Op::log: {
        const complex u = eval(*n.lhs, x);
        return (u.imag() == 0.0 && u.real() > 0.0) ? complex{std::log(u.real())} : std::log(u);
      }
      case Op::abs: return std::abs(eval(*n.lhs, x));
      case Op::step: return eval(*n.lhs, x).real() > 0.0 ? 1.0 : 0.0;
      case Op::conj: return std::conj(eval(*n.lhs, x));
      case Op::custom: return n.fn->value(x);
    }
    return {};
  }

  static bool real_valued(const Node& n) {
    switch (n.op) {
      case Op::constant: return n.value.imag() == 0.0;
      case Op::variable: case Op::abs: case Op::step: return true;
      case Op::add: case Op::sub: case Op::mul: case Op::div:
        return real_valued(*n.lhs) && real_valued(*n.rhs);
      case Op::neg: case Op::sin: case Op::cos: case Op::exp: case Op::conj:
        return real_valued(*n.lhs);
      case Op::log:
        return n.lhs->op == Op::abs ||
               (n.lhs->op == Op::constant && n.lhs->value.imag() == 0.0 && n.lhs->value.real() > 0.0);
      case Op::pow: {
        if (!real_valued(*n.lhs) || !real_valued(*n.rhs)) return false;
        const Node& b = *n.lhs;
        const Node& e = *n.rhs;
        const bool nonneg_base = b.op == Op::abs || b.op == Op::step ||
                                 (b.op == Op::constant && b.value.real() >= 0.0);
        const bool integer_exp = e.op == Op::constant && e.value.real() == std::floor(e.value.real());
        return nonneg_base || integer_exp;
      }
      case Op::custom: return n.fn->real_valued;
    }
    return false;
  }

  static void collect_switch_points(const Node& n, double lo, double hi, std::size_t samples,
                                    std::vector<double>& out) {
    if (n.lhs) collect_switch_points(*n.lhs, lo, hi, samples, out);
    if (n.rhs) collect_switch_points(*n.rhs, lo, hi, samples, out);
    if (n.op != Op::step && n.op != Op::abs) return;
    const Node& arg = *n.lhs;
    auto positive = [&](double x) { return eval(arg, x).real() > 0.0; };
    double prev_x = lo;
    bool prev = positive(lo);
    for (std::size_t k = 1; k <= samples; ++k) {
      const double x = k == samples ? hi : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(samples);
      const bool cur = positive(x);
      if (cur != prev) {
        double a = prev_x, b = x;
        for (int it = 0; it < 200; ++it) {
          const double mid = 0.5 * (a + b);
          if (mid <= a || mid >= b) break;
          if (positive(mid) == prev) a = mid;
          else b = mid;
        }
        // Report the side where the argument is non-positive.
        const double root = prev ? b : a;
        if (root > lo && root < hi) out.push_back(root);
      }
      prev = cur;
      prev_x = x;
    }
  }

  static bool has_flat_ops(const Node& n) {
    if (n.op == Op::step || n.op == Op::custom) return true;
    return (n.lhs && has_flat_ops(*n.lhs)) || (n.rhs && has_flat_ops(*n.rhs));
  }

  static Expr derivative(const NodePtr& p);

  // Precedence: 1 sum, 2 product, 3 unary minus, 4 power, 5 atom.
  static std::pair<std::string, int> print(const Node& n);

  NodePtr node_;

  friend class ExprParser;
};

// ---------------------------------------------------------------------------
// builders with constant folding

inline Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (a.is_constant() && b.is_constant()) return Expr(a.node_->value + b.node_->value);
  return Expr::binary(Expr::Op::add, a, b);
}

inline Expr operator-(const Expr& a, const Expr& b) {
  if (b.is_zero()) return a;
  if (a.is_zero()) return -b;
  if (a.is_constant() && b.is_constant()) return Expr(a.node_->value - b.node_->value);
  return Expr::binary(Expr::Op::sub, a, b);
}

inline Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_zero() || b.is_zero()) return Expr(0.0);
  if (a.is_one()) return b;
  if (b.is_one()) return a;
  if (a.is_constant() && b.is_constant()) return Expr(a.node_->value * b.node_->value);
  if (a.is_constant() && a.node_->value == complex{-1.0, 0.0}) return -b;
  if (b.is_constant() && b.node_->value == complex{-1.0, 0.0}) return -a;
  return Expr::binary(Expr::Op::mul, a, b);
}

inline Expr operator/(const Expr& a, const Expr& b) {
  if (a.is_zero() && !b.is_zero()) return Expr(0.0);
  if (b.is_one()) return a;
  if (a.is_constant() && b.is_constant() && !b.is_zero())
    return Expr(a.node_->value / b.node_->value);
  return Expr::binary(Expr::Op::div, a, b);
}

inline Expr operator-(const Expr& a) {
  if (a.is_constant()) return Expr(-a.node_->value);
  if (a.node_->op == Expr::Op::neg) return Expr(a.node_->lhs);
  return Expr(Expr::make(Expr::Op::neg, {}, a.node_));
}

inline Expr pow(const Expr& base, const Expr& exponent) {
  if (exponent.is_zero()) return Expr(1.0);
  if (exponent.is_one()) return base;
  if (base.is_constant() && exponent.is_constant())
    return Expr(Expr::power(base.node_->value, exponent.node_->value));
  return Expr::binary(Expr::Op::pow, base, exponent);
}

inline Expr conj(const Expr& u) {
  if (u.is_real_valued()) return u;
  if (u.is_constant()) return Expr(std::conj(u.node_->value));
  if (u.node_->op == Expr::Op::conj) return Expr(u.node_->lhs);
  return Expr(Expr::make(Expr::Op::conj, {}, u.node_));
}

inline Expr Expr::unary(Op op, const Expr& u) {
  if (u.is_constant()) {
    Node tmp;
    tmp.op = op;
    tmp.lhs = u.node_;
    return Expr(eval(tmp, 0.0));
  }
  return Expr(make(op, {}, u.node_));
}

// ---------------------------------------------------------------------------
// derivative

inline Expr Expr::derivative() const { return derivative(node_); }

inline Expr Expr::derivative(const NodePtr& p) {
  const Node& n = *p;
  const Expr u = n.lhs ? Expr(n.lhs) : Expr();
  const Expr v = n.rhs ? Expr(n.rhs) : Expr();
  switch (n.op) {
    case Op::constant: return Expr(0.0);
    case Op::variable: return Expr(1.0);
    case Op::add: return derivative(n.lhs) + derivative(n.rhs);
    case Op::sub: return derivative(n.lhs) - derivative(n.rhs);
    case Op::mul: return derivative(n.lhs) * v + u * derivative(n.rhs);
    case Op::div: return (derivative(n.lhs) * v - u * derivative(n.rhs)) / pow(v, Expr(2.0));
    case Op::neg: return -derivative(n.lhs);
    case Op::pow: {
      if (v.is_constant())
        return v * pow(u, Expr(v.node_->value - 1.0)) * derivative(n.lhs);
      return Expr(p) * (derivative(n.rhs) * log(u) + v * derivative(n.lhs) / u);
    }
    case Op::sin: return cos(u) * derivative(n.lhs);
    case Op::cos: return -(sin(u) * derivative(n.lhs));
    case Op::exp: return Expr(p) * derivative(n.lhs);
    case Op::log: return derivative(n.lhs) / u;
    case Op::abs: return (u / abs(u)) * derivative(n.lhs);
    case Op::step: return Expr(0.0);
    case Op::conj: return conj(derivative(n.lhs));
    case Op::custom: {
      if (!n.fn->derivative)
        throw Error("expression '" + n.fn->name + "' has no derivative");
      CustomFunction d;
      d.name = n.fn->derivative_name.empty() ? n.fn->name + "'" : n.fn->derivative_name;
      d.value = n.fn->derivative;
      d.real_valued = n.fn->real_valued;
      return custom(std::move(d));
    }
  }
  return Expr(0.0);
}

// ---------------------------------------------------------------------------
// printing

inline std::pair<std::string, int> Expr::print(const Node& n) {
  auto wrap = [](const std::pair<std::string, int>& s, int need) {
    return s.second < need ? "(" + s.first + ")" : s.first;
  };
  auto fn = [&](const char* name) {
    return std::pair{std::string(name) + "(" + print(*n.lhs).first + ")", 5};
  };
  switch (n.op) {
    case Op::constant: {
      const double re = n.value.real(), im = n.value.imag();
      if (im == 0.0) return {format_double(re), re < 0.0 ? 3 : 5};
      std::string imag = im == 1.0 ? "i" : im == -1.0 ? "-i" : format_double(im) + "*i";
      if (re == 0.0) return {imag, im == 1.0 ? 5 : im < 0.0 ? 3 : 2};
      return {"(" + format_double(re) + (im < 0.0 ? "" : "+") + imag + ")", 5};
    }
    case Op::variable: return {"x", 5};
    case Op::add: return {wrap(print(*n.lhs), 1) + "+" + wrap(print(*n.rhs), 1), 1};
    case Op::sub: return {wrap(print(*n.lhs), 1) + "-" + wrap(print(*n.rhs), 2), 1};
    case Op::mul: return {wrap(print(*n.lhs), 2) + "*" + wrap(print(*n.rhs), 2), 2};
    case Op::div: return {wrap(print(*n.lhs), 2) + "/" + wrap(print(*n.rhs), 3), 2};
    case Op::neg: return {"-" + wrap(print(*n.lhs), 3), 3};
    case Op::pow: return {wrap(print(*n.lhs), 5) + "^" + wrap(print(*n.rhs), 5), 4};
    case Op::sin: return fn("sin");
    case Op::cos: return fn("cos");
    case Op::exp: return fn("exp");
    case Op::log: return fn("log");
    case Op::abs: return fn("abs");
    case Op::step: return fn("step");
    case Op::conj: return fn("conj");
    case Op::custom: return {n.fn->name, 5};
  }
  return {"?", 5};
}

// ---------------------------------------------------------------------------
// parser

class ExprParser {
 public:
  explicit ExprParser(std::string_view text) : text_(text) {}

  Expr parse() {
    Expr e = expression();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, 0, pos_ + 1); }

  void skip_space() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }
  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr expression() {
    Expr e = term();
    for (;;) {
      if (accept('+')) e = e + term();
      else if (accept('-')) e = e - term();
      else return e;
    }
  }

  Expr term() {
    Expr e = unary();
    for (;;) {
      if (accept('*')) e = e * unary();
      else if (accept('/')) e = e / unary();
      else return e;
    }
  }

  Expr unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (accept('^')) return pow(base, unary());
    return base;
  }

  Expr primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expression();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if ((c >= '0' && c <= '9') || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      const std::string_view id = text_.substr(start, pos_ - start);
      if (id == "x") return Expr::variable();
      if (id == "pi") return Expr(std::numbers::pi);
      if (id == "i") return Expr(complex{0.0, 1.0});
      Expr::Op op;
      if (id == "sin") op = Expr::Op::sin;
      else if (id == "cos") op = Expr::Op::cos;
      else if (id == "exp") op = Expr::Op::exp;
      else if (id == "log") op = Expr::Op::log;
      else if (id == "abs") op = Expr::Op::abs;
      else if (id == "step") op = Expr::Op::step;
      else if (id == "conj") op = Expr::Op::conj;
      else {
        pos_ = start;
        fail("unknown identifier '" + std::string(id) + "'");
      }
      if (!accept('(')) fail("expected '(' after " + std::string(id));
      Expr arg = expression();
      if (!accept(')')) fail("expected ')'");
      if (op == Expr::Op::conj) return conj(arg);
      return Expr::unary(op, arg);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  Expr number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
    };
    digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      digits();
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') digits();
      else pos_ = save;
    }
    double v = 0.0;
    auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (res.ec != std::errc{} || res.ptr != text_.data() + pos_) {
      pos_ = start;
      fail("malformed number");
    }
    return Expr(v);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

inline Expr Expr::parse(std::string_view text) { return ExprParser(text).parse(); }

}  // namespace qdiff
