#pragma once

// Globally adaptive Gauss-Kronrod (7/15) quadrature over a list of smooth
// segments. A segment may carry an integrable power singularity
// |x - endpoint|^alpha, alpha in (-1, 0), at either end; it is removed by
// the substitution x = a + L u^k, k = 1 / (1 + alpha).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <queue>
#include <vector>

#include "qdiff/error.hpp"

namespace qdiff {

using complex = std::complex<double>;

struct QuadratureOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  std::size_t max_subdivisions = 4000;
};

/// Smooth stretch of an integrand. alpha = 0 means "regular at that end".
struct Segment {
  double a = 0.0, b = 0.0;
  double left_alpha = 0.0, right_alpha = 0.0;
};

/// Map u in [0, 1] onto a segment, flattening declared endpoint
/// singularities. A segment singular at both ends must be split first.
class SegmentMap {
 public:
  SegmentMap(double a, double b, double left_alpha, double right_alpha)
      : a_(a), b_(b), len_(b - a) {
    if (left_alpha < 0.0) {
      kind_ = Kind::left;
      power_ = 1.0 / (1.0 + left_alpha);
    } else if (right_alpha < 0.0) {
      kind_ = Kind::right;
      power_ = 1.0 / (1.0 + right_alpha);
    }
  }

  double x(double u) const {
    switch (kind_) {
      case Kind::regular: return a_ + len_ * u;
      case Kind::left: return a_ + len_ * std::pow(u, power_);
      case Kind::right: return b_ - len_ * std::pow(1.0 - u, power_);
    }
    return a_;
  }
  double dx_du(double u) const {
    switch (kind_) {
      case Kind::regular: return len_;
      case Kind::left: return len_ * power_ * std::pow(u, power_ - 1.0);
      case Kind::right: return len_ * power_ * std::pow(1.0 - u, power_ - 1.0);
    }
    return len_;
  }
  double u(double x) const {
    if (len_ == 0.0) return 0.0;
    const double t = std::clamp((x - a_) / len_, 0.0, 1.0);
    switch (kind_) {
      case Kind::regular: return t;
      case Kind::left: return std::pow(t, 1.0 / power_);
      case Kind::right: return 1.0 - std::pow(std::clamp((b_ - x) / len_, 0.0, 1.0), 1.0 / power_);
    }
    return t;
  }
  /// Smallest distance from the singular end (in u) at which x(u) is still
  /// distinguishable from the endpoint in floating point.
  double u_guard() const {
    if (kind_ == Kind::regular || len_ == 0.0) return 0.0;
    const double end = kind_ == Kind::left ? a_ : b_;
    const double delta = std::max(64.0 * std::numeric_limits<double>::epsilon() * std::abs(end),
                                  std::numeric_limits<double>::min());
    return std::pow(delta / len_, 1.0 / power_);
  }
  bool singular() const noexcept { return kind_ != Kind::regular; }
  bool singular_at_left() const noexcept { return kind_ == Kind::left; }
  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }

 private:
  enum class Kind { regular, left, right };
  double a_, b_, len_;
  double power_ = 1.0;
  Kind kind_ = Kind::regular;
};

/// Split segments singular at both ends and drop empty ones.
inline std::vector<SegmentMap> segment_maps(const std::vector<Segment>& segments) {
  std::vector<SegmentMap> maps;
  for (const Segment& s : segments) {
    if (!(s.b > s.a)) continue;
    if (s.left_alpha < 0.0 && s.right_alpha < 0.0) {
      const double mid = 0.5 * (s.a + s.b);
      maps.emplace_back(s.a, mid, s.left_alpha, 0.0);
      maps.emplace_back(mid, s.b, 0.0, s.right_alpha);
    } else {
      maps.emplace_back(s.a, s.b, s.left_alpha, s.right_alpha);
    }
  }
  return maps;
}

namespace detail {

struct KronrodResult {
  complex value;
  double error;
};

// G7/K15 abscissae and weights (QUADPACK qk15).
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
KronrodResult kronrod15(const F& f, double lo, double hi) {
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const complex fc = f(center);
  complex kronrod = fc * kWgk[7];
  complex gauss = fc * kWg[3];
  double resabs = std::abs(fc) * kWgk[7];
  std::array<complex, 7> f1{}, f2{};
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    f1[j] = f(center - dx);
    f2[j] = f(center + dx);
    kronrod += kWgk[j] * (f1[j] + f2[j]);
    resabs += kWgk[j] * (std::abs(f1[j]) + std::abs(f2[j]));
    if (j % 2 == 1) gauss += kWg[j / 2] * (f1[j] + f2[j]);
  }
  const complex mean = kronrod * 0.5;
  double resasc = kWgk[7] * std::abs(fc - mean);
  for (int j = 0; j < 7; ++j)
    resasc += kWgk[j] * (std::abs(f1[j] - mean) + std::abs(f2[j] - mean));
  kronrod *= half;
  resabs *= std::abs(half);
  resasc *= std::abs(half);
  double err = std::abs((kronrod - gauss * half));
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps))
    err = std::max(50.0 * eps * resabs, err);
  return {kronrod, err};
}

}  // namespace detail

/// Integrate f over the union of the given segments.
template <class F>
complex integrate_segments(const F& f, const std::vector<Segment>& segments,
                           const QuadratureOptions& opts = {}) {
  const std::vector<SegmentMap> maps = segment_maps(segments);
  if (maps.empty()) return {};

  struct Cell {
    std::size_t map;
    double lo, hi;
    complex value;
    double error;
    bool operator<(const Cell& other) const { return error < other.error; }
  };

  auto eval_cell = [&](std::size_t k, double lo, double hi) {
    const SegmentMap& m = maps[k];
    const double guard = m.u_guard();
    auto g = [&](double u) -> complex {
      if (m.singular()) {
        if (m.singular_at_left()) u = std::max(u, guard);
        else u = std::min(u, 1.0 - guard);
      }
      const complex v = f(m.x(u)) * m.dx_du(u);
      return std::isfinite(v.real()) && std::isfinite(v.imag()) ? v : complex{};
    };
    const detail::KronrodResult r = detail::kronrod15(g, lo, hi);
    return Cell{k, lo, hi, r.value, r.error};
  };

  std::priority_queue<Cell> queue;
  complex total{};
  double total_error = 0.0;
  for (std::size_t k = 0; k < maps.size(); ++k) {
    Cell c = eval_cell(k, 0.0, 1.0);
    total += c.value;
    total_error += c.error;
    queue.push(c);
  }

  std::size_t cells = queue.size();
  while (total_error > std::max(opts.abs_tol, opts.rel_tol * std::abs(total))) {
    if (cells >= opts.max_subdivisions)
      throw QuadratureError("adaptive quadrature did not converge", total_error);
    Cell worst = queue.top();
    if (worst.error == 0.0) break;
    queue.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (!(mid > worst.lo && mid < worst.hi)) {
      // Interval exhausted in floating point: accept its contribution.
      total_error -= worst.error;
      worst.error = 0.0;
      queue.push(worst);
      if (total_error <= 0.0) break;
      continue;
    }
    Cell left = eval_cell(worst.map, worst.lo, mid);
    Cell right = eval_cell(worst.map, mid, worst.hi);
    total += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    queue.push(left);
    queue.push(right);
    ++cells;
  }
  // Re-sum to shed accumulated cancellation from the running total.
  complex sum{};
  while (!queue.empty()) {
    sum += queue.top().value;
    queue.pop();
  }
  return sum;
}

/// Convenience overload: plain interval [a, b] with interior cut points.
template <class F>
complex integrate_interval(const F& f, double a, double b, const std::vector<double>& cuts = {},
                           const QuadratureOptions& opts = {}) {
  std::vector<Segment> segs;
  double lo = a;
  for (double c : cuts) {
    if (c > lo && c < b) {
      segs.push_back({lo, c});
      lo = c;
    }
  }
  segs.push_back({lo, b});
  return integrate_segments(f, segs, opts);
}

}  // namespace qdiff
