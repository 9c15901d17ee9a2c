#pragma once

#include "decouple/core.hpp"

/// Oracles for the standard worked examples of decoupled minimization.
namespace decouple::examples {

inline FnOracle make_fn(int dim, std::function<ExtReal(const Point&)> f, DualOracle sub = {}) {
  FnOracle o;
  o.dim = dim;
  o.eval = std::move(f);
  o.subgrad = std::move(sub);
  return o;
}

/// -x on the epigraph of the parabola y = x^2, +inf elsewhere.
inline FnOracle parabola_tilt() {
  return make_fn(
      2, [](const Point& p) -> ExtReal { return p[1] >= p[0] * p[0] ? ExtReal(-p[0]) : ExtReal::pos_inf(); },
      [](const Point& p) {
        if (p[1] < p[0] * p[0]) return DualSet::empty(2);
        if (p[1] > p[0] * p[0]) return DualSet::point(make_point({-1.0, 0.0}));
        return DualSet::cone(make_point({-1.0, 0.0}), {make_point({2 * p[0], -1.0})});
      });
}

/// Indicator of the closed lower half-plane y <= 0.
inline FnOracle lower_half_indicator() {
  return make_fn(
      2, [](const Point& p) -> ExtReal { return p[1] <= 0 ? ExtReal(0.0) : ExtReal::pos_inf(); },
      [](const Point& p) {
        if (p[1] > 0) return DualSet::empty(2);
        if (p[1] < 0) return DualSet::point(Point::Zero(2));
        return DualSet::cone(Point::Zero(2), {make_point({0.0, 1.0})});
      });
}

/// 0 for x <= 0 and 1 for x > 0.
inline FnOracle unit_step() {
  return make_fn(1, [](const Point& p) -> ExtReal { return p[0] <= 0 ? 0.0 : 1.0; });
}

inline FnOracle zero(int dim) {
  return make_fn(dim, [](const Point&) -> ExtReal { return 0.0; },
                 [dim](const Point&) { return DualSet::point(Point::Zero(dim)); });
}

/// delta / (delta - x) for x < delta, +inf otherwise.
inline FnOracle blowup_left(double delta) {
  return make_fn(1, [delta](const Point& p) -> ExtReal {
    return p[0] < delta ? ExtReal(delta / (delta - p[0])) : ExtReal::pos_inf();
  });
}

/// delta / (x - delta) for x < delta, +inf otherwise.
inline FnOracle blowup_right(double delta) {
  return make_fn(1, [delta](const Point& p) -> ExtReal {
    return p[0] < delta ? ExtReal(delta / (p[0] - delta)) : ExtReal::pos_inf();
  });
}

/// 0 at the origin, 1/x for x > 0, +inf otherwise; mirrored copy when flip is set.
inline FnOracle reciprocal_wedge(bool flip) {
  return make_fn(2, [flip](const Point& p) -> ExtReal {
    double x = flip ? -p[0] : p[0];
    if (x == 0 && p[1] == 0) return 0.0;
    return x > 0 ? ExtReal(1.0 / x) : ExtReal::pos_inf();
  });
}

/// 0 for x <= 0, +inf otherwise.
inline FnOracle left_indicator() {
  return make_fn(1, [](const Point& p) -> ExtReal { return p[0] <= 0 ? ExtReal(0.0) : ExtReal::pos_inf(); });
}

/// 1/x for x > 0, +inf otherwise.
inline FnOracle right_reciprocal() {
  return make_fn(1, [](const Point& p) -> ExtReal { return p[0] > 0 ? ExtReal(1.0 / p[0]) : ExtReal::pos_inf(); });
}

/// -1 for y > 0, 0 for y = 0, +inf for y < 0.
inline FnOracle step_above_axis() {
  return make_fn(2, [](const Point& p) -> ExtReal {
    if (p[1] > 0) return -1.0;
    return p[1] == 0 ? ExtReal(0.0) : ExtReal::pos_inf();
  });
}

namespace detail {

/// Smallest r with min over |t - a| <= r of t^2 <= b + r.
inline double parabola_gap(double a, double b) {
  auto ok = [&](double r) {
    double m = std::max(0.0, std::abs(a) - r);
    return m * m <= b + r;
  };
  if (ok(0.0)) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (!ok(hi)) hi *= 2;
  for (int i = 0; i < 200 && hi - lo > 0; ++i) {
    double mid = lo + (hi - lo) / 2;
    if (mid <= lo || mid >= hi) break;
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

/// Smallest r such that the r-ball around (a, b) leaves the epigraph.
inline double parabola_margin(double a, double b) {
  if (b < a * a) return 0.0;
  auto out = [&](double r) { return (std::abs(a) + r) * (std::abs(a) + r) > b - r; };
  double lo = 0.0, hi = 1.0;
  while (!out(hi)) hi *= 2;
  for (int i = 0; i < 200; ++i) {
    double mid = lo + (hi - lo) / 2;
    if (mid <= lo || mid >= hi) break;
    (out(mid) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace detail

/// Epigraph of y = x^2 with maximum-norm distance and a nearest point.
inline SetOracle parabola_epigraph() {
  SetOracle s;
  s.dim = 2;
  s.contains = [](const Point& p) { return p[1] >= p[0] * p[0]; };
  s.dist = [](const Point& p) { return detail::parabola_gap(p[0], p[1]); };
  s.project = [](const Point& p) -> Point {
    double r = detail::parabola_gap(p[0], p[1]);
    if (r == 0.0) return p;
    double t = std::copysign(std::max(0.0, std::abs(p[0]) - r), p[0]);
    return make_point({t, std::max(p[1] + r, t * t)});
  };
  s.normal_cone = [](const Point& p) {
    if (p[1] < p[0] * p[0]) return DualSet::empty(2);
    if (p[1] > p[0] * p[0]) return DualSet::point(Point::Zero(2));
    return DualSet::cone(Point::Zero(2), {make_point({2 * p[0], -1.0})});
  };
  return s;
}

/// Closed half-plane y <= 0.
inline SetOracle lower_half_plane() {
  SetOracle s;
  s.dim = 2;
  s.contains = [](const Point& p) { return p[1] <= 0; };
  s.dist = [](const Point& p) { return std::max(0.0, p[1]); };
  s.project = [](const Point& p) { return make_point({p[0], std::min(p[1], 0.0)}); };
  s.normal_cone = [](const Point& p) {
    if (p[1] > 0) return DualSet::empty(2);
    if (p[1] < 0) return DualSet::point(Point::Zero(2));
    return DualSet::cone(Point::Zero(2), {make_point({0.0, 1.0})});
  };
  return s;
}

/// Epigraph of the parabola restricted to a window, with its interior margin.
inline Region parabola_region(double half_width) {
  auto set = std::make_shared<SetOracle>(parabola_epigraph());
  Box w{make_point({-half_width, 0.0}), make_point({half_width, half_width})};
  Region u = Region::from_set(set, w, [](const Point& p) { return detail::parabola_margin(p[0], p[1]); });
  u.anchor = Point::Zero(2);
  return u;
}

}  // namespace decouple::examples
