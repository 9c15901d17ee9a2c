#pragma once

#include "decouple/core.hpp"

#include <cstdint>
#include <set>

namespace decouple {

enum class SampleMode { Grid, LowDiscrepancy };

/// Deterministic multilevel sampling plan. Level j uses coupling radius eta0 * 2^-j.
struct SampleScheme {
  SampleMode mode = SampleMode::Grid;
  std::uint64_t seed = 0;
  int levels = 10;
  double eta0 = 0.05;
  int stages = 6;
  double tol = kTraceTol;
  double divergence = kDivergence;

  double eta(int level) const { return eta0 * std::ldexp(1.0, -level); }
};

namespace detail {

struct AxisBudget {
  int uniform = 0;
  int graded = 0;
};

inline int grow(int base, int level, int cap, int step) {
  long n = static_cast<long>(base) << std::min(level, 30);
  if (n <= cap) return static_cast<int>(n);
  int doublings = 0;
  while ((static_cast<long>(base) << (doublings + 1)) <= cap) ++doublings;
  return cap + step * (level - doublings);
}

inline AxisBudget axis_budget(int dim, int level) {
  switch (dim) {
    case 1: return {grow(16, level, 1024, 64) + 1, std::min(10 + 5 * level, 50)};
    case 2: return {grow(4, level, 32, 4) + 1, std::min(6 + 2 * level, 20)};
    default: return {grow(2, level, 8, 2) + 1, std::min(3 + level, 8)};
  }
}

/// Uniform points plus points graded geometrically towards both ends and towards the anchor.
inline std::vector<double> axis_coords(double lo, double hi, double anchor, AxisBudget b) {
  std::set<double> c;
  if (hi <= lo) {
    c.insert(lo);
    return {c.begin(), c.end()};
  }
  for (int i = 0; i < b.uniform; ++i) {
    c.insert(i + 1 == b.uniform ? hi : lo + (hi - lo) * i / (b.uniform - 1));
  }
  double w = (hi - lo) / 2;
  for (int k = 1; k <= b.graded; ++k) {
    double s = std::ldexp(w, -k);
    c.insert(lo + s);
    c.insert(hi - s);
    if (anchor - s >= lo) c.insert(anchor - s);
    if (anchor + s <= hi) c.insert(anchor + s);
  }
  if (anchor >= lo && anchor <= hi) c.insert(anchor);
  return {c.begin(), c.end()};
}

/// Radical inverse in the given prime base.
inline double radical_inverse(std::uint64_t i, unsigned base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

inline unsigned nth_prime(int k) {
  static const unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47,
                                    53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107};
  return primes[k % 28];
}

inline int halton_count(int level) { return grow(64, level, 4096, 256); }

}  // namespace detail

/// Halton points in the box, skipping the first `skip` indices.
inline std::vector<Point> halton_points(const Box& box, int count, std::uint64_t skip) {
  std::vector<Point> out;
  int d = box.dim();
  for (int i = 0; i < count; ++i) {
    Point p(d);
    for (int k = 0; k < d; ++k) {
      double u = detail::radical_inverse(skip + 1 + static_cast<std::uint64_t>(i),
                                         detail::nth_prime(k));
      p[k] = box.lo[k] + u * (box.hi[k] - box.lo[k]);
    }
    out.push_back(p);
  }
  return out;
}

/// Sample points of the region at the given level. Deterministic for a fixed scheme.
inline std::vector<Point> samples(const Region& u, int level, const SampleScheme& scheme) {
  const int d = u.dim();
  const Point a = u.sampling_anchor();
  std::vector<Point> out;
  if (scheme.mode == SampleMode::LowDiscrepancy || d > 3) {
    auto pts = halton_points(u.window, detail::halton_count(level), scheme.seed);
    pts.push_back(a);
    for (auto& p : pts)
      if (u.contains(p)) out.push_back(p);
    std::sort(out.begin(), out.end(), lex_less);
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  auto budget = detail::axis_budget(d, level);
  std::vector<std::vector<double>> axes;
  for (int k = 0; k < d; ++k) {
    double anchor_k = std::clamp(a[k], u.window.lo[k], u.window.hi[k]);
    axes.push_back(detail::axis_coords(u.window.lo[k], u.window.hi[k], anchor_k, budget));
  }
  std::vector<std::size_t> idx(d, 0);
  Point p(d);
  while (true) {
    for (int k = 0; k < d; ++k) p[k] = axes[k][idx[k]];
    if (u.contains(p)) out.push_back(p);
    int k = d - 1;
    while (k >= 0 && ++idx[k] == axes[k].size()) idx[k--] = 0;
    if (k < 0) break;
  }
  return out;
}

/// Largest distance from a probe set to its nearest sample; used to measure refinement.
inline double fill_distance(const std::vector<Point>& pts, const std::vector<Point>& probes) {
  double worst = 0.0;
  for (const auto& q : probes) {
    double best = kInf;
    for (const auto& p : pts) best = std::min(best, dist(p, q));
    worst = std::max(worst, best);
  }
  return worst;
}

/// Offsets of a small cubic stencil of radius strictly below eta, including the origin.
inline std::vector<Point> stencil(int dim, double eta) {
  std::vector<double> steps;
  if (dim <= 2) steps = {-2.0 / 3, -1.0 / 3, 0.0, 1.0 / 3, 2.0 / 3};
  else if (dim == 3) steps = {-0.5, 0.0, 0.5};
  std::vector<Point> out;
  if (dim > 3) {
    out.push_back(Point::Zero(dim));
    for (int k = 0; k < dim; ++k)
      for (double s : {-0.5, 0.5}) {
        Point p = Point::Zero(dim);
        p[k] = s * eta;
        out.push_back(p);
      }
    return out;
  }
  std::vector<std::size_t> idx(dim, 0);
  while (true) {
    Point p(dim);
    for (int k = 0; k < dim; ++k) p[k] = steps[idx[k]] * eta;
    out.push_back(p);
    int k = dim - 1;
    while (k >= 0 && ++idx[k] == steps.size()) idx[k--] = 0;
    if (k < 0) break;
  }
  return out;
}

/// Points sorted by first coordinate for radius queries in the maximum norm.
class PointIndex {
 public:
  PointIndex() = default;
  explicit PointIndex(const std::vector<Point>* pts) : pts_(pts) {
    order_.resize(pts->size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    std::sort(order_.begin(), order_.end(),
              [&](std::size_t a, std::size_t b) { return (*pts)[a][0] < (*pts)[b][0]; });
    keys_.reserve(order_.size());
    for (auto i : order_) keys_.push_back((*pts)[i][0]);
  }

  /// Calls visit(i) for each point with dist(point, c) < r. Stops early when visit returns false.
  template <class Visit>
  void within(const Point& c, double r, Visit&& visit) const {
    if (!pts_ || order_.empty()) return;
    auto lo = std::lower_bound(keys_.begin(), keys_.end(), c[0] - r);
    for (auto it = lo; it != keys_.end() && *it <= c[0] + r; ++it) {
      std::size_t i = order_[static_cast<std::size_t>(it - keys_.begin())];
      if (dist((*pts_)[i], c) < r) {
        if (!visit(i)) return;
      }
    }
  }

 private:
  const std::vector<Point>* pts_ = nullptr;
  std::vector<std::size_t> order_;
  std::vector<double> keys_;
};

}  // namespace decouple
