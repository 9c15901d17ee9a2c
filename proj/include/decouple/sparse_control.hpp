#pragma once

#include "decouple/core.hpp"

namespace decouple::sparse {

/// Piecewise-constant functions on cells with the weighted inner product sum w_i x_i y_i.
struct CellSpace {
  Eigen::VectorXd weights;

  explicit CellSpace(Eigen::VectorXd w) : weights(std::move(w)) {
    if (weights.size() == 0 || weights.minCoeff() <= 0)
      throw Error(ErrorCode::InvalidArgument, "cell weights must be positive");
  }
  static CellSpace uniform(int m, double total = 1.0) {
    return CellSpace(Eigen::VectorXd::Constant(m, total / m));
  }
  int size() const { return static_cast<int>(weights.size()); }
  double inner(const Point& x, const Point& y) const { return (weights.array() * x.array() * y.array()).sum(); }
  double norm(const Point& x) const { return std::sqrt(inner(x, x)); }
};

inline double default_zero_tol(const Point& x) {
  return 1e-12 * std::max(1.0, x.size() ? x.cwiseAbs().maxCoeff() : 0.0);
}

/// Total weight of cells where |x_i| exceeds the zero tolerance.
inline double support_measure(const CellSpace& sp, const Point& x, std::optional<double> zero_tol = {}) {
  if (x.size() != sp.size()) throw Error(ErrorCode::DimensionMismatch, "cell vector");
  const double tol = zero_tol.value_or(default_zero_tol(x));
  double m = 0.0;
  for (int i = 0; i < sp.size(); ++i)
    if (std::abs(x[i]) > tol) m += sp.weights[i];
  return m;
}

/// Throws InvalidBounds unless xa <= 0 <= xb cellwise.
inline void check_bounds(const Point& xa, const Point& xb) {
  if (xa.size() != xb.size()) throw Error(ErrorCode::DimensionMismatch, "box");
  if ((xa.array() > 0).any() || (xb.array() < 0).any())
    throw Error(ErrorCode::InvalidBounds, "bounds must satisfy xa <= 0 <= xb");
}

/// Cellwise clamp onto [xa, xb].
inline Point project_box(const Point& x, const Point& xa, const Point& xb) {
  if (x.size() != xa.size() || x.size() != xb.size()) throw Error(ErrorCode::DimensionMismatch, "box");
  check_bounds(xa, xb);
  return x.cwiseMax(xa).cwiseMin(xb);
}

struct DecayReport {
  Verdict verdict;
  std::vector<double> ts, ratios;  // ratio = measure({0 < |x| <= t}) / t^2
};

/// Tests whether the small-value profile t -> measure({0 < |x| <= t}) is o(t^2).
inline DecayReport slowly_decreasing(const std::function<double(double)>& profile, int steps = 20,
                                     double tol = 1e-6) {
  DecayReport r;
  for (int k = 1; k <= steps; ++k) {
    double t = std::ldexp(1.0, -k);
    r.ts.push_back(t);
    r.ratios.push_back(profile(t) / (t * t));
  }
  const double last = r.ratios.back(), prev = r.ratios[r.ratios.size() - 2];
  if (last < tol && last <= prev) r.verdict = Verdict::holds("ratio tends to 0");
  else if (last > tol && last >= prev) r.verdict = Verdict::fails({}, "ratio does not decay");
  else r.verdict = Verdict::inconclusive(r.ts.back(), "slowly decaying");
  return r;
}

inline DecayReport slowly_decreasing(const CellSpace& sp, const Point& x, int steps = 20, double tol = 1e-6) {
  const double z = default_zero_tol(x);
  return slowly_decreasing(
      [&](double t) {
        double m = 0.0;
        for (int i = 0; i < sp.size(); ++i)
          if (std::abs(x[i]) > z && std::abs(x[i]) <= t) m += sp.weights[i];
        return m;
      },
      steps, tol);
}

/// Cells where x* is nonzero must be cells where x vanishes.
inline Verdict sparse_subdiff_check(const CellSpace& sp, const Point& x, const Point& xstar,
                                    std::optional<double> zero_tol = {}) {
  const double tol = zero_tol.value_or(default_zero_tol(x));
  const double dtol = default_zero_tol(xstar);
  for (int i = 0; i < sp.size(); ++i)
    if (std::abs(xstar[i]) > dtol && std::abs(x[i]) > tol) {
      Point w = Point::Zero(sp.size());
      w[i] = 1.0;
      return Verdict::fails({w}, "cell " + std::to_string(i) + " has x != 0 and x* != 0");
    }
  return Verdict::holds();
}

/// min 1/2 sigma ||x - z||^2 + 1/2 sigma0 ||x||^2 + support measure of x over xa <= x <= xb.
struct SparseProblem {
  CellSpace space;
  Point z;
  double sigma = 1.0, sigma0 = 0.0;
  Point xa, xb;
  /// Optional cross terms 1/2 x^T C x; only the zero matrix is supported.
  Eigen::MatrixXd coupling;

  double smooth(const Point& x) const {
    return 0.5 * sigma * space.inner(x - z, x - z) + 0.5 * sigma0 * space.inner(x, x);
  }
  /// Gradient of the smooth part in the weighted inner product.
  Point gradient(const Point& x) const { return sigma * (x - z) + sigma0 * x; }
  double objective(const Point& x) const { return smooth(x) + support_measure(space, x); }

  void validate() const {
    const int m = space.size();
    if (z.size() != m || xa.size() != m || xb.size() != m)
      throw Error(ErrorCode::DimensionMismatch, "problem data");
    if (!(sigma >= 0 && sigma0 >= 0 && sigma + sigma0 > 0))
      throw Error(ErrorCode::InvalidArgument, "sigma, sigma0 >= 0 with positive sum");
    if ((xa.array() >= 0).any() || (xb.array() <= 0).any())
      throw Error(ErrorCode::InvalidBounds, "bounds must satisfy xa < 0 < xb");
    if (coupling.size() && (coupling.array() != 0).any())
      throw Error(ErrorCode::NonSeparableObjective, "cross terms couple the cells");
  }
};

inline void require_in_box(const SparseProblem& p, const Point& x) {
  if (x.size() != p.space.size()) throw Error(ErrorCode::DimensionMismatch, "cell vector");
  const double tol = default_zero_tol(x);
  for (int i = 0; i < x.size(); ++i)
    if (x[i] < p.xa[i] - tol || x[i] > p.xb[i] + tol)
      throw Error(ErrorCode::NotInBox, "cell " + std::to_string(i) + " violates the bounds");
}

/// Exact cellwise minimizer: compare the clamped unconstrained minimizer against 0.
inline Point solve_sparse_oc(const SparseProblem& p) {
  p.validate();
  const int m = p.space.size();
  Point x = Point::Zero(m);
  for (int i = 0; i < m; ++i) {
    const double w = p.space.weights[i];
    auto g = [&](double v) { return 0.5 * w * (p.sigma * (v - p.z[i]) * (v - p.z[i]) + p.sigma0 * v * v); };
    double c = std::clamp(p.sigma * p.z[i] / (p.sigma + p.sigma0), p.xa[i], p.xb[i]);
    if (c != 0.0 && g(c) + w < g(0.0)) x[i] = c;
  }
  return x;
}

/// Multipliers making x exactly stationary: x1* = -f'(x) on zero cells, x2* = -f'(x) on
/// active bound cells, 0 elsewhere.
inline std::pair<Point, Point> stationary_multipliers(const SparseProblem& p, const Point& x) {
  const Point g = p.gradient(x);
  const double tol = default_zero_tol(x);
  Point s1 = Point::Zero(x.size()), s2 = Point::Zero(x.size());
  for (int i = 0; i < x.size(); ++i) {
    if (std::abs(x[i]) <= tol) s1[i] = -g[i];
    else if (x[i] <= p.xa[i] + tol || x[i] >= p.xb[i] - tol) s2[i] = -g[i];
  }
  return {s1, s2};
}

/// Approximate stationarity system for a pair (x1, x2) with multipliers (x1*, x2*).
inline Verdict approx_stationarity_check(const SparseProblem& p, const Point& x1, const Point& x2,
                                         const Point& s1, const Point& s2, double eps,
                                         std::optional<Point> xbar = std::nullopt) {
  p.validate();
  require_in_box(p, x2);
  const double res = p.space.norm(p.gradient(x2) + s1 + s2);
  if (!(res < eps)) return Verdict::fails({x2}, "stationarity residual " + std::to_string(res));
  if (xbar) {
    double gap = std::abs(support_measure(p.space, x1) - support_measure(p.space, *xbar));
    if (!(gap < eps)) return Verdict::fails({x1}, "support measure gap " + std::to_string(gap));
  }
  auto sub = sparse_subdiff_check(p.space, x1, s1);
  if (!sub.is_holds()) return sub;
  const double tol = default_zero_tol(x2);
  const double dtol = default_zero_tol(s2);
  for (int i = 0; i < x2.size(); ++i) {
    if (x2[i] > p.xa[i] + tol && s2[i] < -dtol)
      return Verdict::fails({x2}, "negative box multiplier above the lower bound at cell " + std::to_string(i));
    if (x2[i] < p.xb[i] - tol && s2[i] > dtol)
      return Verdict::fails({x2}, "positive box multiplier below the upper bound at cell " + std::to_string(i));
  }
  return Verdict::holds();
}

/// Exact conditions: f' = 0 on supported interior cells, f' >= 0 at the lower bound, f' <= 0
/// at the upper bound.
inline Verdict sharp_stationarity_check(const SparseProblem& p, const Point& x, double tol = 1e-10) {
  p.validate();
  require_in_box(p, x);
  const Point g = p.gradient(x);
  const double zt = default_zero_tol(x);
  for (int i = 0; i < x.size(); ++i) {
    bool lower = x[i] <= p.xa[i] + zt, upper = x[i] >= p.xb[i] - zt;
    bool support = std::abs(x[i]) > zt;
    std::string cell = " at cell " + std::to_string(i);
    if (support && !lower && !upper && std::abs(g[i]) > tol) return Verdict::fails({x}, "f' != 0" + cell);
    if (support && lower && !upper && g[i] < -tol) return Verdict::fails({x}, "f' < 0 at the lower bound" + cell);
    if (support && upper && !lower && g[i] > tol) return Verdict::fails({x}, "f' > 0 at the upper bound" + cell);
  }
  return Verdict::holds();
}

}  // namespace decouple::sparse
