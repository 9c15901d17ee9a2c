#pragma once

#include "decouple/ekeland.hpp"
#include "decouple/subdifferential.hpp"

namespace decouple {

/// Points and dual elements certifying an approximate multiplier or calculus rule.
struct FuzzyWitness {
  Point x1, x2;
  Point v1, v2;
  double residual = kInf;
  bool near_base = false;    // ||x_i - xbar|| < eps for both points
  bool values_close = false; // |f_i(x_i) - f_i(xbar)| < eps for both functions
};

namespace detail {

/// Fits this close to zero end the partner scan.
inline constexpr double kExactFit = 1e-12;

/// Sample points of the ball sorted by distance to the center, ties broken lexicographically.
/// The grid is laid over the enclosing ball of dyadic radius, so dyadic coordinates are hit exactly.
inline std::vector<Point> sorted_ball(const Point& c, double r, const SampleScheme& s) {
  Region outer = Region::open_ball(c, std::exp2(std::ceil(std::log2(r))));
  auto inside = [&](int level) {
    std::vector<Point> out;
    for (auto& p : samples(outer, level, s))
      if (dist(p, c) < r) out.push_back(std::move(p));
    return out;
  };
  int level = 0;
  while (level + 1 < s.levels && inside(level + 1).size() <= 20000) ++level;
  auto pts = inside(level);
  std::stable_sort(pts.begin(), pts.end(), [&](const Point& a, const Point& b) {
    double da = dist(a, c), db = dist(b, c);
    return da < db || (da == db && lex_less(a, b));
  });
  return pts;
}

inline void require_subgrad(const FnOracle& f, const char* name) {
  if (!f.subgrad) throw Error(ErrorCode::NoSubgradOracle, std::string(name) + " has no subgradient oracle");
}

}  // namespace detail

/// Searches coupled pairs near xbar for 0 in df1(x1) + df2(x2) up to `bound` in the dual norm.
/// Pairs satisfy ||x1 - x2|| < eta and f1(x1) + f2(x2) < (f1 + f2)(xbar) + eta.
inline std::optional<FuzzyWitness> multiplier_search(const FnOracle& f1, const FnOracle& f2,
                                                     const Point& xbar, double eps, double delta,
                                                     double eta, const SampleScheme& s,
                                                     std::optional<double> bound = std::nullopt) {
  detail::require_subgrad(f1, "f1");
  detail::require_subgrad(f2, "f2");
  ExtReal base = f1(xbar) + f2(xbar);
  if (!base.is_finite()) throw Error(ErrorCode::InfiniteAtBase, "(f1 + f2)(xbar)");
  const double limit = bound.value_or(eps);
  auto pts = detail::sorted_ball(xbar, delta, s);
  PointIndex idx(&pts);
  const Point zero = Point::Zero(xbar.size());
  const ExtReal f1b = f1(xbar), f2b = f2(xbar);
  for (const auto& x1 : pts) {
    ExtReal a = f1(x1);
    if (a.is_pos_inf()) continue;
    DualSet d1 = f1.subgrad(x1);
    if (d1.is_empty()) continue;
    std::vector<std::size_t> near;
    idx.within(x1, eta, [&](std::size_t k) {
      near.push_back(k);
      return true;
    });
    std::stable_sort(near.begin(), near.end(), [&](std::size_t i, std::size_t k) {
      double di = dist(pts[i], x1), dk = dist(pts[k], x1);
      return di < dk || (di == dk && lex_less(pts[i], pts[k]));
    });
    std::optional<FuzzyWitness> best;
    for (auto k : near) {
      const Point& x2 = pts[k];
      ExtReal b = f2(x2);
      if (b.is_pos_inf() || !((a + b) < base + eta)) continue;
      DualSet d2 = f2.subgrad(x2);
      if (d1.is_empty() || d2.is_empty()) continue;
      auto fit = dist_to_sum(zero, d1, d2);
      if (!best || fit.residual < best->residual) {
        FuzzyWitness w;
        w.x1 = x1;
        w.x2 = x2;
        w.v1 = fit.parts.empty() ? zero : fit.parts[0];
        w.v2 = fit.parts.empty() ? zero : fit.parts[1];
        w.residual = fit.residual;
        w.near_base = dist(x1, xbar) < eps && dist(x2, xbar) < eps;
        w.values_close = std::abs((a - f1b).value()) < eps && std::abs((b - f2b).value()) < eps;
        best = w;
      }
      if (best->residual <= detail::kExactFit) break;
    }
    if (best && best->residual < limit) return best;
  }
  return std::nullopt;
}

/// Fuzzy sum rule: for x* in d(f1 + f2)(xbar), finds x_i near xbar and v_i in df_i(x_i) with
/// ||x* - v1 - v2|| < eps.
inline std::optional<FuzzyWitness> sum_rule_verify(const FnOracle& f1, const FnOracle& f2, const Point& xbar,
                                                   const Point& xstar, double eps, const SampleScheme& s) {
  detail::require_subgrad(f1, "f1");
  detail::require_subgrad(f2, "f2");
  if (is_subgradient(sum(f1, f2), xbar, xstar).verdict.is_fails())
    throw Error(ErrorCode::NotASubgradient, "x* fails the subgradient test for f1 + f2");
  const double ep = eps / (1.0 + dual_norm(xstar));
  FnOracle tilted = f2;
  tilted.eval = [f2, xstar](const Point& x) { return f2(x) - ExtReal(xstar.dot(x)); };
  tilted.subgrad = [f2, xstar](const Point& x) { return f2.subgrad(x).shifted(-xstar); };
  auto w = multiplier_search(f1, tilted, xbar, ep, ep, ep, s);
  if (!w) return w;
  w->v2 += xstar;
  w->residual = dual_norm(xstar - w->v1 - w->v2);
  w->near_base = dist(w->x1, xbar) < eps && dist(w->x2, xbar) < eps;
  w->values_close = std::abs((f1(w->x1) - f1(xbar)).value()) < eps &&
                    std::abs((f2(w->x2) - f2(xbar)).value()) < eps;
  return w;
}

/// Fuzzy intersection rule: x_i in O_i near xbar and normals v_i with ||x* - v1 - v2|| < eps.
/// Partners of x1 are its projection onto O2 and samples of O2 within eta0 of x1.
inline std::optional<FuzzyWitness> intersection_rule_verify(const SetOracle& o1, const SetOracle& o2,
                                                            const Point& xbar, const Point& xstar,
                                                            double eps, const SampleScheme& s) {
  if (!o1.normal_cone || !o2.normal_cone)
    throw Error(ErrorCode::NoSubgradOracle, "sets need normal cone oracles");
  if (!o1.contains(xbar) || !o2.contains(xbar))
    throw Error(ErrorCode::BaseNotInIntersection, "xbar must lie in both sets");
  auto pts = detail::sorted_ball(xbar, eps, s);
  std::vector<Point> in2;
  for (auto& p : pts)
    if (o2.contains(p)) in2.push_back(p);
  PointIndex idx(&in2);
  for (const auto& x1 : pts) {
    if (!o1.contains(x1)) continue;
    DualSet n1 = o1.normal_cone(x1);
    std::vector<Point> partners;
    if (o2.project) {
      Point p = o2.project(x1);
      if (dist(p, xbar) < eps && o2.contains(p)) partners.push_back(p);
    }
    std::vector<std::size_t> near;
    idx.within(x1, s.eta0, [&](std::size_t k) {
      near.push_back(k);
      return true;
    });
    std::stable_sort(near.begin(), near.end(), [&](std::size_t i, std::size_t k) {
      double di = dist(in2[i], x1), dk = dist(in2[k], x1);
      return di < dk || (di == dk && lex_less(in2[i], in2[k]));
    });
    for (auto k : near) partners.push_back(in2[k]);
    std::optional<FuzzyWitness> best;
    for (const auto& x2 : partners) {
      DualSet n2 = o2.normal_cone(x2);
      if (n1.is_empty() || n2.is_empty()) continue;
      auto fit = dist_to_sum(xstar, n1, n2);
      if (!best || fit.residual < best->residual) {
        FuzzyWitness w;
        w.x1 = x1;
        w.x2 = x2;
        w.v1 = fit.parts.empty() ? Point::Zero(xbar.size()) : fit.parts[0];
        w.v2 = fit.parts.empty() ? Point::Zero(xbar.size()) : fit.parts[1];
        w.residual = fit.residual;
        w.near_base = dist(x1, xbar) < eps && dist(x2, xbar) < eps;
        w.values_close = true;
        best = w;
      }
      if (best->residual <= detail::kExactFit) break;
    }
    if (best && best->residual < eps) return best;
  }
  return std::nullopt;
}

struct ChainWitness {
  Point x, y;
  Point ystar;  // element of df(y)
  Point v;      // J(x)^T ystar
  double residual = kInf;
};

/// Fuzzy chain rule for f o F with smooth F: x near xbar, y near F(xbar) with f(y) close to
/// f(F(xbar)), and y* in df(y) with ||x* - J(x)^T y*|| <= eps.
inline std::optional<ChainWitness> chain_rule_verify(const FnOracle& f, const SmoothMap& F, const Point& xbar,
                                                     const Point& xstar, double eps, const SampleScheme& s) {
  detail::require_subgrad(f, "f");
  const Point ybar = F.eval(xbar);
  ExtReal fy = f(ybar);
  if (!fy.is_finite()) throw Error(ErrorCode::InfiniteAtBase, "f(F(xbar))");
  (void)F.jac(xbar);
  FnOracle comp;
  comp.dim = F.in_dim;
  comp.eval = [f, F](const Point& x) { return f(F.eval(x)); };
  if (is_subgradient(comp, xbar, xstar).verdict.is_fails())
    throw Error(ErrorCode::NotASubgradient, "x* fails the subgradient test for f o F");
  auto xs = detail::sorted_ball(xbar, eps, s);
  auto ys = detail::sorted_ball(ybar, eps, s);
  if (ys.size() > 64) ys.resize(64);
  for (const auto& x : xs) {
    Eigen::MatrixXd jt;
    try {
      jt = F.jac(x).transpose();
    } catch (const Error&) {
      continue;
    }
    std::vector<Point> cands{F.eval(x)};
    cands.insert(cands.end(), ys.begin(), ys.end());
    for (const auto& y : cands) {
      if (dist(y, ybar) >= eps) continue;
      ExtReal v = f(y);
      if (!v.is_finite() || std::abs((v - fy).value()) >= eps) continue;
      DualSet d = f.subgrad(y);
      for (const auto& piece : d.pieces) {
        DualPiece image = DualSet{d.dim, {piece}}.mapped(jt).pieces[0];
        auto fit = l1_fit(xstar, {&image});
        if (!(fit.residual <= eps)) continue;
        ChainWitness w;
        w.x = x;
        w.y = y;
        w.v = fit.parts[0];
        w.ystar = combine(piece, fit.coeffs, static_cast<int>(y.size()));
        w.residual = fit.residual;
        return w;
      }
    }
  }
  return std::nullopt;
}

}  // namespace decouple
