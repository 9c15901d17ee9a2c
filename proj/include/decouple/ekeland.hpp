#pragma once

#include "decouple/decoupling.hpp"
#include "decouple/subdifferential.hpp"

namespace decouple {

/// f(xhat) + eps * d(xhat, base) <= f(base)
inline bool ekeland_condition_i(double f_hat, double f_base, double eps, double d) {
  return f_hat + eps * d <= f_base;
}
/// f(xhat) < f(x) + eps * d(x, xhat)
inline bool ekeland_condition_ii(double f_hat, double f_x, double eps, double d) {
  return f_hat < f_x + eps * d;
}

struct EkelandResult {
  std::size_t index = 0;
  int steps = 0;
};

/// Point of a finite cloud satisfying both Ekeland conditions relative to the base point.
/// Points with identical coordinates count as the same point of the space.
inline EkelandResult ekeland_on_cloud(const std::vector<Point>& pts, const std::vector<double>& vals,
                                      std::size_t base, double eps) {
  if (pts.size() != vals.size() || base >= pts.size())
    throw Error(ErrorCode::InvalidArgument, "cloud and values must align");
  if (std::none_of(vals.begin(), vals.end(), [](double v) { return std::isfinite(v); }))
    throw Error(ErrorCode::AllInfinite, "no finite value in the cloud");
  if (!std::isfinite(vals[base])) throw Error(ErrorCode::InfiniteAtBase, "base value");
  if (!(eps > 0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  EkelandResult r;
  r.index = base;
  const std::size_t cap = 4 * pts.size() + 4;
  while (r.steps < static_cast<int>(cap)) {
    std::optional<std::size_t> next;
    const Point& cur = pts[r.index];
    const double fc = vals[r.index];
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double d = dist(pts[i], cur);
      if (d == 0.0 || !std::isfinite(vals[i])) continue;
      if (ekeland_condition_ii(fc, vals[i], eps, d)) continue;
      if (!next || vals[i] < vals[*next] || (vals[i] == vals[*next] && lex_less(pts[i], pts[*next])))
        next = i;
    }
    if (!next) break;
    r.index = *next;
    ++r.steps;
  }
  return r;
}

struct MinClassification {
  Verdict verdict;
  double value = 0.0;
  ExtReal lambda_dag = 0.0;
  double margin = 0.0;  // lambda_dag + eps - value
};

/// Tests (f1 + f2)(xbar) < lambda_dag on the open delta-ball + eps; eps = 0 uses the tolerance.
inline MinClassification classify_min(const FnOracle& f1, const FnOracle& f2, const Point& xbar,
                                      double eps, double delta, const SampleScheme& s) {
  ExtReal v = f1(xbar) + f2(xbar);
  if (!v.is_finite()) throw Error(ErrorCode::InfiniteAtBase, "(f1 + f2)(xbar)");
  MinClassification m;
  m.value = v.value();
  Decoupler dc(f1, f2, Region::open_ball(xbar, delta), s);
  m.lambda_dag = dc.run({false, true, true, false}).lambda_dag.value;
  if (m.lambda_dag.is_pos_inf()) {
    m.margin = kInf;
    m.verdict = Verdict::holds();
    return m;
  }
  if (m.lambda_dag.is_neg_inf()) {
    m.margin = -kInf;
    m.verdict = Verdict::fails({xbar}, "decoupled infimum is -inf");
    return m;
  }
  m.margin = m.lambda_dag.value() + eps - m.value;
  bool ok = eps > 0 ? m.margin > 0 : m.margin >= -s.tol;
  m.verdict = ok ? Verdict::holds() : Verdict::fails({xbar}, "margin " + std::to_string(m.margin));
  return m;
}

struct StationarityReport {
  Verdict verdict;
  Verdict plain;  // Frechet stationarity of f1 + f2 by difference quotients
  std::vector<double> eps_grid, radii;
  std::vector<double> limits;             // extrapolated interior infimum per radius
  std::vector<std::vector<bool>> passes;  // passes[e][i]
};

/// Limit of a nondecreasing refinement trace whose increments contract geometrically, with
/// stride 1 or 2 between compared levels; the last value when no stride contracts.
inline double extrapolated_limit(const std::vector<double>& t) {
  const auto n = t.size();
  if (n == 0) return kInf;
  double best = kInf;
  for (std::size_t stride : {1u, 2u}) {
    if (n < 2 * stride + 1) continue;
    double d1 = t[n - 1 - stride] - t[n - 1 - 2 * stride], d2 = t[n - 1] - t[n - 1 - stride];
    if (!(d1 > 0 && d2 > 0)) continue;
    double q = d2 / d1;
    if (q <= 0.75) best = std::min(best, t[n - 1] + d2 * q / (1 - q));
  }
  return best == kInf ? t.back() : best;
}

/// Quasiuniform stationarity: for every eps the point is an (eps * delta)-minimum on small balls.
/// The interior infimum is the extrapolated limit of its trace, which approaches from below.
inline StationarityReport classify_stationary(const FnOracle& f1, const FnOracle& f2, const Point& xbar,
                                              const SampleScheme& s, double delta0 = 0.5) {
  StationarityReport r;
  r.eps_grid = {1.0, 0.3, 0.1, 0.03, 0.01};
  ExtReal v = f1(xbar) + f2(xbar);
  if (!v.is_finite()) throw Error(ErrorCode::InfiniteAtBase, "(f1 + f2)(xbar)");
  std::vector<ExtReal> lams;
  for (int i = 0; i <= 4; ++i) {
    double d = std::ldexp(delta0, -i);
    r.radii.push_back(d);
    Decoupler dc(f1, f2, Region::open_ball(xbar, d), s);
    auto q = dc.run({false, true, true, false}).lambda_dag;
    lams.push_back(q.value.is_finite() ? ExtReal(extrapolated_limit(q.trace)) : q.value);
    r.limits.push_back(lams.back().value());
  }
  bool fail = false;
  for (double e : r.eps_grid) {
    std::vector<bool> row;
    for (std::size_t i = 0; i < r.radii.size(); ++i)
      row.push_back(lams[i].is_pos_inf() || (lams[i].is_finite() && v.value() < lams[i].value() + e * r.radii[i]));
    if (!row[3] && !row[4]) fail = true;
    r.passes.push_back(row);
  }
  bool hold = true;
  for (auto& row : r.passes) hold = hold && row[3] && row[4];
  if (hold) r.verdict = Verdict::holds();
  else if (fail) r.verdict = Verdict::fails({xbar}, "not an (eps*delta)-minimum on the smallest balls");
  else r.verdict = Verdict::inconclusive(r.radii.back(), "mixed");
  r.plain = is_subgradient(sum(f1, f2), xbar, Point::Zero(xbar.size())).verdict;
  return r;
}

struct PenalizedResult {
  Point x1hat, x2hat;
  double eps_prime = 0, rho = 0, alpha = 0, xi = 0, gamma = 0, c = 0;
  double base_value = 0;   // (f1 + f2)(xbar)
  double phi_value = 0;    // f1 + f2 + gamma d(x1hat, x2hat)
  double slope = 0;        // sampled slope of the penalized function at the chosen pair
  double slope_bound = 0;  // 2 eps / delta
  std::size_t cloud_size = 0;
  bool closeness = false, coupling = false, value_ok = false;
  Verdict slope_check;
};

/// Penalized decoupled search around a quasiuniform eps-minimum, followed by Ekeland on the
/// sampled product cloud.
inline PenalizedResult penalized_search(const FnOracle& f1, const FnOracle& f2, const Point& xbar,
                                        double eps, double delta, double eta, const SampleScheme& s) {
  if (!(eps > 0 && delta > 0 && eta > 0)) throw Error(ErrorCode::InvalidArgument, "eps, delta, eta > 0");
  auto cm = classify_min(f1, f2, xbar, eps, delta, s);
  if (!cm.verdict.is_holds())
    throw Error(ErrorCode::QuasiuniformEpsMinNotCertified, "xbar is not a quasiuniform eps-minimum");
  PenalizedResult r;
  r.base_value = cm.value;
  double gap = cm.lambda_dag.is_finite() ? std::max(0.0, cm.value - cm.lambda_dag.value()) : 0.0;
  r.eps_prime = (gap + eps) / 2;
  r.rho = (delta * r.eps_prime / eps + delta) / 2;
  r.alpha = r.eps_prime / (r.rho * r.rho);
  r.xi = 2 * (eps / delta - r.eps_prime / r.rho);
  r.slope_bound = 2 * eps / delta;

  int level = 0;
  Region ball = Region::closed_ball(xbar, r.rho);
  while (level + 1 < s.levels && samples(ball, level + 1, s).size() <= 1000) ++level;
  auto pts = samples(ball, level, s);
  auto f1v = detail::eval_all(f1, pts);
  auto f2v = detail::eval_all(f2, pts);

  double m1 = kInf, m2 = kInf;
  for (const auto& p : samples(Region::open_ball(xbar, delta), level, s)) {
    m1 = std::min(m1, f1(p).value());
    m2 = std::min(m2, f2(p).value());
  }
  if (!(m1 + m2 > -s.divergence)) throw Error(ErrorCode::NotBoundedBelow, "decoupled sum on the delta-ball");
  r.c = r.base_value - (m1 + m2) + 1.0;

  PointIndex idx(&pts);
  auto implication_holds = [&](double radius) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (f1v[i].is_pos_inf()) continue;
      bool ok = true;
      idx.within(pts[i], radius, [&](std::size_t k) {
        if (!f2v[k].is_pos_inf() && !(r.base_value < (f1v[i] + f2v[k]).value() + r.eps_prime)) ok = false;
        return ok;
      });
      if (!ok) return false;
    }
    return true;
  };
  const double gamma_cap = std::ldexp(r.c / eta, 20);
  r.gamma = 2 * r.c / eta;
  while (!implication_holds(r.c / r.gamma)) {
    r.gamma *= 2;
    if (r.gamma > gamma_cap) throw Error(ErrorCode::GammaSearchFailed, "no gamma up to the cap");
  }

  std::vector<Point> cloud;
  std::vector<double> phihat, phi;
  const int n = static_cast<int>(xbar.size());
  std::size_t base = 0;
  bool have_base = false;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (f1v[i].is_pos_inf()) continue;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (f2v[k].is_pos_inf()) continue;
      Point u(2 * n);
      u << pts[i], pts[k];
      double d12 = dist(pts[i], pts[k]);
      double p = (f1v[i] + f2v[k]).value() + r.gamma * d12;
      double dx = std::max(dist(pts[i], xbar), dist(pts[k], xbar));
      if (dist(pts[i], xbar) == 0 && dist(pts[k], xbar) == 0) {
        base = cloud.size();
        have_base = true;
      }
      cloud.push_back(std::move(u));
      phi.push_back(p);
      phihat.push_back(p + r.alpha * dx * dx);
    }
  }
  if (!have_base) throw Error(ErrorCode::InfiniteAtBase, "(xbar, xbar) not in the cloud");
  r.cloud_size = cloud.size();
  auto ek = ekeland_on_cloud(cloud, phihat, base, r.xi);
  const Point& w = cloud[ek.index];
  r.x1hat = w.head(n);
  r.x2hat = w.tail(n);
  r.phi_value = phi[ek.index];
  Point bb(2 * n);
  bb << xbar, xbar;
  r.closeness = dist(w, bb) < r.rho;
  r.coupling = dist(r.x1hat, r.x2hat) < eta;
  r.value_ok = r.phi_value <= r.base_value;
  Point worst;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    double d = dist(cloud[i], w);
    if (d == 0) continue;
    double sl = (r.phi_value - phi[i]) / d;
    if (sl > r.slope) {
      r.slope = sl;
      worst = cloud[i];
    }
  }
  r.slope_check = r.slope < r.slope_bound ? Verdict::holds()
                                          : Verdict::fails({worst}, "slope " + std::to_string(r.slope));
  return r;
}

}  // namespace decouple
