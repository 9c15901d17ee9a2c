#pragma once

#include "decouple/decoupling.hpp"

#include <map>

namespace decouple {

enum class LscProperty { Uniform, Quasiuniform, FirmUniform, FirmQuasiuniform };

inline const char* to_string(LscProperty p) {
  switch (p) {
    case LscProperty::Uniform: return "uniform";
    case LscProperty::Quasiuniform: return "quasiuniform";
    case LscProperty::FirmUniform: return "firm_uniform";
    case LscProperty::FirmQuasiuniform: return "firm_quasiuniform";
  }
  return "?";
}

inline bool is_firm(LscProperty p) {
  return p == LscProperty::FirmUniform || p == LscProperty::FirmQuasiuniform;
}
inline bool is_quasi(LscProperty p) {
  return p == LscProperty::Quasiuniform || p == LscProperty::FirmQuasiuniform;
}

inline const std::vector<double>& default_eps_grid() {
  static const std::vector<double> g{1.0, 0.3, 0.1, 0.03, 0.01};
  return g;
}

/// Outcome for one epsilon: which levels passed and the coupling radius that worked.
struct EpsResult {
  double eps = 0.0;
  std::vector<bool> level_pass;
  std::vector<double> violations;  // worst shortfall per level, 0 where the level passed
  std::optional<double> eta;
  VerdictStatus status = VerdictStatus::Inconclusive;
  std::vector<Point> witness;
};

struct Certificate {
  LscProperty property = LscProperty::Uniform;
  Verdict verdict;
  std::vector<EpsResult> per_eps;
};

struct CertifyOptions {
  std::vector<double> eps_grid = default_eps_grid();
  Companion companion;
};

namespace detail {

struct FailRecord {
  bool set = false;
  double violation = 0.0;
  double balance = 0.0;
  Point x1, x2;

  /// Keeps the worst violation; ties go to the pair most balanced around the anchor.
  void offer(double v, const Point& a, const Point& b, const Point& anchor) {
    double bal = std::abs((a - anchor).norm() - (b - anchor).norm());
    bool better = !set || v > violation ||
                  (v == violation && (bal < balance || (bal == balance && lex_less(x1, a))));
    if (better) {
      set = true;
      violation = v;
      balance = bal;
      x1 = a;
      x2 = b;
    }
  }
};

}  // namespace detail

/// Epsilon-eta test of the chosen lower semicontinuity property of (f1, f2) on U.
inline Certificate certify(const FnOracle& f1, const FnOracle& f2, const Region& u, LscProperty prop,
                           const SampleScheme& s, const CertifyOptions& opt = {}) {
  Decoupler(f1, f2, u, s).check_common_domain();
  const auto& grid = opt.eps_grid;
  const std::size_t ne = grid.size();
  std::vector<std::vector<bool>> pass(ne);
  std::vector<std::vector<double>> etas(ne), viol(ne);
  std::vector<detail::FailRecord> last_fail(ne);
  std::optional<EIFamily> fam;
  if (is_quasi(prop)) fam = ei_family_for(u, s.stages);
  const Point anchor = u.sampling_anchor();

  for (int j = 0; j < s.levels; ++j) {
    const double eta = s.eta(j);
    auto su = samples(u, j, s);
    detail::SumTable table(f1, f2, u, su);
    std::vector<bool> ok(ne, true);
    std::vector<detail::FailRecord> fails(ne);
    auto check = [&](const Point& x1, const Point& x2, ExtReal c) {
      for (std::size_t e = 0; e < ne; ++e) {
        const double eps = grid[e];
        const double threshold = (c + eps).value();
        double best;
        if (!is_firm(prop)) best = table.inf().value();
        else best = table.min_near(x1, x2, eps, prop == LscProperty::FirmUniform, threshold);
        if (!(best < threshold)) {
          ok[e] = false;
          fails[e].offer(best - threshold, x1, x2, anchor);
        }
      }
    };
    if (!fam) {
      auto f1u = detail::eval_all(f1, su);
      auto f2u = detail::eval_all(f2, su);
      PointIndex iu(&su);
      detail::scan_pairs(f2, su, f1u, f2u, iu, eta, [&](const Point& p) { return u.contains(p); },
                         [&](std::size_t i, const Point& x2, ExtReal v2) {
                           check(su[i], x2, f1u[i] + v2);
                         }, opt.companion);
    } else {
      for (std::size_t m = 0; m < fam->members.size(); ++m) {
        const auto& mem = fam->members[m];
        double em = std::min(std::ldexp(eta, -static_cast<int>(m + 1)), 0.5 * mem.gap);
        auto sv = samples(mem.region, j, s);
        auto f1v = detail::eval_all(f1, sv);
        auto f2v = detail::eval_all(f2, sv);
        PointIndex iv(&sv);
        detail::scan_pairs(f2, sv, f1v, f2v, iv, em, [](const Point&) { return true; },
                           [&](std::size_t i, const Point& x2, ExtReal v2) {
                             check(sv[i], x2, f1v[i] + v2);
                           }, opt.companion);
      }
    }
    for (std::size_t e = 0; e < ne; ++e) {
      pass[e].push_back(ok[e]);
      etas[e].push_back(eta);
      viol[e].push_back(ok[e] ? 0.0 : fails[e].violation);
      if (!ok[e]) last_fail[e] = fails[e];
    }
  }

  Certificate cert;
  cert.property = prop;
  bool any_fail = false, all_hold = true;
  std::vector<Point> witness;
  for (std::size_t e = 0; e < ne; ++e) {
    EpsResult r;
    r.eps = grid[e];
    r.level_pass = pass[e];
    r.violations = viol[e];
    const auto n = pass[e].size();
    if (pass[e].back()) {
      r.status = VerdictStatus::Holds;
      std::size_t first = n - 1;
      while (first > 0 && pass[e][first - 1]) --first;
      r.eta = etas[e][first];
    } else if (n >= 2 && !pass[e][n - 2]) {
      r.status = VerdictStatus::Fails;
      r.witness = {last_fail[e].x1, last_fail[e].x2};
      if (!any_fail) witness = r.witness;
      any_fail = true;
    }
    if (r.status != VerdictStatus::Holds) all_hold = false;
    cert.per_eps.push_back(std::move(r));
  }
  if (any_fail) cert.verdict = Verdict::fails(witness, "a tested epsilon admits no working eta");
  else if (all_hold) cert.verdict = Verdict::holds("every tested epsilon admits an eta");
  else cert.verdict = Verdict::inconclusive(s.eta(s.levels - 1), "unstable", "failures at finest level only");
  return cert;
}

struct NearCertificate {
  Verdict verdict;
  std::vector<std::pair<double, Certificate>> radii;
};

/// Tests the property on balls around xbar of radii delta0 * 2^-i, i <= 4.
inline NearCertificate certify_near(const FnOracle& f1, const FnOracle& f2, const Point& xbar,
                                    LscProperty prop, const SampleScheme& s, double delta0 = 0.5,
                                    const CertifyOptions& opt = {}) {
  NearCertificate out;
  if (prop == LscProperty::FirmQuasiuniform) {
    bool all_fail = true;
    for (int i = 0; i <= 4; ++i) {
      double d = std::ldexp(delta0, -i);
      auto c = certify(f1, f2, Region::open_ball(xbar, d), prop, s, opt);
      out.radii.emplace_back(d, c);
      if (c.verdict.is_holds()) {
        out.verdict = Verdict::holds("holds on a ball of radius " + std::to_string(d));
        return out;
      }
      if (!c.verdict.is_fails()) all_fail = false;
    }
    if (all_fail) out.verdict = Verdict::fails(out.radii.back().second.verdict.witness);
    else out.verdict = Verdict::inconclusive(std::ldexp(delta0, -4), "mixed");
    return out;
  }
  for (int i = 3; i <= 4; ++i) {
    double d = std::ldexp(delta0, -i);
    out.radii.emplace_back(d, certify(f1, f2, Region::closed_ball(xbar, d), prop, s, opt));
  }
  const auto& a = out.radii[0].second.verdict;
  const auto& b = out.radii[1].second.verdict;
  if (a.is_holds() && b.is_holds()) out.verdict = Verdict::holds("holds on the two smallest balls");
  else if (a.is_fails() && b.is_fails()) out.verdict = Verdict::fails(b.witness);
  else out.verdict = Verdict::inconclusive(std::ldexp(delta0, -4), "mixed");
  return out;
}

/// Verdicts that contradict the implications between the four properties.
inline std::vector<std::string> implication_violations(const std::map<LscProperty, VerdictStatus>& v) {
  using P = LscProperty;
  const std::pair<P, P> arrows[] = {{P::FirmUniform, P::FirmQuasiuniform},
                                    {P::FirmQuasiuniform, P::Quasiuniform},
                                    {P::FirmUniform, P::Uniform},
                                    {P::Uniform, P::Quasiuniform},
                                    {P::FirmUniform, P::Quasiuniform}};
  std::vector<std::string> out;
  for (auto [from, to] : arrows) {
    auto a = v.find(from), b = v.find(to);
    if (a == v.end() || b == v.end()) continue;
    if (a->second == VerdictStatus::Holds && b->second == VerdictStatus::Fails)
      out.push_back(std::string(to_string(from)) + " HOLDS but " + to_string(to) + " FAILS");
  }
  return out;
}

/// f + c * ||x - center||.
inline FnOracle with_norm_penalty(const FnOracle& f, double c, const Point& center) {
  FnOracle g = f;
  g.eval = [f, c, center](const Point& x) { return f(x) + ExtReal(c * dist(x, center)); };
  return g;
}

inline FnOracle indicator(const SetOracle& set) {
  FnOracle f;
  f.dim = set.dim;
  f.eval = [set](const Point& x) { return set.contains(x) ? ExtReal(0.0) : ExtReal::pos_inf(); };
  f.lower_bound_hint = 0.0;
  return f;
}

/// Property of f relative to the set, i.e. of the pair (f, indicator of the set).
inline Certificate certify_relative(const FnOracle& f, const SetOracle& omega, const Region& u,
                                    LscProperty prop, const SampleScheme& s,
                                    std::vector<double> eps_grid = default_eps_grid()) {
  CertifyOptions opt;
  opt.eps_grid = std::move(eps_grid);
  if (omega.project) {
    opt.companion = [omega](const Point& x) -> std::optional<Point> { return omega.project(x); };
  }
  return certify(f, indicator(omega), u, prop, s, opt);
}

struct SufficientReport {
  Verdict f2_constant_on_dom_f1;
  Verdict singleton_dom_f2;
  Verdict f2_uniformly_continuous;
  Verdict compact_domains;
  Verdict bounded_coupled_sums;
  Verdict bounded_inner_coupled_sums;
};

/// Sampled checks of the standard sufficient conditions for uniform lower semicontinuity.
inline SufficientReport sufficient_conditions(const FnOracle& f1, const FnOracle& f2, const Region& u,
                                              const SampleScheme& s) {
  SufficientReport r;
  const int L = s.levels - 1;
  auto su = samples(u, L, s);
  auto f1u = detail::eval_all(f1, su);
  auto f2u = detail::eval_all(f2, su);
  const double tol = 5e-2;

  {
    std::optional<double> c;
    Verdict v = Verdict::holds();
    for (std::size_t i = 0; i < su.size() && v.is_holds(); ++i) {
      if (f1u[i].is_pos_inf()) continue;
      if (!c) c = f2u[i].value();
      else if (std::abs(f2u[i].value() - *c) > kDefaultTol) v = Verdict::fails({su[i]}, "f2 not constant");
    }
    for (std::size_t i = 0; i < su.size() && v.is_holds() && c; ++i)
      if (f2u[i].value() < *c - kDefaultTol) v = Verdict::fails({su[i]}, "f2 below its value on dom f1");
    r.f2_constant_on_dom_f1 = c ? v : Verdict::inconclusive(s.eta(L), "empty", "dom f1 not sampled");
  }
  {
    std::vector<Point> dom;
    for (std::size_t i = 0; i < su.size(); ++i)
      if (!f2u[i].is_pos_inf()) dom.push_back(su[i]);
    if (dom.size() == 1) r.singleton_dom_f2 = Verdict::holds("one sampled point");
    else if (dom.empty()) r.singleton_dom_f2 = Verdict::inconclusive(s.eta(L), "empty");
    else r.singleton_dom_f2 = Verdict::fails({dom[0], dom[1]});
  }
  {
    std::vector<double> omega;
    std::vector<Point> worst;
    bool infinite = false;
    for (std::size_t i = 0; i < su.size(); ++i)
      if (!f2u[i].is_finite()) {
        infinite = true;
        worst = {su[i]};
      }
    if (infinite) {
      r.f2_uniformly_continuous = Verdict::fails(worst, "f2 not finite on U");
    } else {
      PointIndex idx(&su);
      for (int j = std::max(0, L - 2); j <= L; ++j) {
        double w = 0.0, eta = s.eta(j);
        for (std::size_t i = 0; i < su.size(); ++i)
          idx.within(su[i], eta, [&](std::size_t k) {
            double d = std::abs(f2u[i].value() - f2u[k].value());
            if (d > w) {
              w = d;
              worst = {su[i], su[k]};
            }
            return true;
          });
        omega.push_back(w);
      }
      auto n = omega.size();
      if (omega[n - 1] < tol && omega[n - 1] <= omega[n - 2]) r.f2_uniformly_continuous = Verdict::holds();
      else if (omega[n - 1] >= tol && omega[n - 2] >= tol && omega[n - 1] >= omega[n - 2] / 2)
        r.f2_uniformly_continuous = Verdict::fails(worst, "modulus does not shrink");
      else r.f2_uniformly_continuous = Verdict::inconclusive(s.eta(L), detail::trend_of(omega));
    }
  }
  r.compact_domains = Verdict::holds("finite sample sets are compact");

  auto bounded = [&](bool inner) {
    double sup = -kInf;
    std::vector<Point> w;
    auto visit_set = [&](const std::vector<Point>& xs, double eta, bool free) {
      auto a = detail::eval_all(f1, xs);
      auto b = detail::eval_all(f2, xs);
      PointIndex idx(&xs);
      detail::scan_pairs(f2, xs, a, b, idx, eta,
                         [&](const Point& p) { return free || u.contains(p); },
                         [&](std::size_t i, const Point& x2, ExtReal v2) {
                           double v = (a[i] + v2).value();
                           if (v > sup) {
                             sup = v;
                             w = {xs[i], x2};
                           }
                         });
    };
    if (!inner) {
      visit_set(su, s.eta(L), false);
    } else {
      auto fam = ei_family_for(u, s.stages);
      for (std::size_t m = 0; m < fam.members.size(); ++m) {
        const auto& mem = fam.members[m];
        visit_set(samples(mem.region, L, s),
                  std::min(std::ldexp(s.eta(L), -static_cast<int>(m + 1)), 0.5 * mem.gap), true);
      }
    }
    if (sup > s.divergence) return Verdict::fails(w, "coupled sums exceed the divergence threshold");
    return Verdict::holds("bounded by " + std::to_string(sup));
  };
  r.bounded_coupled_sums = bounded(false);
  try {
    r.bounded_inner_coupled_sums = bounded(true);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EmptyInterior) throw;
    r.bounded_inner_coupled_sums = Verdict::holds("empty interior");
  }
  return r;
}

namespace detail {

/// Upper estimate of dist(x, A ∩ B) from sampled common points and alternating projections.
inline double dist_to_intersection(const Point& x, const SetOracle& a, const SetOracle& b,
                                   const PointIndex& common_idx, const std::vector<Point>& common) {
  double best = kInf;
  if (a.project && b.project) {
    Point z = x;
    for (int k = 0; k < 200; ++k) {
      z = b.project(a.project(z));
      if (a.contains(z) && b.contains(z)) {
        best = dist(x, z);
        break;
      }
    }
  }
  (void)common;
  common_idx.within(x, best, [&](std::size_t i) {
    best = std::min(best, dist(x, common[i]));
    return true;
  });
  return best;
}

}  // namespace detail

struct SetPairReport {
  Verdict verdict;
  std::vector<double> trace;
  double value = 0.0;
};

/// Limsup of dist(x, O1 ∩ O2 ∩ U) over x in O1 ∩ U (or O1 ∩ V for inner members) with
/// dist(x, O2) tending to zero. The pair is firmly uniformly LSC when the trace tends to 0.
inline SetPairReport certify_pair_of_sets(const SetOracle& o1, const SetOracle& o2, const Region& u,
                                          bool quasi, const SampleScheme& s) {
  SetPairReport r;
  const double tol = 5e-2;
  std::vector<Point> worst;
  std::vector<Region> where;
  if (quasi) {
    for (auto& m : ei_family_for(u, s.stages).members) where.push_back(m.region);
  } else {
    where.push_back(u);
  }
  for (int j = 0; j < s.levels; ++j) {
    const double eta = s.eta(j);
    auto su = samples(u, j, s);
    std::vector<Point> common;
    for (auto& p : su)
      if (o1.contains(p) && o2.contains(p)) common.push_back(p);
    PointIndex ci(&common);
    double sup = 0.0;
    for (const auto& w : where) {
      for (const auto& x : (quasi ? samples(w, j, s) : su)) {
        if (!o1.contains(x) || !(o2.dist(x) < eta)) continue;
        double d = detail::dist_to_intersection(x, o1, o2, ci, common);
        if (d > sup) {
          sup = d;
          worst = {x};
        }
      }
    }
    r.trace.push_back(sup);
  }
  r.value = r.trace.back();
  auto n = r.trace.size();
  if (r.value < tol && (n < 2 || r.value <= r.trace[n - 2] + kDefaultTol))
    r.verdict = Verdict::holds("distance to the intersection tends to 0");
  else if (n >= 2 && r.value >= tol && r.trace[n - 2] >= tol) r.verdict = Verdict::fails(worst);
  else r.verdict = Verdict::inconclusive(s.eta(s.levels - 1), detail::trend_of(r.trace));
  return r;
}

struct SubtransversalityReport {
  Verdict verdict;
  std::vector<double> trace;
  double alpha = 0.0;
};

/// Sampled sup over x in the closed delta-ball of dist(x, O1 ∩ O2) / max(dist(x,O1), dist(x,O2)).
/// FAILS when the ratio trace keeps growing past the threshold.
inline SubtransversalityReport subtransversality_modulus(const SetOracle& o1, const SetOracle& o2,
                                                         const Point& xbar, double delta,
                                                         const SampleScheme& s,
                                                         double threshold = 1e3) {
  if (!o1.contains(xbar) || !o2.contains(xbar))
    throw Error(ErrorCode::BasePointNotInIntersection, "xbar must lie in both sets");
  SubtransversalityReport r;
  Region ball = Region::closed_ball(xbar, delta);
  std::vector<Point> worst;
  for (int j = 0; j < s.levels; ++j) {
    auto pts = samples(ball, j, s);
    std::vector<Point> common;
    for (auto& p : pts)
      if (o1.contains(p) && o2.contains(p)) common.push_back(p);
    PointIndex ci(&common);
    double sup = 0.0;
    for (const auto& x : pts) {
      double den = std::max(o1.dist(x), o2.dist(x));
      if (den <= kDefaultTol * kDefaultTol) continue;
      double ratio = detail::dist_to_intersection(x, o1, o2, ci, common) / den;
      if (ratio > sup) {
        sup = ratio;
        worst = {x};
      }
    }
    r.trace.push_back(sup);
  }
  r.alpha = r.trace.back();
  auto n = r.trace.size();
  bool growing = n >= 2 && r.trace[n - 1] >= r.trace[n - 2] && r.trace[n - 1] > r.trace[0];
  if (r.alpha > threshold && growing) {
    r.verdict = Verdict::fails(worst, "ratio grows without bound under refinement");
  } else if (n >= 2 && std::abs(r.trace[n - 1] - r.trace[n - 2]) <= 1e-2 * r.trace[n - 1] + kDefaultTol &&
             r.alpha <= threshold) {
    r.verdict = Verdict::holds("modulus estimate " + std::to_string(r.alpha));
  } else {
    r.verdict = Verdict::inconclusive(s.eta(s.levels - 1), detail::trend_of(r.trace));
  }
  return r;
}

}  // namespace decouple
