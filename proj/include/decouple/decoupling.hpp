#pragma once

#include "decouple/core.hpp"
#include "decouple/sampling.hpp"

#include <sstream>

namespace decouple {

/// A limit estimated from a multilevel trace.
struct Quantity {
  ExtReal value = 0.0;
  Verdict verdict;
  std::vector<double> trace;
};

struct DecouplingReport {
  Quantity lambda, lambda_circ, lambda_dag, theta_circ, theta_dag;
  ExtReal inf_sum = ExtReal::pos_inf();
  std::vector<double> etas;
  /// Final-level member values, member i at index i - 1.
  std::vector<double> lambda_dag_members, theta_dag_members;
  std::vector<std::string> violations;
  Verdict invariants;
};

struct DecouplingOptions {
  bool lambda = true;
  bool circ = true;
  bool dag = true;
  bool theta = true;
};

/// Proposes a partner point for x1, typically a projection onto dom f2.
using Companion = std::function<std::optional<Point>(const Point&)>;

namespace detail {

inline std::string trend_of(const std::vector<double>& t) {
  if (t.size() < 2) return "single";
  bool up = true, down = true;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t[i] < t[i - 1]) up = false;
    if (t[i] > t[i - 1]) down = false;
  }
  if (up && down) return "constant";
  if (up) return "nondecreasing";
  if (down) return "nonincreasing";
  return "oscillating";
}

/// Limit of an inf-type trace (liminf quantities).
inline Quantity finalize_inf(std::vector<double> trace, const SampleScheme& s, double eta_last) {
  Quantity q;
  q.trace = std::move(trace);
  double last = q.trace.back();
  if (last < -s.divergence) {
    q.value = ExtReal::neg_inf();
    q.verdict = Verdict::holds("trace diverges to -inf");
    return q;
  }
  q.value = last;
  if (last == kInf) {
    q.verdict = Verdict::inconclusive(eta_last, "empty", "no finite coupled pair");
    return q;
  }
  auto n = q.trace.size();
  if (n >= 2 && std::abs(last - q.trace[n - 2]) < s.tol) q.verdict = Verdict::holds("converged");
  else q.verdict = Verdict::inconclusive(eta_last, trend_of(q.trace));
  return q;
}

/// Limit of a sup-type trace of nonnegative values (limsup quantities).
inline Quantity finalize_sup(std::vector<double> trace, const SampleScheme& s, double eta_last) {
  Quantity q;
  q.trace = std::move(trace);
  double last = q.trace.back();
  if (last > s.divergence) {
    q.value = ExtReal::pos_inf();
    q.verdict = Verdict::holds("trace diverges to +inf");
    return q;
  }
  q.value = last;
  auto n = q.trace.size();
  if (n >= 2 && std::abs(last - q.trace[n - 2]) < s.tol) q.verdict = Verdict::holds("converged");
  else q.verdict = Verdict::inconclusive(eta_last, trend_of(q.trace));
  return q;
}

inline std::vector<ExtReal> eval_all(const FnOracle& f, const std::vector<Point>& pts) {
  std::vector<ExtReal> v;
  v.reserve(pts.size());
  for (const auto& p : pts) v.push_back(f(p));
  return v;
}

/// Sampled view of (f1 + f2) on U used to evaluate the diamond gap.
class SumTable {
 public:
  SumTable(const FnOracle& f1, const FnOracle& f2, const Region& u, std::vector<Point> pts)
      : f1_(&f1), f2_(&f2), u_(&u) {
    for (auto& p : pts) {
      ExtReal s = f1(p) + f2(p);
      inf_ = std::min(inf_, s);
      if (s < ExtReal::pos_inf()) {
        pts_.push_back(std::move(p));
        vals_.push_back(s.value());
      }
    }
    index_ = PointIndex(&pts_);
  }
  SumTable(const SumTable&) = delete;
  SumTable& operator=(const SumTable&) = delete;

  /// Smallest sum value seen at any point of U, including candidates evaluated on the way.
  ExtReal inf() const { return inf_; }

  /// Smallest s(x) over candidates x1, x2, their midpoint and U samples with d(x, x1) < r.
  /// Candidates outside U are used only when in_u_only is false. Stops once below stop.
  double min_near(const Point& x1, const Point& x2, double r, bool in_u_only, double stop) {
    double best = kInf;
    const Point mid = (x1 + x2) / 2.0;
    for (const Point* x : {&x1, &x2, &mid}) {
      if (dist(*x, x1) >= r) continue;
      if (in_u_only && !u_->contains(*x)) continue;
      ExtReal s = (*f1_)(*x) + (*f2_)(*x);
      best = std::min(best, s.value());
      if (best < stop) return best;
    }
    index_.within(x1, r, [&](std::size_t i) {
      best = std::min(best, vals_[i]);
      return !(best < stop);
    });
    return best;
  }

  /// Upper estimate of inf over x in U of max{d(x,x1), d(x,x2), s(x) - c}.
  ExtReal diamond(const Point& x1, const Point& x2, ExtReal c) {
    if (c.is_neg_inf()) return ExtReal::pos_inf();
    if (c.is_pos_inf()) return 0.0;
    double best = kInf;
    const double cv = c.value();
    auto consider = [&](const Point& x, double s) {
      best = std::min(best, std::max({dist(x, x1), dist(x, x2), s - cv}));
    };
    const Point mid = (x1 + x2) / 2.0;
    for (const Point* x : {&x1, &x2, &mid}) {
      if (!u_->contains(*x)) continue;
      ExtReal s = (*f1_)(*x) + (*f2_)(*x);
      inf_ = std::min(inf_, s);
      if (s.is_neg_inf()) return 0.0;
      if (s.is_finite()) consider(*x, s.value());
    }
    const double lower = dist(x1, x2) / 2.0;
    if (best > lower) {
      index_.within(x1, best, [&](std::size_t i) {
        consider(pts_[i], vals_[i]);
        return best > lower;
      });
    }
    return best;
  }

 private:
  const FnOracle* f1_;
  const FnOracle* f2_;
  const Region* u_;
  std::vector<Point> pts_;
  std::vector<double> vals_;
  PointIndex index_;
  ExtReal inf_ = ExtReal::pos_inf();
};

/// Visits coupled pairs (x1, x2) with x1 from xs, d(x1, x2) < eta, x2 drawn from the
/// pool and from a stencil around x1. Only pairs with f1(x1), f2(x2) < +inf are visited.
template <class Admit, class Visit>
void scan_pairs(const FnOracle& f2, const std::vector<Point>& xs, const std::vector<ExtReal>& f1v,
                const std::vector<ExtReal>& f2v, const PointIndex& idx, double eta, Admit&& admit,
                Visit&& visit, const Companion& companion = {}) {
  const auto offsets = stencil(static_cast<int>(xs.empty() ? 1 : xs[0].size()), eta);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (f1v[i].is_pos_inf()) continue;
    const Point& x1 = xs[i];
    idx.within(x1, eta, [&](std::size_t j) {
      if (!f2v[j].is_pos_inf()) visit(i, xs[j], f2v[j]);
      return true;
    });
    for (const auto& o : offsets) {
      if (o.isZero()) continue;
      Point x2 = x1 + o;
      if (!admit(x2)) continue;
      ExtReal v = f2(x2);
      if (!v.is_pos_inf()) visit(i, x2, v);
    }
    if (companion) {
      auto c = companion(x1);
      if (c && dist(*c, x1) < eta && admit(*c)) {
        ExtReal v = f2(*c);
        if (!v.is_pos_inf()) visit(i, *c, v);
      }
    }
  }
}

}  // namespace detail

/// Multilevel estimator for the decoupled infima and the decoupling gaps of (f1, f2) on U.
class Decoupler {
 public:
  Decoupler(FnOracle f1, FnOracle f2, Region u, SampleScheme scheme)
      : f1_(std::move(f1)), f2_(std::move(f2)), u_(std::move(u)), s_(scheme) {
    if (f1_.dim != f2_.dim || f1_.dim != u_.dim())
      throw Error(ErrorCode::DimensionMismatch, "f1, f2 and U must share a dimension");
    if (s_.levels < 1) throw Error(ErrorCode::InvalidArgument, "levels must be positive");
  }

  const SampleScheme& scheme() const { return s_; }
  void set_companion(Companion c) { companion_ = std::move(c); }

  /// Throws PreconditionFailed when no sample of U lies in dom f1 and dom f2.
  void check_common_domain() const {
    for (int j = s_.levels - 1; j >= 0; j -= std::max(1, s_.levels / 3)) {
      for (const auto& p : samples(u_, j, s_))
        if (f1_(p) < ExtReal::pos_inf() && f2_(p) < ExtReal::pos_inf()) return;
    }
    throw Error(ErrorCode::PreconditionFailed, "dom f1, dom f2 and U have no common sample");
  }

  DecouplingReport run(const DecouplingOptions& opt = {}) const {
    check_common_domain();
    DecouplingReport rep;
    std::vector<double> lam, circ, dag, th_circ, th_dag;
    std::optional<EIFamily> fam;
    if (opt.dag) {
      try {
        fam = ei_family_for(u_, s_.stages);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyInterior) throw;
      }
    }
    ExtReal inf_sum = ExtReal::pos_inf();
    for (int j = 0; j < s_.levels; ++j) {
      const double eta = s_.eta(j);
      rep.etas.push_back(eta);
      auto su = samples(u_, j, s_);
      if (su.empty()) throw Error(ErrorCode::EmptyCoupling, "no samples in U");
      detail::SumTable table(f1_, f2_, u_, su);
      auto f1u = detail::eval_all(f1_, su);
      auto f2u = detail::eval_all(f2_, su);
      PointIndex iu(&su);
      double lc = kInf, tc = 0.0;
      auto in_u = [&](const Point& p) { return u_.contains(p); };
      detail::scan_pairs(f2_, su, f1u, f2u, iu, eta, in_u,
                         [&](std::size_t i, const Point& x2, ExtReal v2) {
                           ExtReal c = f1u[i] + v2;
                           lc = std::min(lc, c.value());
                           if (opt.theta) tc = std::max(tc, table.diamond(su[i], x2, c).value());
                         }, companion_);
      double dag_j = kInf, th_dag_j = 0.0;
      if (fam) {
        std::vector<double> mv, tv;
        for (std::size_t m = 0; m < fam->members.size(); ++m) {
          const auto& mem = fam->members[m];
          double em = std::min(std::ldexp(eta, -static_cast<int>(m + 1)), 0.5 * mem.gap);
          auto sv = samples(mem.region, j, s_);
          auto f1v = detail::eval_all(f1_, sv);
          auto f2v = detail::eval_all(f2_, sv);
          PointIndex iv(&sv);
          double mval = kInf, tval = 0.0;
          detail::scan_pairs(f2_, sv, f1v, f2v, iv, em, [](const Point&) { return true; },
                             [&](std::size_t i, const Point& x2, ExtReal v2) {
                               ExtReal c = f1v[i] + v2;
                               mval = std::min(mval, c.value());
                               double t = opt.theta ? table.diamond(sv[i], x2, c).value() : 0.0;
                               tval = std::max(tval, t);
                               if (u_.contains(x2)) {
                                 lc = std::min(lc, c.value());
                                 tc = std::max(tc, t);
                               }
                             }, companion_);
          mv.push_back(mval);
          tv.push_back(tval);
          dag_j = std::min(dag_j, mval);
          th_dag_j = std::max(th_dag_j, tval);
        }
        if (j + 1 == s_.levels) {
          rep.lambda_dag_members = mv;
          rep.theta_dag_members = tv;
        }
      }
      double lj = lc;
      if (opt.lambda) {
        Region fat = u_.fattened(eta);
        auto sf = samples(fat, j, s_);
        auto f1f = detail::eval_all(f1_, sf);
        auto f2f = detail::eval_all(f2_, sf);
        PointIndex ifat(&sf);
        detail::scan_pairs(f2_, sf, f1f, f2f, ifat, eta,
                           [&](const Point& p) { return fat.contains(p); },
                           [&](std::size_t i, const Point&, ExtReal v2) {
                             lj = std::min(lj, (f1f[i] + v2).value());
                           }, companion_);
      }
      inf_sum = std::min(inf_sum, table.inf());
      lam.push_back(lj);
      circ.push_back(lc);
      dag.push_back(dag_j);
      th_circ.push_back(tc);
      th_dag.push_back(th_dag_j);
    }
    const double el = rep.etas.back();
    rep.inf_sum = inf_sum;
    rep.lambda = detail::finalize_inf(lam, s_, el);
    rep.lambda_circ = detail::finalize_inf(circ, s_, el);
    rep.theta_circ = detail::finalize_sup(th_circ, s_, el);
    if (fam) {
      rep.lambda_dag = detail::finalize_inf(dag, s_, el);
      rep.theta_dag = detail::finalize_sup(th_dag, s_, el);
    } else {
      rep.lambda_dag.value = ExtReal::pos_inf();
      rep.lambda_dag.verdict = Verdict::holds("empty interior");
      rep.theta_dag.value = 0.0;
      rep.theta_dag.verdict = Verdict::holds("empty interior");
    }
    check_invariants(rep, opt);
    return rep;
  }

  /// Upper estimate of the diamond gap at one pair, using the finest level of U.
  ExtReal diamond(const Point& x1, const Point& x2) const {
    detail::SumTable table(f1_, f2_, u_, samples(u_, s_.levels - 1, s_));
    return table.diamond(x1, x2, f1_(x1) + f2_(x2));
  }

 private:
  static void check_invariants(DecouplingReport& r, const DecouplingOptions& opt) {
    const double slack = kSampledTol;
    auto le = [&](ExtReal a, ExtReal b, const char* what) {
      if (a.is_neg_inf() || b.is_pos_inf()) return;
      if (a.is_pos_inf() || b.is_neg_inf() || a.value() > b.value() + slack)
        r.violations.push_back(what);
    };
    if (opt.lambda) le(r.lambda.value, r.lambda_circ.value, "lambda <= lambda_circ");
    le(r.lambda_circ.value, r.inf_sum, "lambda_circ <= inf_sum");
    if (opt.dag) le(r.lambda_circ.value, r.lambda_dag.value, "lambda_circ <= lambda_dag");
    if (opt.theta) {
      le(0.0, r.theta_dag.value, "0 <= theta_dag");
      if (opt.dag) le(r.theta_dag.value, r.theta_circ.value, "theta_dag <= theta_circ");
      if (!(r.inf_sum.is_pos_inf() && r.lambda_circ.value.is_pos_inf()) &&
          !(r.inf_sum.is_neg_inf() && r.lambda_circ.value.is_neg_inf()))
        le(r.inf_sum - r.lambda_circ.value, r.theta_circ.value, "inf_sum - lambda_circ <= theta_circ");
      if (opt.dag && r.lambda_dag.value < ExtReal::pos_inf() &&
          !(r.inf_sum.is_neg_inf() && r.lambda_dag.value.is_neg_inf()))
        le(r.inf_sum - r.lambda_dag.value, r.theta_dag.value, "inf_sum - lambda_dag <= theta_dag");
    }
    if (r.violations.empty()) {
      r.invariants = Verdict::holds();
    } else {
      std::ostringstream os;
      for (const auto& v : r.violations) os << v << "; ";
      r.invariants = Verdict::fails({}, os.str());
    }
  }

  FnOracle f1_, f2_;
  Region u_;
  SampleScheme s_;
  Companion companion_;
};

inline DecouplingReport full_report(const FnOracle& f1, const FnOracle& f2, const Region& u,
                                    const SampleScheme& s) {
  return Decoupler(f1, f2, u, s).run();
}

inline Quantity lambda(const FnOracle& f1, const FnOracle& f2, const Region& u, const SampleScheme& s) {
  return Decoupler(f1, f2, u, s).run({true, true, false, false}).lambda;
}
inline Quantity lambda_circ(const FnOracle& f1, const FnOracle& f2, const Region& u,
                            const SampleScheme& s) {
  return Decoupler(f1, f2, u, s).run({false, true, false, false}).lambda_circ;
}
inline Quantity lambda_dag(const FnOracle& f1, const FnOracle& f2, const Region& u,
                           const SampleScheme& s) {
  return Decoupler(f1, f2, u, s).run({false, true, true, false}).lambda_dag;
}
inline Quantity theta_circ(const FnOracle& f1, const FnOracle& f2, const Region& u,
                           const SampleScheme& s) {
  return Decoupler(f1, f2, u, s).run({false, true, false, true}).theta_circ;
}
inline Quantity theta_dag(const FnOracle& f1, const FnOracle& f2, const Region& u,
                          const SampleScheme& s) {
  return Decoupler(f1, f2, u, s).run({false, true, true, true}).theta_dag;
}
inline ExtReal diamond(const FnOracle& f1, const FnOracle& f2, const Region& u, const Point& x1,
                       const Point& x2, const SampleScheme& s) {
  return Decoupler(f1, f2, u, s).diamond(x1, x2);
}

}  // namespace decouple
