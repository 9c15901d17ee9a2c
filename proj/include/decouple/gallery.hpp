#pragma once

#include "decouple/examples.hpp"
#include "decouple/report.hpp"
#include "decouple/sparse_control.hpp"

#include <future>
#include <iomanip>
#include <random>
#include <regex>

namespace decouple::gallery {

inline constexpr double kSampledTol = decouple::kSampledTol;
inline constexpr double kExactTol = 1e-9;

struct Check {
  std::string name;
  std::string expected;
  report::json actual;
  std::string claim;  // the published statement this value reproduces
  bool pass = false;
};

struct GalleryCase {
  std::string id;
  std::string title;
  double tol = kSampledTol;
  std::function<std::vector<Check>(const SampleScheme&, double tol)> run;
};

struct CaseResult {
  std::string id, title;
  std::vector<Check> checks;
  std::string error;  // exception text when the case aborted
  bool pass() const {
    if (!error.empty()) return false;
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

inline Check near(std::string name, const ExtReal& v, double want, double tol, std::string claim) {
  bool ok = v.is_finite() ? std::abs(v.value() - want) <= tol : v.value() == want;
  return {std::move(name), fmt(want) + " +- " + fmt(tol), report::num(v), std::move(claim), ok};
}

inline Check at_least(std::string name, double v, double bound, std::string claim) {
  return {std::move(name), ">= " + fmt(bound), report::num(v), std::move(claim), v >= bound};
}

inline Check status(std::string name, const Verdict& v, VerdictStatus want, std::string claim) {
  return {std::move(name), to_string(want), to_string(v.status), std::move(claim), v.status == want};
}

inline Check flag(std::string name, bool ok, std::string claim) {
  return {std::move(name), "true", ok, std::move(claim), ok};
}

inline Point pt(double a, double b) { return make_point({a, b}); }

inline SetOracle box_set(const Point& lo, const Point& hi) {
  SetOracle s;
  s.dim = static_cast<int>(lo.size());
  s.contains = [lo, hi](const Point& x) { return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all(); };
  s.dist = [lo, hi](const Point& x) { return dist(x, sparse::project_box(x, lo, hi)); };
  s.project = [lo, hi](const Point& x) -> Point { return sparse::project_box(x, lo, hi); };
  s.normal_cone = [lo, hi](const Point& x) { return box_normal_cone(x, lo, hi); };
  return s;
}

inline std::vector<Check> e31(const SampleScheme& s, double tol) {
  auto r = full_report(examples::parabola_tilt(), examples::lower_half_indicator(),
                       Region::open_ball(Point::Zero(2), 0.5), s);
  const std::string claim = "all decoupling quantities vanish for the tilted parabola and the lower half-plane";
  return {near("lambda", r.lambda.value, 0, tol, claim),
          near("lambda_circ", r.lambda_circ.value, 0, tol, claim),
          near("lambda_dag", r.lambda_dag.value, 0, tol, claim),
          near("theta_circ", r.theta_circ.value, 0, tol, claim),
          near("theta_dag", r.theta_dag.value, 0, tol, claim),
          near("inf_sum", r.inf_sum, 0, tol, claim),
          flag("invariants", r.violations.empty(), "ordering chain between the quantities")};
}

inline std::vector<Check> e32(const SampleScheme& s, double tol) {
  auto f1 = examples::unit_step(), f2 = examples::zero(1);
  Region u = Region::box(make_point({0.0}), make_point({1.0}));
  auto r = full_report(f1, f2, u, s);
  std::vector<Check> out{near("lambda", r.lambda.value, 0, tol, "decoupled infimum is 0"),
                         near("lambda_circ", r.lambda_circ.value, 0, tol, "decoupled infimum is 0"),
                         near("lambda_dag", r.lambda_dag.value, 1, tol, "interior decoupled infimum is 1"),
                         near("theta_circ", r.theta_circ.value, 0, tol, "uniform gap is 0"),
                         near("theta_dag", r.theta_dag.value, 0, tol, "interior gap is 0")};
  double worst = 0.0;
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    double a = k % 10 == 0 ? 0.0 : uni(rng), b = uni(rng);
    double want = a == 0.0 ? b : std::abs(b - a) / 2;
    double got = diamond(f1, f2, u, make_point({a}), make_point({b}), s).value();
    worst = std::max(worst, std::abs(got - want));
  }
  out.push_back({"diamond_closed_form", "max error <= 0.001", report::num(worst),
                 "diamond is x2 - x1 at x1 = 0 and |x2 - x1| / 2 otherwise", worst <= 1e-3});
  return out;
}

inline std::vector<Check> e33(const SampleScheme& s, double tol) {
  auto r = full_report(examples::blowup_left(1), examples::blowup_right(1),
                       Region::open_ball(make_point({0.0}), 1.0), s);
  return {near("lambda_circ", r.lambda_circ.value, -kInf, 0, "coupled infimum diverges to -inf"),
          near("lambda_dag", r.lambda_dag.value, 0, tol, "interior decoupled infimum is 0"),
          near("theta_circ", r.theta_circ.value, kInf, 0, "uniform gap diverges to +inf"),
          near("theta_dag", r.theta_dag.value, 0, tol, "interior gap is 0")};
}

inline std::vector<Check> e34(const SampleScheme& s, double tol) {
  auto f1 = examples::reciprocal_wedge(false), f2 = examples::reciprocal_wedge(true);
  auto r = full_report(f1, f2, Region::open_ball(Point::Zero(2), 1.0), s);
  auto c = certify_near(f1, f2, Point::Zero(2), LscProperty::FirmQuasiuniform, s);
  const auto& w = c.verdict.witness;
  bool shape = w.size() == 2 && w[0][1] == w[1][1] && w[0][0] == -w[1][0] && w[0][0] != 0;
  return {at_least("theta_dag", r.theta_dag.value.value(), 1.0 - tol, "interior gap is at least the radius"),
          status("firm_quasiuniform", c.verdict, VerdictStatus::Fails, "not firmly quasiuniformly lsc near 0"),
          flag("witness_mirrored", shape, "violating pairs are (t, r) and (-t, r)")};
}

inline std::vector<Check> e35(const SampleScheme& s, double) {
  bool thrown = false;
  try {
    Decoupler(examples::left_indicator(), examples::right_reciprocal(),
              Region::open_ball(make_point({0.0}), 1.0), s)
        .check_common_domain();
  } catch (const Error& e) {
    thrown = e.code() == ErrorCode::PreconditionFailed;
  }
  return {flag("precondition_failed", thrown, "domains have no common point, so the finiteness condition fails")};
}

inline std::vector<Check> e51(const SampleScheme& s, double) {
  const int m = 8;
  auto sp = sparse::CellSpace::uniform(m);
  FnOracle f;
  f.dim = m;
  f.eval = [sp](const Point& x) { return ExtReal(sparse::support_measure(sp, x)); };
  Point lo = Point::Constant(m, -1.0), hi = Point::Constant(m, 1.0);
  auto omega = box_set(lo, hi);
  Point xbar = Point::Zero(m);
  xbar[0] = 0.5;
  xbar[1] = 1.0;
  xbar[2] = -1.0;
  auto c = certify_relative(f, omega, Region::closed_ball(xbar, 0.25), LscProperty::FirmUniform, s);
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  bool monotone = true;
  for (int k = 0; k < 200; ++k) {
    Point x(m);
    for (int i = 0; i < m; ++i) x[i] = k % 3 == 0 && i % 2 ? 0.0 : uni(rng);
    monotone = monotone && sparse::support_measure(sp, sparse::project_box(x, lo, hi)) <= sparse::support_measure(sp, x);
  }
  return {status("firm_uniform_relative", c.verdict, VerdictStatus::Holds,
                 "support measure is firmly uniformly lsc relative to the box"),
          flag("projection_monotone", monotone, "projection onto the box does not increase the support measure")};
}

inline std::vector<Check> e52(const SampleScheme& s, double) {
  auto u = examples::parabola_region(1.0);
  auto f = examples::step_above_axis();
  auto omega = examples::lower_half_plane();
  auto uni = certify_relative(f, omega, u, LscProperty::Uniform, s);
  auto fq = certify_relative(f, omega, u, LscProperty::FirmQuasiuniform, s);
  return {status("uniform_relative", uni.verdict, VerdictStatus::Fails, "not uniformly lsc relative to the half-plane"),
          status("firm_quasiuniform_relative", fq.verdict, VerdictStatus::Holds,
                 "firmly quasiuniformly lsc relative to the half-plane")};
}

inline std::vector<Check> e53(const SampleScheme& s, double) {
  auto o1 = examples::parabola_epigraph(), o2 = examples::lower_half_plane();
  auto st = subtransversality_modulus(o1, o2, Point::Zero(2), 0.5, s);
  auto pr = certify_pair_of_sets(o1, o2, Region::closed_ball(Point::Zero(2), 0.5), false, s);
  return {status("subtransversality", st.verdict, VerdictStatus::Fails, "the sets are not subtransversal at 0"),
          status("firm_uniform_pair", pr.verdict, VerdictStatus::Holds,
                 "the pair of indicators is firmly uniformly lsc")};
}

inline std::vector<Check> e6(const SampleScheme& s, double tol) {
  auto f1 = examples::parabola_tilt(), f2 = examples::lower_half_indicator();
  const Point o = Point::Zero(2);
  std::vector<Check> out;
  auto w = multiplier_search(f1, f2, o, 0.25, 0.25, 0.25, s, kExactTol);
  bool shape = w && w->x1[1] == w->x1[0] * w->x1[0] && w->x2[1] == 0.0 && w->x1[0] > 0;
  out.push_back({"multiplier_residual", "0", w ? report::num(w->residual) : report::json("none"),
                 "0 = (2 a x1 - 1, -a) + (0, a) with a = 1 / (2 x1)", w && w->residual <= kExactTol});
  out.push_back(flag("multiplier_points", shape, "x1 on the parabola, x2 on the axis"));
  if (w && w->x1[0] > 0) {
    double a = 1.0 / (2 * w->x1[0]);
    out.push_back(flag("multiplier_duals",
                       std::abs(w->v1[1] + a) <= kExactTol * a && std::abs(w->v2[1] - a) <= kExactTol * a,
                       "dual elements (2 a x1 - 1, -a) and (0, a)"));
  }
  auto sg = is_subgradient(f1, pt(0.25, 0.0625), pt(0.0, -2.0));
  out.push_back(status("subgradient_on_parabola", sg.verdict, VerdictStatus::Holds,
                       "(2 a t - 1, -a) is a subgradient at (t, t^2)"));
  auto cm = classify_min(f1, f2, o, 0.01, 0.5, s);
  out.push_back(status("quasiuniform_min", cm.verdict, VerdictStatus::Holds, "0 is a quasiuniform minimum"));
  auto cs = classify_stationary(f1, f2, o, s);
  out.push_back(status("quasiuniform_stationary", cs.verdict, VerdictStatus::Holds, "0 is quasiuniform stationary"));
  (void)tol;
  return out;
}

inline std::vector<Check> e7(const SampleScheme& s, double) {
  auto o1 = examples::parabola_epigraph(), o2 = examples::lower_half_plane();
  const Point o = Point::Zero(2), xs = pt(1.0, 0.0);
  double at0 = dist_to_sum(xs, o1.normal_cone(o), o2.normal_cone(o)).residual;
  double at_t = dist_to_sum(xs, o1.normal_cone(pt(0.25, 0.0625)), o2.normal_cone(pt(0.25, 0.0))).residual;
  auto w = intersection_rule_verify(o1, o2, o, xs, 0.25, s);
  return {near("cone_sum_gap_at_0", at0, 1.0, kExactTol, "(1, 0) is not in the sum of the normal cones at 0"),
          near("cone_sum_gap_at_t", at_t, 0.0, kExactTol, "(1, 0) = (2 a t, -a) + (0, a)"),
          {"intersection_residual", "0", w ? report::num(w->residual) : report::json("none"),
           "the fuzzy intersection rule holds", w && w->residual <= kExactTol}};
}

}  // namespace detail

inline const std::vector<GalleryCase>& cases() {
  static const std::vector<GalleryCase> all{
      {"E3.1", "tilted parabola and lower half-plane on the half ball", kSampledTol, detail::e31},
      {"E3.2", "unit step and zero on [0, 1]", kSampledTol, detail::e32},
      {"E3.3", "opposite blow-ups on (-1, 1)", kSampledTol, detail::e33},
      {"E3.4", "mirrored reciprocal wedges on the unit ball", kSampledTol, detail::e34},
      {"E3.5", "disjoint domains", kExactTol, detail::e35},
      {"E5.1", "support measure relative to a box, 8 cells", kSampledTol, detail::e51},
      {"E5.2", "step above the axis relative to the lower half-plane", kSampledTol, detail::e52},
      {"E5.3", "parabola epigraph and lower half-plane", kSampledTol, detail::e53},
      {"E6", "multipliers for the tilted parabola", kSampledTol, detail::e6},
      {"E7", "normal cones of the parabola epigraph and the half-plane", kExactTol, detail::e7},
  };
  return all;
}

inline const GalleryCase& find_case(const std::string& id) {
  for (const auto& c : cases())
    if (c.id == id) return c;
  throw Error(ErrorCode::UnknownCase, id);
}

inline CaseResult run_case(const GalleryCase& c, const SampleScheme& s, std::optional<double> tol = {}) {
  CaseResult r{c.id, c.title, {}, {}};
  try {
    r.checks = c.run(s, tol.value_or(c.tol));
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

/// Runs every case whose id matches the regular expression; an empty filter selects all.
/// Cases run concurrently and results come back in gallery order.
inline std::vector<CaseResult> run_gallery(const std::string& filter, const SampleScheme& s,
                                           std::optional<double> tol = {}) {
  std::regex re(filter.empty() ? ".*" : filter);
  std::vector<std::future<CaseResult>> jobs;
  for (const auto& c : cases())
    if (std::regex_search(c.id, re))
      jobs.push_back(std::async(std::launch::async, [&c, s, tol] { return run_case(c, s, tol); }));
  std::vector<CaseResult> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

inline report::json to_json(const std::vector<CaseResult>& rs, const SampleScheme& s) {
  report::json cs = report::json::array();
  int passed = 0;
  for (const auto& r : rs) {
    report::json checks = report::json::array();
    for (const auto& c : r.checks)
      checks.push_back({{"name", c.name}, {"expected", c.expected}, {"actual", c.actual},
                        {"claim", c.claim}, {"pass", c.pass}});
    report::json j{{"id", r.id}, {"title", r.title}, {"pass", r.pass()}, {"checks", checks}};
    if (!r.error.empty()) j["error"] = r.error;
    cs.push_back(j);
    passed += r.pass();
  }
  return {{"seed", s.seed},
          {"cases", cs},
          {"summary", {{"total", rs.size()}, {"passed", passed}, {"failed", static_cast<int>(rs.size()) - passed}}}};
}

inline void print_table(std::ostream& os, const std::vector<CaseResult>& rs) {
  os << std::left << std::setw(6) << "case" << std::setw(30) << "check" << std::setw(24) << "expected"
     << std::setw(24) << "actual" << "result\n";
  for (const auto& r : rs) {
    if (!r.error.empty()) os << std::setw(6) << r.id << "error: " << r.error << "\n";
    for (const auto& c : r.checks)
      os << std::setw(6) << r.id << std::setw(30) << c.name << std::setw(24) << c.expected << std::setw(24)
         << c.actual.dump() << (c.pass ? "pass" : "FAIL") << "\n";
  }
  int passed = 0;
  for (const auto& r : rs) passed += r.pass();
  os << passed << "/" << rs.size() << " cases passed\n";
}

}  // namespace decouple::gallery
