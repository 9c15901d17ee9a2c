#include "decouple/gallery.hpp"
#include "decouple/problem.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace decouple;
using report::json;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::string json_path, csv_path;
};

int exit_code(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::Holds: return 0;
    case VerdictStatus::Fails: return 1;
    case VerdictStatus::Inconclusive: return 2;
  }
  return 2;
}

/// Worst status wins: any FAILS gives 1, else any INCONCLUSIVE gives 2.
int combine(std::initializer_list<VerdictStatus> ss) {
  int code = 0;
  for (auto s : ss) {
    int c = exit_code(s);
    if (c == 1) return 1;
    code = std::max(code, c);
  }
  return code;
}

void emit(const Globals& g, const json& doc, const report::Columns& trace = {}) {
  if (g.json_path == "-") {
    std::cout << doc.dump(2) << "\n";
  } else if (!g.json_path.empty()) {
    std::ofstream f(g.json_path);
    if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write " + g.json_path);
    f << doc.dump(2) << "\n";
  }
  if (!g.csv_path.empty() && !trace.empty()) {
    if (g.csv_path == "-") {
      report::write_csv(std::cout, trace);
    } else {
      std::ofstream f(g.csv_path);
      if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write " + g.csv_path);
      report::write_csv(f, trace);
    }
  }
}

void say(const Globals& g, const std::string& line) {
  if (g.json_path != "-" && g.csv_path != "-") std::cout << line << "\n";
}

struct ProblemArgs {
  std::string file;
  std::optional<int> levels;
  std::optional<double> eta0, divergence;

  void add(CLI::App* app, bool schedule = true) {
    app->add_option("--problem", file, "problem definition file")->required();
    if (schedule) {
      app->add_option("--levels", levels, "refinement levels");
      app->add_option("--eta0", eta0, "initial coupling radius");
      app->add_option("--diverge-threshold", divergence, "divergence threshold M");
    }
  }
  Problem load() const { return load_problem(file); }
  SampleScheme scheme(const Problem& p, const Globals& g) const {
    SampleScheme s = p.scheme;
    if (g.seed) s.seed = *g.seed;
    if (g.tol) s.tol = *g.tol;
    if (levels) s.levels = *levels;
    if (eta0) s.eta0 = *eta0;
    if (divergence) s.divergence = *divergence;
    if (s.levels < 2) throw Error(ErrorCode::InvalidArgument, "at least two levels are required");
    return s;
  }
};

/// A point given inline ("0.5, 1" or "[0.5, 1]") or by name from the [region] section.
Point parse_point(const Problem& p, const std::string& text, int dim) {
  if (auto named = p.point(text)) {
    if (named->size() != dim) throw Error(ErrorCode::DimensionMismatch, text);
    return *named;
  }
  std::string src = text;
  if (src.find('[') == std::string::npos) src = "[" + src + "]";
  auto n = expr::parse(src);
  if (n->op != expr::Op::Vec) throw Error(ErrorCode::SyntaxError, "expected a point: " + text);
  Point x(static_cast<Eigen::Index>(n->args.size()));
  for (std::size_t i = 0; i < n->args.size(); ++i) {
    expr::validate_scalar(n->args[i], 0);
    x[static_cast<Eigen::Index>(i)] = expr::eval(*n->args[i], Point());
  }
  if (x.size() != dim) throw Error(ErrorCode::DimensionMismatch, "point '" + text + "' has the wrong length");
  return x;
}

std::optional<LscProperty> property_from(const std::string& name) {
  for (auto p : {LscProperty::Uniform, LscProperty::Quasiuniform, LscProperty::FirmUniform,
                 LscProperty::FirmQuasiuniform})
    if (name == to_string(p)) return p;
  return std::nullopt;
}

Point point_from_json(const json& a, int m, const char* key);

sparse::SparseProblem sparse_from_json(const json& j) {
  auto vec = [&](const char* key, int m, std::optional<double> fill = {}) {
    Point v(m);
    if (!j.contains(key)) {
      if (!fill) throw Error(ErrorCode::InvalidArgument, std::string("missing field ") + key);
      v.setConstant(*fill);
      return v;
    }
    const auto& a = j.at(key);
    if (a.is_number()) {
      v.setConstant(a.get<double>());
      return v;
    }
    if (static_cast<int>(a.size()) != m) throw Error(ErrorCode::DimensionMismatch, key);
    for (int i = 0; i < m; ++i) {
      const auto& e = a[static_cast<std::size_t>(i)];
      v[i] = e.is_string() ? (e.get<std::string>() == "-inf" ? -kInf : kInf) : e.get<double>();
    }
    return v;
  };
  const int m = j.at("m").get<int>();
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "m must be positive");
  sparse::SparseProblem p{sparse::CellSpace(vec("weights", m, 1.0 / m)), vec("z", m), 1.0, 0.0, {}, {}};
  p.sigma = j.value("sigma", 1.0);
  p.sigma0 = j.value("sigma0", 0.0);
  p.xa = vec("xa", m, -kInf);
  p.xb = vec("xb", m, kInf);
  if (j.contains("coupling")) {
    const auto& c = j.at("coupling");
    if (!c.is_array() || static_cast<int>(c.size()) != m) throw Error(ErrorCode::DimensionMismatch, "coupling");
    p.coupling.resize(m, m);
    for (int r = 0; r < m; ++r) p.coupling.row(r) = point_from_json(c[static_cast<std::size_t>(r)], m, "coupling").transpose();
  }
  p.validate();
  return p;
}

json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot open " + path);
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SyntaxError, e.what());
  }
}

Point point_from_json(const json& a, int m, const char* key) {
  if (!a.is_array() || static_cast<int>(a.size()) != m) throw Error(ErrorCode::DimensionMismatch, key);
  Point v(m);
  for (int i = 0; i < m; ++i) v[i] = a[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decoupled minimization toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "sampling seed");
  app.add_option("--tol", g.tol, "convergence tolerance");
  app.add_option("--json,--report", g.json_path, "write the JSON report to FILE ('-' for stdout)");
  app.add_option("--csv,--trace", g.csv_path, "write numeric traces as CSV to FILE ('-' for stdout)");

  int code = 0;
  std::function<void()> action;

  // decouple
  auto* dec = app.add_subcommand("decouple", "decoupling quantities of a pair of functions on a region");
  ProblemArgs dec_p;
  std::string dec_f1 = "f1", dec_f2 = "f2", dec_u = "U";
  dec_p.add(dec);
  dec->add_option("--f1", dec_f1, "first function name");
  dec->add_option("--f2", dec_f2, "second function name");
  dec->add_option("--region", dec_u, "region name");
  dec->callback([&] {
    action = [&] {
      auto p = dec_p.load();
      auto s = dec_p.scheme(p, g);
      auto r = full_report(p.function(dec_f1), p.function(dec_f2), p.region(dec_u), s);
      emit(g, report::to_json(r), report::trace_columns(r));
      auto line = [](const char* n, const Quantity& q) {
        return std::string(n) + " = " + report::num(q.value).dump() + " (" + to_string(q.verdict.status) + ")";
      };
      say(g, line("lambda", r.lambda));
      say(g, line("lambda_circ", r.lambda_circ));
      say(g, line("lambda_dag", r.lambda_dag));
      say(g, line("theta_circ", r.theta_circ));
      say(g, line("theta_dag", r.theta_dag));
      say(g, "inf_sum = " + report::num(r.inf_sum).dump());
      for (const auto& v : r.violations) say(g, "violation: " + v);
      code = r.violations.empty() ? combine({r.lambda.verdict.status, r.lambda_circ.verdict.status,
                                             r.lambda_dag.verdict.status, r.theta_circ.verdict.status,
                                             r.theta_dag.verdict.status})
                                  : 1;
    };
  });

  // certify
  auto* cer = app.add_subcommand("certify", "lower semicontinuity certificate for a pair of functions");
  ProblemArgs cer_p;
  std::string cer_prop, cer_near, cer_f1 = "f1", cer_f2 = "f2", cer_u = "U";
  double cer_delta = 0.5;
  cer_p.add(cer);
  cer->add_option("--property", cer_prop, "uniform, quasiuniform, firm_uniform or firm_quasiuniform")->required();
  cer->add_option("--near", cer_near, "certify near this point instead of on the region");
  cer->add_option("--delta", cer_delta, "largest radius for --near");
  cer->add_option("--f1", cer_f1, "first function name");
  cer->add_option("--f2", cer_f2, "second function name");
  cer->add_option("--region", cer_u, "region name");
  cer->callback([&] {
    action = [&] {
      auto prop = property_from(cer_prop);
      if (!prop) throw Error(ErrorCode::InvalidArgument, "unknown property " + cer_prop);
      auto p = cer_p.load();
      auto s = cer_p.scheme(p, g);
      auto f1 = p.function(cer_f1), f2 = p.function(cer_f2);
      Verdict v;
      if (!cer_near.empty()) {
        auto c = certify_near(f1, f2, parse_point(p, cer_near, p.dim), *prop, s, cer_delta);
        emit(g, report::to_json(c));
        v = c.verdict;
      } else {
        auto c = certify(f1, f2, p.region(cer_u), *prop, s);
        emit(g, report::to_json(c));
        v = c.verdict;
      }
      say(g, cer_prop + ": " + to_string(v.status) + (v.note.empty() ? "" : " (" + v.note + ")"));
      code = exit_code(v.status);
    };
  });

  // subdiff
  auto* sub = app.add_subcommand("subdiff", "Frechet subgradient test");
  ProblemArgs sub_p;
  std::string sub_f = "f1", sub_x, sub_v;
  sub_p.add(sub, false);
  sub->add_option("--function", sub_f, "function name");
  sub->add_option("--point", sub_x, "base point")->required();
  sub->add_option("--xstar", sub_v, "candidate subgradient")->required();
  sub->callback([&] {
    action = [&] {
      auto p = sub_p.load();
      auto t = is_subgradient(p.function(sub_f), parse_point(p, sub_x, p.dim), parse_point(p, sub_v, p.dim));
      emit(g, report::to_json(t), {{"quotient", t.quotients}});
      say(g, std::string("subgradient: ") + to_string(t.verdict.status));
      code = exit_code(t.verdict.status);
    };
  });

  // ekeland
  auto* eke = app.add_subcommand("ekeland", "penalized decoupled search with Ekeland selection");
  ProblemArgs eke_p;
  std::string eke_x, eke_f1 = "f1", eke_f2 = "f2";
  double eke_eps = 0.1, eke_delta = 0.4, eke_eta = 0.05;
  eke_p.add(eke);
  eke->add_option("--xbar", eke_x, "base point")->required();
  eke->add_option("--eps", eke_eps, "epsilon");
  eke->add_option("--delta", eke_delta, "radius");
  eke->add_option("--eta", eke_eta, "coupling radius");
  eke->add_option("--f1", eke_f1, "first function name");
  eke->add_option("--f2", eke_f2, "second function name");
  eke->callback([&] {
    action = [&] {
      auto p = eke_p.load();
      auto s = eke_p.scheme(p, g);
      auto r = penalized_search(p.function(eke_f1), p.function(eke_f2), parse_point(p, eke_x, p.dim), eke_eps,
                                eke_delta, eke_eta, s);
      emit(g, report::to_json(r));
      say(g, "gamma = " + report::num(r.gamma).dump() + ", slope = " + report::num(r.slope).dump() +
                 " (bound " + report::num(r.slope_bound).dump() + ")");
      bool ok = r.closeness && r.coupling && r.value_ok;
      code = ok ? exit_code(r.slope_check.status) : 1;
    };
  });

  // multiplier, sumrule
  auto* mul = app.add_subcommand("multiplier", "approximate multiplier search");
  auto* sum = app.add_subcommand("sumrule", "fuzzy sum rule witness");
  ProblemArgs mul_p, sum_p;
  std::string mul_x, mul_f1 = "f1", mul_f2 = "f2";
  double mul_eps = 0.1, mul_delta = 0.1, mul_eta = 0.1;
  std::optional<double> mul_bound;
  mul_p.add(mul);
  mul->add_option("--xbar", mul_x, "base point")->required();
  mul->add_option("--eps", mul_eps, "epsilon");
  mul->add_option("--delta", mul_delta, "search radius");
  mul->add_option("--eta", mul_eta, "coupling radius");
  mul->add_option("--bound", mul_bound, "required residual bound (default eps)");
  mul->add_option("--f1", mul_f1, "first function name");
  mul->add_option("--f2", mul_f2, "second function name");
  std::string sum_x, sum_v, sum_f1 = "f1", sum_f2 = "f2";
  double sum_eps = 0.1;
  sum_p.add(sum);
  sum->add_option("--xbar", sum_x, "base point")->required();
  sum->add_option("--xstar", sum_v, "subgradient of the sum")->required();
  sum->add_option("--eps", sum_eps, "epsilon");
  sum->add_option("--f1", sum_f1, "first function name");
  sum->add_option("--f2", sum_f2, "second function name");
  auto witness_out = [&](const std::optional<FuzzyWitness>& w) {
    if (w) {
      emit(g, {{"found", true}, {"witness", report::to_json(*w)}});
      say(g, "witness residual = " + report::num(w->residual).dump());
      code = 0;
    } else {
      emit(g, {{"found", false}});
      say(g, "no witness at the sampled resolution");
      code = 1;
    }
  };
  mul->callback([&] {
    action = [&] {
      auto p = mul_p.load();
      auto s = mul_p.scheme(p, g);
      witness_out(multiplier_search(p.function(mul_f1), p.function(mul_f2), parse_point(p, mul_x, p.dim), mul_eps,
                                    mul_delta, mul_eta, s, mul_bound));
    };
  });
  sum->callback([&] {
    action = [&] {
      auto p = sum_p.load();
      auto s = sum_p.scheme(p, g);
      witness_out(sum_rule_verify(p.function(sum_f1), p.function(sum_f2), parse_point(p, sum_x, p.dim),
                                  parse_point(p, sum_v, p.dim), sum_eps, s));
    };
  });

  // intersect
  auto* its = app.add_subcommand("intersect", "fuzzy intersection rule witness");
  ProblemArgs its_p;
  std::string its_s1 = "A", its_s2 = "B", its_x, its_v;
  double its_eps = 0.25;
  its_p.add(its);
  its->add_option("--set1", its_s1, "first set name");
  its->add_option("--set2", its_s2, "second set name");
  its->add_option("--xbar", its_x, "base point")->required();
  its->add_option("--xstar", its_v, "normal to the intersection")->required();
  its->add_option("--eps", its_eps, "epsilon");
  its->callback([&] {
    action = [&] {
      auto p = its_p.load();
      auto s = its_p.scheme(p, g);
      witness_out(intersection_rule_verify(p.set(its_s1), p.set(its_s2), parse_point(p, its_x, p.dim),
                                           parse_point(p, its_v, p.dim), its_eps, s));
    };
  });

  // chain
  auto* chn = app.add_subcommand("chain", "fuzzy chain rule witness for f o F with smooth F");
  ProblemArgs chn_p;
  std::string chn_outer = "g", chn_x, chn_v;
  std::vector<std::string> chn_map;
  double chn_eps = 0.1;
  chn_p.add(chn);
  chn->add_option("--outer", chn_outer, "outer function name, a function of x1..xm");
  chn->add_option("--map", chn_map, "component function names of F")->required()->delimiter(',');
  chn->add_option("--xbar", chn_x, "base point")->required();
  chn->add_option("--xstar", chn_v, "subgradient of the composition")->required();
  chn->add_option("--eps", chn_eps, "epsilon");
  chn->callback([&] {
    action = [&] {
      auto p = chn_p.load();
      auto s = chn_p.scheme(p, g);
      const int m = static_cast<int>(chn_map.size());
      std::vector<FnOracle> comps;
      for (const auto& n : chn_map) comps.push_back(p.function(n));
      SmoothMap F;
      F.in_dim = p.dim;
      F.out_dim = m;
      F.eval = [comps, m](const Point& x) {
        Point y(m);
        for (int i = 0; i < m; ++i) y[i] = comps[static_cast<std::size_t>(i)](x).value();
        return y;
      };
      FnOracle outer = p.function(chn_outer);
      FnOracle f = outer;
      f.dim = m;
      Point pad = Point::Zero(std::max(p.dim - m, 0));
      auto lift = [pad, n = p.dim](const Point& y) {
        if (y.size() >= n) return Point(y.head(n));
        Point z(n);
        z << y, pad;
        return z;
      };
      f.eval = [outer, lift](const Point& y) { return outer(lift(y)); };
      f.subgrad = [outer, lift, m](const Point& y) {
        DualSet d = outer.subgrad(lift(y));
        for (auto& pc : d.pieces) {
          for (auto& v : pc.vertices) v = Point(v.head(m));
          for (auto& r : pc.rays) r = Point(r.head(m));
        }
        d.dim = m;
        return d;
      };
      if (m > p.dim) throw Error(ErrorCode::DimensionMismatch, "F may not have more components than dim");
      auto w = chain_rule_verify(f, F, parse_point(p, chn_x, p.dim), parse_point(p, chn_v, p.dim), chn_eps, s);
      if (w) {
        emit(g, {{"found", true}, {"witness", report::to_json(*w)}});
        say(g, "witness residual = " + report::num(w->residual).dump());
        code = 0;
      } else {
        emit(g, {{"found", false}});
        say(g, "no witness at the sampled resolution");
        code = 1;
      }
    };
  });

  // control
  auto* ctl = app.add_subcommand("control", "sparse control problems on cells");
  ctl->require_subcommand(1);
  auto* ctl_solve = ctl->add_subcommand("solve", "exact cellwise minimizer");
  auto* ctl_check = ctl->add_subcommand("check", "stationarity checks for a given control");
  std::string ctl_file;
  double ctl_eps = 1e-6;
  ctl_solve->add_option("--problem", ctl_file, "JSON instance")->required();
  ctl_check->add_option("--problem", ctl_file, "JSON instance with field x")->required();
  ctl_check->add_option("--eps", ctl_eps, "epsilon for the approximate system");
  auto control_run = [&](bool solve) {
    auto j = load_json(ctl_file);
    auto p = sparse_from_json(j);
    const int m = p.space.size();
    Point x = solve ? sparse::solve_sparse_oc(p) : point_from_json(j.at("x"), m, "x");
    auto [s1, s2] = sparse::stationary_multipliers(p, x);
    auto sharp = sparse::sharp_stationarity_check(p, x);
    auto approx = sparse::approx_stationarity_check(p, x, x, s1, s2, ctl_eps, x);
    json out{{"x", report::point(x)},
             {"objective", report::num(p.objective(x))},
             {"support_measure", report::num(sparse::support_measure(p.space, x))},
             {"multipliers", {report::point(s1), report::point(s2)}},
             {"sharp", report::to_json(sharp)},
             {"approximate", report::to_json(approx)}};
    emit(g, out);
    say(g, "objective = " + report::num(p.objective(x)).dump() + ", sharp " + to_string(sharp.status) +
               ", approximate " + to_string(approx.status));
    code = combine({sharp.status, approx.status});
  };
  ctl_solve->callback([&] { action = [&] { control_run(true); }; });
  ctl_check->callback([&] { action = [&] { control_run(false); }; });

  // gallery
  auto* gal = app.add_subcommand("gallery", "reproduce the worked examples");
  std::string gal_filter, gal_case;
  bool gal_list = false;
  gal->add_option("filter", gal_filter, "regular expression on case ids");
  gal->add_option("--case", gal_case, "run exactly one case by id");
  gal->add_flag("--list", gal_list, "list case ids");
  gal->callback([&] {
    action = [&] {
      if (gal_list) {
        for (const auto& c : gallery::cases()) std::cout << c.id << "  " << c.title << "\n";
        return;
      }
      SampleScheme s;
      if (g.seed) s.seed = *g.seed;
      std::vector<gallery::CaseResult> rs;
      if (!gal_case.empty()) rs.push_back(gallery::run_case(gallery::find_case(gal_case), s, g.tol));
      else rs = gallery::run_gallery(gal_filter, s, g.tol);
      emit(g, gallery::to_json(rs, s));
      if (g.json_path != "-") gallery::print_table(std::cout, rs);
      for (const auto& r : rs)
        if (!r.pass()) code = 1;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 3;
  }
  try {
    if (action) action();
  } catch (const std::regex_error& e) {
    std::cerr << "error: invalid filter: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return code;
}
