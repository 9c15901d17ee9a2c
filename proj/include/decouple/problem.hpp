#pragma once

#include "decouple/expr.hpp"
#include "decouple/sampling.hpp"
#include "decouple/subdifferential.hpp"

#include <fstream>

namespace decouple {

/// Problem description read from a sectioned text file:
///
///   [function]  dim = n, then `name = expression` definitions
///   [set]       name = box([lo], [hi]) | halfspace([a], b) | levelset(g) | epigraph(g)
///   [region]    name = ball([c], r) | cball([c], r) | box([lo], [hi]) | space([lo], [hi])
///                    | set(NAME, [lo], [hi]) | [point]
///   [scheme]    mode, seed, levels, eta0, stages, tol, divergence
class Problem {
 public:
  struct Entry {
    std::string key;
    expr::NodePtr value;
    int line = 0;
  };

  int dim = 1;
  SampleScheme scheme;
  std::vector<Entry> functions, sets, regions, scheme_entries;

  bool has_function(const std::string& n) const { return find(functions, n) != nullptr; }
  bool has_set(const std::string& n) const { return find(sets, n) != nullptr; }
  bool has_region(const std::string& n) const { return find(regions, n) != nullptr; }

  FnOracle function(const std::string& name) const {
    const Entry* e = require(functions, name, "function");
    expr::NodePtr body = e->value;
    FnOracle f;
    f.dim = dim;
    f.eval = [body](const Point& x) { return ExtReal(expr::eval(*body, x)); };
    f.subgrad = [fn = f.eval, d = dim](const Point& x) {
      const double h = 1e-7;
      Point g(d);
      for (int k = 0; k < d; ++k) {
        Point a = x, b = x;
        a[k] += h;
        b[k] -= h;
        ExtReal fa = fn(a), fb = fn(b);
        if (!fa.is_finite() || !fb.is_finite()) return DualSet::empty(d);
        g[k] = (fa.value() - fb.value()) / (2 * h);
      }
      return DualSet::point(g);
    };
    return f;
  }

  SetOracle set(const std::string& name) const {
    const Entry* e = require(sets, name, "set");
    const auto& n = *e->value;
    if (n.op != expr::Op::Call) fail(n, "set must be box(...), halfspace(...), levelset(...) or epigraph(...)");
    if (n.name == "box") {
      auto lo = vec(n, 0, 2), hi = vec(n, 1, 2);
      SetOracle s;
      s.dim = dim;
      s.contains = [lo, hi](const Point& x) { return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all(); };
      s.dist = [lo, hi](const Point& x) { return decouple::dist(x, x.cwiseMax(lo).cwiseMin(hi)); };
      s.project = [lo, hi](const Point& x) -> Point { return x.cwiseMax(lo).cwiseMin(hi); };
      s.normal_cone = [lo, hi, c = s.contains](const Point& x) {
        return c(x) ? box_normal_cone(x, lo, hi) : DualSet::empty(static_cast<int>(x.size()));
      };
      return s;
    }
    if (n.name == "halfspace") {
      auto a = vec(n, 0, 2);
      double b = scalar(n, 1, 2);
      double an = a.cwiseAbs().sum();
      if (an == 0) fail(n, "halfspace normal must be nonzero");
      Point sg = a.unaryExpr([](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
      SetOracle s;
      s.dim = dim;
      s.contains = [a, b](const Point& x) { return a.dot(x) <= b; };
      s.dist = [a, b, an](const Point& x) { return std::max(0.0, a.dot(x) - b) / an; };
      s.project = [a, b, an, sg](const Point& x) -> Point {
        double t = std::max(0.0, a.dot(x) - b) / an;
        return x - t * sg;
      };
      s.normal_cone = [a, b](const Point& x) {
        double v = a.dot(x);
        if (v > b) return DualSet::empty(static_cast<int>(x.size()));
        if (v < b) return DualSet::point(Point::Zero(x.size()));
        return DualSet::cone(Point::Zero(x.size()), {a});
      };
      return s;
    }
    if (n.name == "levelset" || n.name == "epigraph") {
      if (n.args.size() != 1) fail(n, n.name + " takes one expression");
      const bool epi = n.name == "epigraph";
      expr::validate_scalar(n.args[0], epi ? dim - 1 : dim);
      expr::NodePtr g = n.args[0];
      std::function<double(const Point&)> level = [g, epi, d = dim](const Point& x) {
        return epi ? expr::eval(*g, x.head(d - 1)) - x[d - 1] : expr::eval(*g, x);
      };
      return numeric_set(level);
    }
    fail(n, "unknown set kind '" + n.name + "'");
  }

  Region region(const std::string& name) const {
    const Entry* e = require(regions, name, "region");
    const auto& n = *e->value;
    if (n.op != expr::Op::Call) fail(n, "region must be ball, cball, box, space or set");
    if (n.name == "ball" || n.name == "cball") {
      auto c = vec(n, 0, 2);
      double r = scalar(n, 1, 2);
      if (!(r > 0)) fail(n, "radius must be positive");
      return n.name == "ball" ? Region::open_ball(c, r) : Region::closed_ball(c, r);
    }
    if (n.name == "box") return Region::box(vec(n, 0, 2), vec(n, 1, 2));
    if (n.name == "space") return Region::whole({vec(n, 0, 2), vec(n, 1, 2)});
    if (n.name == "set") {
      if (n.args.size() != 3 || n.args[0]->op != expr::Op::Ref) fail(n, "set(NAME, [lo], [hi])");
      auto s = std::make_shared<SetOracle>(set(n.args[0]->name));
      auto comp_dist = [s](const Point& x) {
        if (!s->contains(x)) return 0.0;
        return numeric_dist([s](const Point& p) { return !s->contains(p); }, x);
      };
      return Region::from_set(s, {vec(n, 1, 3), vec(n, 2, 3)}, comp_dist);
    }
    fail(n, "unknown region kind '" + n.name + "'");
  }

  /// Point stored as a vector entry of the [region] section.
  std::optional<Point> point(const std::string& name) const {
    const Entry* e = find(regions, name);
    if (!e || e->value->op != expr::Op::Vec) return std::nullopt;
    return to_vec(*e->value);
  }

  std::string to_text() const {
    std::ostringstream os;
    os << "[function]\ndim = " << dim << "\n";
    for (const auto& e : functions) os << e.key << " = " << print_def(e.value) << "\n";
    auto section = [&](const char* title, const std::vector<Entry>& es) {
      if (es.empty()) return;
      os << "\n[" << title << "]\n";
      for (const auto& e : es) os << e.key << " = " << print_def(e.value) << "\n";
    };
    section("set", sets);
    section("region", regions);
    section("scheme", scheme_entries);
    return os.str();
  }

  /// Smallest r such that the closed r-cube around x meets the set {inside}, by bisection
  /// over cube samples; an upper estimate.
  static double numeric_dist(const std::function<bool(const Point&)>& inside, const Point& x,
                             Point* nearest = nullptr) {
    if (inside(x)) {
      if (nearest) *nearest = x;
      return 0.0;
    }
    const int d = static_cast<int>(x.size());
    auto probe = [&](double r, Point* hit) {
      Box cube{x.array() - r, x.array() + r};
      std::vector<Point> pts;
      if (d <= 3) {
        Region rg = Region::box(cube.lo, cube.hi);
        SampleScheme s;
        pts = samples(rg, 0, s);
      } else {
        pts = halton_points(cube, 512, 0);
      }
      double best = kInf;
      for (auto& p : pts)
        if (inside(p) && decouple::dist(p, x) < best) {
          best = decouple::dist(p, x);
          if (hit) *hit = p;
        }
      return best;
    };
    double hi = 1e-3;
    Point hit;
    double found = kInf;
    while ((found = probe(hi, &hit)) == kInf) {
      hi *= 2;
      if (hi > 1e6) return kInf;
    }
    double lo = 0.0;
    hi = found;
    for (int it = 0; it < 40; ++it) {
      double mid = (lo + hi) / 2;
      Point h2;
      double f = probe(mid, &h2);
      if (f < kInf) {
        hi = std::min(f, mid);
        hit = h2;
      } else {
        lo = mid;
      }
    }
    if (nearest) *nearest = hit;
    return hi;
  }

 private:
  friend Problem parse_problem(const std::string& text);

  static const Entry* find(const std::vector<Entry>& es, const std::string& name) {
    for (const auto& e : es)
      if (e.key == name) return &e;
    return nullptr;
  }
  static const Entry* require(const std::vector<Entry>& es, const std::string& name, const char* what) {
    const Entry* e = find(es, name);
    if (!e) throw Error(ErrorCode::UndefinedSymbol, std::string("no ") + what + " named '" + name + "'");
    return e;
  }
  [[noreturn]] static void fail(const expr::Node& n, const std::string& msg) {
    throw expr::ParseFailure(n.line, n.column, msg);
  }
  Point to_vec(const expr::Node& n) const {
    if (n.op != expr::Op::Vec) fail(n, "expected a vector [..]");
    Point p(static_cast<Eigen::Index>(n.args.size()));
    for (std::size_t i = 0; i < n.args.size(); ++i) {
      expr::validate_scalar(n.args[i], 0);
      p[static_cast<Eigen::Index>(i)] = expr::eval(*n.args[i], Point());
    }
    return p;
  }
  Point vec(const expr::Node& call, std::size_t i, std::size_t argc) const {
    if (call.args.size() != argc) fail(call, call.name + " takes " + std::to_string(argc) + " arguments");
    Point p = to_vec(*call.args[i]);
    if (p.size() != dim) fail(*call.args[i], "vector length must equal dim");
    return p;
  }
  double scalar(const expr::Node& call, std::size_t i, std::size_t argc) const {
    if (call.args.size() != argc) fail(call, call.name + " takes " + std::to_string(argc) + " arguments");
    expr::validate_scalar(call.args[i], 0);
    return expr::eval(*call.args[i], Point());
  }
  SetOracle numeric_set(std::function<double(const Point&)> level) const {
    SetOracle s;
    s.dim = dim;
    auto inside = [level](const Point& x) { return level(x) <= 0; };
    s.contains = inside;
    s.dist = [inside](const Point& x) { return numeric_dist(inside, x); };
    s.project = [inside](const Point& x) {
      Point p = x;
      numeric_dist(inside, x, &p);
      return p;
    };
    s.normal_cone = [level, d = dim](const Point& x) {
      double v = level(x);
      if (v > 0) return DualSet::empty(d);
      if (v < -1e-12) return DualSet::point(Point::Zero(d));
      Point g(d);
      const double h = 1e-7;
      for (int k = 0; k < d; ++k) {
        Point a = x, b = x;
        a[k] += h;
        b[k] -= h;
        g[k] = (level(a) - level(b)) / (2 * h);
      }
      return DualSet::cone(Point::Zero(d), {g});
    };
    return s;
  }
  static std::string print_def(const expr::NodePtr& n) {
    if (n->op == expr::Op::Ref && n->args.empty()) return n->name;
    return expr::print(*n);
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline Problem parse_problem(const std::string& text) {
  Problem p;
  std::map<std::string, expr::NodePtr> defs;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string l = raw.substr(0, raw.find('#'));
    if (detail::trim(l).empty()) continue;
    std::string t = detail::trim(l);
    if (t.front() == '[') {
      if (t.back() != ']') throw expr::ParseFailure(line, 1, "unterminated section header");
      section = t.substr(1, t.size() - 2);
      if (section != "function" && section != "set" && section != "region" && section != "scheme")
        throw expr::ParseFailure(line, 1, "unknown section '" + section + "'");
      continue;
    }
    auto eq = l.find('=');
    if (eq == std::string::npos || (eq + 1 < l.size() && l[eq + 1] == '='))
      throw expr::ParseFailure(line, 1, "expected 'name = value'");
    std::string key = detail::trim(l.substr(0, eq));
    if (key.empty() || !(std::isalpha(static_cast<unsigned char>(key[0])) || key[0] == '_'))
      throw expr::ParseFailure(line, 1, "invalid name '" + key + "'");
    const std::string rhs = l.substr(eq + 1);
    const int col = static_cast<int>(eq) + 2;
    if (section.empty()) throw expr::ParseFailure(line, 1, "entry outside of a section");
    if (section == "function" && key == "dim") {
      auto n = expr::parse(rhs, nullptr, line, col);
      expr::validate_scalar(n, 0);
      double d = expr::eval(*n, Point());
      if (!(d >= 1 && d <= 16 && d == std::floor(d))) throw expr::ParseFailure(line, col, "dim must be 1..16");
      p.dim = static_cast<int>(d);
      continue;
    }
    if (section == "function") {
      auto n = expr::parse(rhs, &defs, line, col);
      expr::validate_scalar(n, p.dim);
      defs[key] = n;
      p.functions.push_back({key, n, line});
    } else if (section == "set" || section == "region") {
      auto n = expr::parse(rhs, &defs, line, col);
      (section == "set" ? p.sets : p.regions).push_back({key, n, line});
    } else {
      auto n = expr::parse(rhs, &defs, line, col);
      auto& s = p.scheme;
      if (key == "mode") {
        if (n->op != expr::Op::Ref || (n->name != "grid" && n->name != "lowdiscrepancy"))
          throw expr::ParseFailure(line, col, "mode must be grid or lowdiscrepancy");
        s.mode = n->name == "grid" ? SampleMode::Grid : SampleMode::LowDiscrepancy;
      } else {
        expr::validate_scalar(n, 0);
        double v = expr::eval(*n, Point());
        if (key == "seed") s.seed = static_cast<std::uint64_t>(v);
        else if (key == "levels") s.levels = static_cast<int>(v);
        else if (key == "eta0") s.eta0 = v;
        else if (key == "stages") s.stages = static_cast<int>(v);
        else if (key == "tol") s.tol = v;
        else if (key == "divergence") s.divergence = v;
        else throw expr::ParseFailure(line, 1, "unknown scheme key '" + key + "'");
      }
      p.scheme_entries.push_back({key, n, line});
    }
  }
  for (const auto& e : p.sets) (void)p.set(e.key);
  for (const auto& e : p.regions)
    if (e.value->op != expr::Op::Vec) (void)p.region(e.key);
  return p;
}

inline Problem load_problem(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_problem(ss.str());
}

}  // namespace decouple
