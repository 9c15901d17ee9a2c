#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "decouple/problem.hpp"

#include <random>

using namespace decouple;

namespace {

ErrorCode code_of(const std::string& text) {
  try {
    parse_problem(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

double raw(const Problem& p, const std::string& f, const Point& x) {
  try {
    return p.function(f)(x).value();
  } catch (const Error&) {
    return std::nan("");
  }
}

std::string random_expr(std::mt19937_64& g, int depth) {
  std::uniform_int_distribution<int> pick(0, depth > 0 ? 11 : 2);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  auto sub = [&] { return random_expr(g, depth - 1); };
  switch (pick(g)) {
    case 0: return std::to_string(u(g));
    case 1: return "x";
    case 2: return "y";
    case 3: return "(" + sub() + " + " + sub() + ")";
    case 4: return "(" + sub() + " - " + sub() + ")";
    case 5: return "(" + sub() + " * " + sub() + ")";
    case 6: return "abs(" + sub() + ")";
    case 7: return "min(" + sub() + ", " + sub() + ")";
    case 8: return "max(" + sub() + ", " + sub() + ", " + sub() + ")";
    case 9: return "(if " + sub() + " <= " + sub() + " then " + sub() + " else inf)";
    case 10: return "-" + sub();
    default: return "(" + sub() + " ^ 2)";
  }
}

}  // namespace

TEST_CASE("minimal problem") {
  auto p = parse_problem("[function]\nf1 = 0\n");
  CHECK(p.dim == 1);
  auto f = p.function("f1");
  for (double x : {-2.0, 0.0, 3.5}) CHECK(f(make_point({x})).value() == 0.0);
}

TEST_CASE("opposite blow-ups with guards and infinite literals") {
  auto p = load_problem(DECOUPLE_TEST_DATA "/e33.problem");
  auto f1 = p.function("f1"), f2 = p.function("f2");
  CHECK(f1(make_point({0.0})).value() == 1.0);
  CHECK(f2(make_point({0.0})).value() == -1.0);
  CHECK(f1(make_point({0.5})).value() == 2.0);
  CHECK(f1(make_point({1.0})).is_pos_inf());
  CHECK(f2(make_point({2.0})).is_pos_inf());
  auto u = p.region("U");
  CHECK(u.contains(make_point({0.9})));
  CHECK_FALSE(u.contains(make_point({1.0})));
}

TEST_CASE("step function file") {
  auto p = load_problem(DECOUPLE_TEST_DATA "/e32.problem");
  CHECK(p.scheme.levels == 10);
  auto f1 = p.function("f1");
  CHECK(f1(make_point({0.0})).value() == 0.0);
  CHECK(f1(make_point({1e-9})).value() == 1.0);
  CHECK(p.region("U").contains(make_point({1.0})));
}

TEST_CASE("syntax errors carry their position") {
  try {
    parse_problem("[function]\ndim = 1\nf1 = if x < then 1 else 0\n");
    FAIL("expected an error");
  } catch (const expr::ParseFailure& e) {
    CHECK(e.code() == ErrorCode::SyntaxError);
    CHECK(e.line() == 3);
    CHECK(e.column() == 13);
    CHECK(std::string(e.what()).find("line 3, column 13") != std::string::npos);
  }
  CHECK(code_of("[function]\nf1 = (x + 1\n") == ErrorCode::SyntaxError);
  CHECK(code_of("[function]\nf1 = if x then 1\n") == ErrorCode::SyntaxError);
  CHECK(code_of("[nonsense]\n") == ErrorCode::SyntaxError);
  CHECK(code_of("f1 = 0\n") == ErrorCode::SyntaxError);
  CHECK(code_of("[function]\ndim = 0\n") == ErrorCode::SyntaxError);
}

TEST_CASE("undefined symbols") {
  CHECK(code_of("[function]\nf1 = delta * x\n") == ErrorCode::UndefinedSymbol);
  CHECK(code_of("[function]\nf1 = tan(x)\n") == ErrorCode::UndefinedSymbol);
  CHECK_THROWS_AS(parse_problem("[function]\nf1 = x\n").function("f2"), Error);
  try {
    parse_problem("[function]\nf1 = x\n").function("f2");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UndefinedSymbol);
  }
}

TEST_CASE("coordinates beyond the dimension") {
  CHECK(code_of("[function]\ndim = 1\nf1 = y\n") == ErrorCode::DimensionMismatch);
  CHECK(code_of("[function]\ndim = 2\nf1 = x3\n") == ErrorCode::DimensionMismatch);
  CHECK_NOTHROW(parse_problem("[function]\ndim = 3\nf1 = x + y + z + x3\n"));
}

TEST_CASE("sets and regions") {
  auto p = parse_problem(
      "[function]\ndim = 2\nf1 = 0\n"
      "[set]\nA = halfspace([0, 1], 0)\nB = box([-1, -1], [1, 1])\nC = epigraph(x^2)\nL = levelset(x^2 + y^2 - 1)\n"
      "[region]\nU = ball([0, 0], 0.5)\nV = cball([0, 0], 0.5)\nW = box([0, 0], [1, 2])\nxbar = [0.25, 0]\n");
  CHECK(p.set("A").contains(make_point({3.0, 0.0})));
  CHECK_FALSE(p.set("A").contains(make_point({0.0, 0.1})));
  CHECK(p.set("B").project(make_point({2.0, -3.0})) == make_point({1.0, -1.0}));
  CHECK(p.set("C").contains(make_point({0.5, 0.25})));
  CHECK_FALSE(p.set("C").contains(make_point({0.5, 0.2})));
  CHECK(p.set("L").contains(make_point({0.5, 0.5})));
  CHECK_FALSE(p.region("U").contains(make_point({0.5, 0.0})));
  CHECK(p.region("V").contains(make_point({0.5, 0.0})));
  CHECK(p.region("W").contains(make_point({1.0, 2.0})));
  CHECK(*p.point("xbar") == make_point({0.25, 0.0}));
  CHECK_FALSE(p.point("U"));
}

TEST_CASE("round trip preserves every oracle") {
  auto p = parse_problem(
      "[function]\ndim = 2\nc = 0.1\n"
      "f1 = if y >= x^2 then -x else inf\n"
      "f2 = if y <= 0 and not (x > 1) then min(abs(x), c, -y) else max(exp(x), sqrt(abs(y)) / 3)\n"
      "[set]\nA = halfspace([1, -2], 0.5)\n"
      "[region]\nU = ball([0, 0], 0.5)\n"
      "[scheme]\nlevels = 7\nseed = 3\nmode = lowdiscrepancy\n");
  auto q = parse_problem(p.to_text());
  CHECK(q.dim == 2);
  CHECK(q.scheme.levels == 7);
  CHECK(q.scheme.seed == 3);
  CHECK(q.scheme.mode == SampleMode::LowDiscrepancy);
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 1000; ++k) {
    Point x = make_point({u(g), u(g)});
    for (const char* f : {"c", "f1", "f2"}) CHECK(same(raw(p, f, x), raw(q, f, x)));
    CHECK(p.set("A").contains(x) == q.set("A").contains(x));
    CHECK(p.region("U").contains(x) == q.region("U").contains(x));
  }
}

TEST_CASE("random expressions survive printing") {
  std::mt19937_64 g(13);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int t = 0; t < 100; ++t) {
    std::string text = "[function]\ndim = 2\nf = " + random_expr(g, 4) + "\n";
    auto p = parse_problem(text);
    auto q = parse_problem(p.to_text());
    for (int k = 0; k < 1000; ++k) {
      Point x = make_point({u(g), u(g)});
      CHECK(same(raw(p, "f", x), raw(q, "f", x)));
    }
  }
}
