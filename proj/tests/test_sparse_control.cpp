#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "decouple/semicontinuity.hpp"
#include "decouple/sparse_control.hpp"

#include <random>

using namespace decouple;
using namespace decouple::sparse;

namespace {

SparseProblem scalar(double z) {
  return {CellSpace::uniform(1), make_point({z}), 1.0, 0.0, make_point({-1.0}), make_point({1.0}), {}};
}

SparseProblem random_problem(int m, std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd w(m);
  Point z(m), xa(m), xb(m);
  for (int i = 0; i < m; ++i) {
    w[i] = 0.05 + u(g);
    z[i] = 6 * u(g) - 3;
    xa[i] = -0.5 - 2 * u(g);
    xb[i] = 0.5 + 2 * u(g);
  }
  return {CellSpace(w), z, 0.5 + u(g), u(g), xa, xb, {}};
}

/// Minimum over all support patterns; each pattern keeps its cells at the clamped minimizer.
double enumerate_optimum(const SparseProblem& p) {
  const int m = p.space.size();
  double best = kInf;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    Point x = Point::Zero(m);
    for (int i = 0; i < m; ++i)
      if (mask >> i & 1u) x[i] = std::clamp(p.sigma * p.z[i] / (p.sigma + p.sigma0), p.xa[i], p.xb[i]);
    best = std::min(best, p.objective(x));
  }
  return best;
}

}  // namespace

TEST_CASE("support measure") {
  auto sp = CellSpace::uniform(4);
  CHECK(support_measure(sp, Point::Zero(4)) == 0.0);
  CHECK(support_measure(sp, make_point({1.0, 0.0, -2.0, 0.0})) == 0.5);
  CHECK(support_measure(sp, make_point({1e-13, -1e-14, 0.0, 5e-13})) == 0.0);
  CHECK_THROWS_AS(support_measure(sp, Point::Zero(3)), Error);
}

TEST_CASE("cell space norm") {
  CellSpace sp(make_point({0.25, 0.5, 0.25}));
  for (int i = 0; i < 3; ++i) {
    Point e = Point::Zero(3);
    e[i] = 1.0;
    CHECK(sp.norm(e) == doctest::Approx(std::sqrt(sp.weights[i])));
  }
  CHECK_THROWS_AS(CellSpace(make_point({1.0, 0.0})), Error);
}

TEST_CASE("box projection") {
  const Point lo = make_point({-1.0, -1.0}), hi = make_point({1.0, 1.0});
  CHECK(project_box(make_point({2.0, -3.0}), lo, hi) == make_point({1.0, -1.0}));
  CHECK(project_box(make_point({0.5, -0.2}), lo, hi) == make_point({0.5, -0.2}));
  try {
    project_box(make_point({0.0, 0.0}), make_point({0.5, -1.0}), hi);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidBounds);
  }
}

TEST_CASE("box projection is the nearest point") {
  std::mt19937_64 g(23);
  std::uniform_real_distribution<double> u(-3.0, 3.0), v(0.0, 1.0);
  const int m = 6;
  CellSpace sp(make_point({0.1, 0.3, 0.2, 0.15, 0.05, 0.2}));
  const Point lo = Point::Constant(m, -1.0), hi = make_point({1.0, 2.0, 0.5, 1.0, 1.5, 0.25});
  for (int t = 0; t < 50; ++t) {
    Point x(m);
    for (int i = 0; i < m; ++i) x[i] = u(g);
    const Point px = project_box(x, lo, hi);
    CHECK((project_box(px, lo, hi) - px).cwiseAbs().maxCoeff() == 0.0);
    CHECK(support_measure(sp, px) <= support_measure(sp, x));
    for (int k = 0; k < 200; ++k) {
      Point y(m);
      for (int i = 0; i < m; ++i) y[i] = lo[i] + (hi[i] - lo[i]) * v(g);
      CHECK(sp.norm(x - px) <= sp.norm(x - y) + 1e-10);
      CHECK(sp.inner(x - px, y - px) <= 1e-10);
    }
  }
}

TEST_CASE("projection is nonexpansive") {
  std::mt19937_64 g(29);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  CellSpace sp = CellSpace::uniform(5);
  const Point lo = Point::Constant(5, -1.0), hi = Point::Constant(5, 1.0);
  for (int t = 0; t < 500; ++t) {
    Point a(5), b(5);
    for (int i = 0; i < 5; ++i) {
      a[i] = u(g);
      b[i] = u(g);
    }
    CHECK(sp.norm(project_box(a, lo, hi) - project_box(b, lo, hi)) <= sp.norm(a - b) + 1e-12);
    CHECK(norm(project_box(a, lo, hi) - project_box(b, lo, hi)) <= norm(a - b));
  }
}

TEST_CASE("slowly decreasing profiles") {
  CHECK(slowly_decreasing([](double t) { return std::pow(t, 4); }).verdict.is_holds());
  CHECK(slowly_decreasing([](double t) { return t; }).verdict.is_fails());
  auto r = slowly_decreasing(CellSpace::uniform(3), make_point({0.5, 0.0, -0.01}));
  CHECK(r.verdict.is_holds());
  CHECK(r.ratios.back() == 0.0);
}

TEST_CASE("sparse subdifferential pattern") {
  auto sp = CellSpace::uniform(2);
  CHECK(sparse_subdiff_check(sp, make_point({1.0, 0.0}), make_point({0.0, 3.0})).is_holds());
  auto bad = sparse_subdiff_check(sp, make_point({1.0, 0.0}), make_point({1.0, 0.0}));
  REQUIRE(bad.is_fails());
  CHECK(bad.witness[0] == make_point({1.0, 0.0}));
  CHECK(sparse_subdiff_check(sp, make_point({0.4, -2.0}), Point::Zero(2)).is_holds());
}

TEST_CASE("scalar solver") {
  CHECK(solve_sparse_oc(scalar(3.0))[0] == 1.0);
  CHECK(solve_sparse_oc(scalar(1.2))[0] == 0.0);
  CHECK(scalar(3.0).objective(make_point({1.0})) == doctest::Approx(3.0));
  CHECK(scalar(1.2).objective(make_point({0.0})) == doctest::Approx(0.72));
  SparseProblem p{CellSpace::uniform(5), Point::Zero(5), 1.0, 0.5, Point::Constant(5, -1.0), Point::Constant(5, 1.0), {}};
  CHECK(solve_sparse_oc(p) == Point::Zero(5));
}

TEST_CASE("solver matches enumeration of support patterns") {
  std::mt19937_64 g(31);
  for (int t = 0; t < 40; ++t) {
    auto p = random_problem(1 + t % 12, g);
    auto x = solve_sparse_oc(p);
    CHECK(p.objective(x) == doctest::Approx(enumerate_optimum(p)).epsilon(1e-10));
    CHECK(sharp_stationarity_check(p, x).is_holds());
    auto [s1, s2] = stationary_multipliers(p, x);
    CHECK(approx_stationarity_check(p, x, x, s1, s2, 1e-6, x).is_holds());
  }
}

TEST_CASE("problem validation") {
  auto p = scalar(1.0);
  p.xa = make_point({0.0});
  try {
    solve_sparse_oc(p);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidBounds);
  }
  std::mt19937_64 g(1);
  auto q = random_problem(3, g);
  q.coupling = Eigen::MatrixXd::Identity(3, 3);
  try {
    solve_sparse_oc(q);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonSeparableObjective);
  }
  q.coupling = Eigen::MatrixXd::Zero(3, 3);
  CHECK_NOTHROW(solve_sparse_oc(q));
}

TEST_CASE("approximate stationarity") {
  SparseProblem p{CellSpace::uniform(3), make_point({0.5, -2.0, 0.5}), 1.0, 0.0, Point::Constant(3, -1.0),
                  Point::Constant(3, 1.0), {}};
  const Point zero = Point::Zero(3);
  CHECK(approx_stationarity_check(p, zero, zero, -p.gradient(zero), zero, 1e-6).is_holds());
  Point x = make_point({0.0, 0.0, 1.0});
  Point s1 = make_point({-p.gradient(x)[0], -p.gradient(x)[1], 0.0});
  Point s2 = make_point({0.0, 0.0, -p.gradient(x)[2]});
  CHECK(s2[2] < -0.1);
  auto v = approx_stationarity_check(p, x, x, s1, s2, 0.1);
  REQUIRE(v.is_fails());
  CHECK(v.note.find("negative box multiplier") != std::string::npos);
  try {
    approx_stationarity_check(p, x, make_point({0.0, 0.0, 1.5}), s1, s2, 0.1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotInBox);
  }
}

TEST_CASE("sharp stationarity") {
  std::mt19937_64 g(37);
  auto p = random_problem(6, g);
  CHECK(sharp_stationarity_check(p, Point::Zero(6)).is_holds());
  Point x = Point::Zero(6);
  for (int i = 0; i < 6; i += 2) x[i] = std::clamp(p.z[i] / (1 + p.sigma0 / p.sigma), p.xa[i] * 0.99, p.xb[i] * 0.99);
  p.z = x + p.sigma0 / p.sigma * x;
  CHECK(sharp_stationarity_check(p, x).is_holds());
  Point y = x;
  y[0] = p.xb[0] * 0.5;
  p.z[0] = (p.sigma * y[0] + p.sigma0 * y[0] - 1.0) / p.sigma;
  auto v = sharp_stationarity_check(p, y);
  REQUIRE(v.is_fails());
  CHECK(v.note.find("cell 0") != std::string::npos);
  CHECK_THROWS_AS(sharp_stationarity_check(p, Point::Constant(6, 10.0)), Error);
}

TEST_CASE("approximate witnesses converge to a sharp stationary point") {
  std::mt19937_64 g(43);
  auto p = random_problem(6, g);
  const Point xbar = solve_sparse_oc(p);
  auto [s1, s2] = stationary_multipliers(p, xbar);
  int moved = 0;
  for (int i = 0; i < 6; ++i) moved += xbar[i] != 0.0 && p.xa[i] < xbar[i] && xbar[i] < p.xb[i];
  CHECK(moved > 0);
  for (int k = 1; k <= 64; k *= 2) {
    Point x2 = xbar;
    for (int i = 0; i < 6; ++i)
      if (xbar[i] != 0.0 && p.xa[i] < xbar[i] && xbar[i] < p.xb[i])
        x2[i] = std::min(xbar[i] + 0.1 / (k * k), p.xb[i]);
    CHECK(approx_stationarity_check(p, xbar, x2, s1, s2, 1.0 / k, xbar).is_holds());
  }
  CHECK(sharp_stationarity_check(p, xbar).is_holds());
}

TEST_CASE("support measure is firmly uniformly lsc relative to the box") {
  const int m = 3;
  auto sp = CellSpace::uniform(m);
  FnOracle f;
  f.dim = m;
  f.eval = [sp](const Point& x) { return ExtReal(support_measure(sp, x)); };
  const Point lo = Point::Constant(m, -1.0), hi = Point::Constant(m, 1.0);
  SetOracle box;
  box.dim = m;
  box.contains = [lo, hi](const Point& x) { return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all(); };
  box.dist = [lo, hi](const Point& x) { return dist(x, project_box(x, lo, hi)); };
  box.project = [lo, hi](const Point& x) -> Point { return project_box(x, lo, hi); };
  SampleScheme s;
  s.levels = 6;
  for (const Point& xbar : {make_point({0.0, 0.0, 0.0}), make_point({1.0, -0.5, 0.0})}) {
    auto c = certify_relative(f, box, Region::closed_ball(xbar, 0.25), LscProperty::FirmUniform, s);
    CHECK(c.verdict.is_holds());
  }
}
