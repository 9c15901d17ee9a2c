#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "decouple/examples.hpp"
#include "decouple/subdifferential.hpp"

#include <random>

using namespace decouple;

namespace {

FnOracle abs_fn(double sign = 1.0) {
  return examples::make_fn(1, [sign](const Point& p) -> ExtReal { return sign * std::abs(p[0]); },
                           [](const Point& p) {
                             if (p[0] > 0) return DualSet::point(make_point({1.0}));
                             if (p[0] < 0) return DualSet::point(make_point({-1.0}));
                             return DualSet{1, {{{make_point({-1.0}), make_point({1.0})}, {}}}};
                           });
}

std::vector<Point> generators(const DualSet& d) {
  std::vector<Point> out;
  for (const auto& p : d.pieces) {
    for (const auto& v : p.vertices) out.push_back(v);
    for (const auto& r : p.rays) out.push_back(r);
  }
  return out;
}

bool contains_only(const DualSet& d, const std::vector<Point>& gens) {
  auto g = generators(d);
  if (g.size() != gens.size()) return false;
  for (const auto& want : gens)
    if (std::find(g.begin(), g.end(), want) == g.end()) return false;
  return true;
}

}  // namespace

TEST_CASE("absolute value at its kink") {
  auto t = is_subgradient(abs_fn(), make_point({0.0}), make_point({0.5}));
  CHECK(t.verdict.is_holds());
  CHECK(t.quotients.size() == 7);
  CHECK(is_subgradient(abs_fn(), make_point({0.0}), make_point({1.0})).verdict.is_holds());
  CHECK(is_subgradient(abs_fn(), make_point({0.0}), make_point({1.5})).verdict.is_fails());
}

TEST_CASE("concave kink has no subgradients") {
  auto t = is_subgradient(abs_fn(-1.0), make_point({0.0}), make_point({0.0}));
  REQUIRE(t.verdict.is_fails());
  REQUIRE(t.verdict.witness.size() == 1);
  CHECK(std::abs(t.verdict.witness[0][0]) > 0.0);
}

TEST_CASE("subgradient of the tilted parabola") {
  auto f = examples::parabola_tilt();
  const double t = 0.25, a = 2.0;
  CHECK(is_subgradient(f, make_point({t, t * t}), make_point({2 * a * t - 1, -a})).verdict.is_holds());
  CHECK(is_subgradient(f, make_point({t, t * t}), make_point({2 * a * t - 1 + 1.0, -a})).verdict.is_fails());
}

TEST_CASE("infinite base value") {
  try {
    is_subgradient(examples::left_indicator(), make_point({1.0}), make_point({0.0}));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InfiniteAtBase);
  }
}

TEST_CASE("box normal cones") {
  const Point lo = make_point({-1.0}), hi = make_point({1.0});
  CHECK(contains_only(box_normal_cone(make_point({0.0}), lo, hi), {make_point({0.0})}));
  CHECK(contains_only(box_normal_cone(make_point({1.0}), lo, hi), {make_point({0.0}), make_point({1.0})}));
  CHECK(contains_only(box_normal_cone(make_point({-1.0}), lo, hi), {make_point({0.0}), make_point({-1.0})}));
  const Point lo2 = make_point({-1.0, -1.0}), hi2 = make_point({1.0, 1.0});
  CHECK(contains_only(box_normal_cone(make_point({1.0, -1.0}), lo2, hi2),
                      {make_point({0.0, 0.0}), make_point({1.0, 0.0}), make_point({0.0, -1.0})}));
  auto flat = box_normal_cone(make_point({0.5}), make_point({0.5}), make_point({0.5}));
  CHECK(generators(flat).size() == 3);
}

TEST_CASE("point outside the box") {
  try {
    box_normal_cone(make_point({2.0}), make_point({-1.0}), make_point({1.0}));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotInBox);
  }
}

TEST_CASE("box normal cone generators satisfy the normal inequality") {
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Point lo = make_point({-1.0, -1.0, -1.0}), hi = make_point({1.0, 1.0, 1.0});
  std::vector<Point> pts;
  for (int i = 0; i < 1000; ++i) pts.push_back(make_point({u(g), u(g), u(g)}));
  for (const Point& x : {make_point({1.0, -1.0, 0.0}), make_point({1.0, 1.0, 1.0}), make_point({0.2, -1.0, 0.3})}) {
    for (const auto& v : generators(box_normal_cone(x, lo, hi))) {
      double worst = -kInf;
      for (const auto& y : pts) worst = std::max(worst, v.dot(y - x) / norm(y - x));
      CHECK(worst <= 1e-12);
    }
  }
}

TEST_CASE("distance to a sum of cones") {
  auto o1 = examples::parabola_epigraph(), o2 = examples::lower_half_plane();
  const Point xs = make_point({1.0, 0.0});
  auto at0 = dist_to_sum(xs, o1.normal_cone(Point::Zero(2)), o2.normal_cone(Point::Zero(2)));
  CHECK(at0.residual == doctest::Approx(1.0));
  CHECK(dist_to_sum(Point::Zero(2), o1.normal_cone(Point::Zero(2)), o2.normal_cone(Point::Zero(2))).residual == 0.0);
  auto at_t = dist_to_sum(xs, o1.normal_cone(make_point({0.25, 0.0625})), o2.normal_cone(make_point({0.25, 0.0})));
  CHECK(at_t.residual <= 1e-12);
  REQUIRE(at_t.parts.size() == 2);
  CHECK((at_t.parts[0] + at_t.parts[1] - xs).cwiseAbs().sum() <= 1e-12);
}

TEST_CASE("distance to a sum of finite sets") {
  auto d1 = DualSet::finite({make_point({1.0}), make_point({-1.0})});
  auto d2 = DualSet::finite({make_point({0.25})});
  CHECK(dist_to_sum(make_point({1.0}), d1, d2).residual == doctest::Approx(0.25));
  CHECK(dist_to_sum(make_point({-0.75}), d1, d2).residual == doctest::Approx(0.0));
}

TEST_CASE("empty dual set in a sum") {
  try {
    dist_to_sum(make_point({0.0}), DualSet::empty(1), DualSet::point(make_point({0.0})));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptySet);
  }
}

TEST_CASE("coderivative of smooth maps") {
  SmoothMap curve;
  curve.in_dim = 1;
  curve.out_dim = 2;
  curve.eval = [](const Point& x) { return make_point({x[0], x[0] * x[0]}); };
  CHECK(coderivative_smooth(curve, make_point({0.5}), make_point({1.0, 1.0}))[0] == doctest::Approx(2.0).epsilon(1e-6));

  Eigen::MatrixXd a(2, 3);
  a << 1, 2, 3, -1, 0, 4;
  SmoothMap lin;
  lin.in_dim = 3;
  lin.out_dim = 2;
  lin.eval = [a](const Point& x) -> Point { return a * x; };
  lin.jacobian = [a](const Point&) -> Eigen::MatrixXd { return a; };
  const Point ys = make_point({0.5, -2.0});
  CHECK(coderivative_smooth(lin, Point::Zero(3), ys).isApprox(a.transpose() * ys));

  SmoothMap id;
  id.in_dim = id.out_dim = 2;
  id.eval = [](const Point& x) { return x; };
  CHECK((coderivative_smooth(id, make_point({3.0, 1.0}), ys) - ys).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("coderivative agrees with a finite-difference Jacobian") {
  SmoothMap f;
  f.in_dim = 2;
  f.out_dim = 2;
  f.eval = [](const Point& x) { return make_point({std::sin(x[0]) * x[1], std::exp(x[0] - x[1])}); };
  f.jacobian = [](const Point& x) -> Eigen::MatrixXd {
    Eigen::MatrixXd j(2, 2);
    j << std::cos(x[0]) * x[1], std::sin(x[0]), std::exp(x[0] - x[1]), -std::exp(x[0] - x[1]);
    return j;
  };
  SmoothMap numeric = f;
  numeric.jacobian = nullptr;
  for (const Point& x : {make_point({0.3, 0.7}), make_point({-1.0, 2.0})}) {
    const Point ys = make_point({1.0, -0.5});
    Point a = coderivative_smooth(f, x, ys), b = coderivative_smooth(numeric, x, ys);
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-6 * std::max(1.0, a.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("missing Jacobian") {
  SmoothMap none;
  none.in_dim = none.out_dim = 1;
  SmoothMap root;
  root.in_dim = root.out_dim = 1;
  root.eval = [](const Point& x) { return make_point({std::sqrt(x[0])}); };
  for (const auto* m : {&none, &root}) {
    try {
      coderivative_smooth(*m, make_point({0.0}), make_point({1.0}));
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::JacobianUnavailable);
    }
  }
}

TEST_CASE("convex subgradients pass the Frechet test") {
  auto f = abs_fn();
  for (double x : {-0.7, 0.0, 0.4}) {
    auto d = f.subgrad(make_point({x}));
    for (const auto& v : generators(d)) CHECK(is_subgradient(f, make_point({x}), v).verdict.is_holds());
  }
}

TEST_CASE("differentiable sum rule") {
  auto f = abs_fn();
  auto g = examples::make_fn(1, [](const Point& p) -> ExtReal { return p[0] * p[0] + 3 * p[0]; });
  auto h = sum(g, f);
  for (double x : {0.0, 0.5}) {
    for (double v : {-1.0, 0.3, 1.0}) {
      if (!is_subgradient(f, make_point({x}), make_point({v})).verdict.is_holds()) continue;
      CHECK(is_subgradient(h, make_point({x}), make_point({2 * x + 3 + v})).verdict.is_holds());
    }
  }
}

TEST_CASE("Fermat rule at minimizers") {
  CHECK_FALSE(is_subgradient(abs_fn(), make_point({0.0}), make_point({0.0})).verdict.is_fails());
  auto sq = examples::make_fn(2, [](const Point& p) -> ExtReal { return p.squaredNorm(); });
  CHECK_FALSE(is_subgradient(sq, Point::Zero(2), Point::Zero(2)).verdict.is_fails());
  auto f = sum(examples::parabola_tilt(), examples::lower_half_indicator());
  CHECK_FALSE(is_subgradient(f, Point::Zero(2), Point::Zero(2)).verdict.is_fails());
}
