#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "decouple/core.hpp"
#include "decouple/sampling.hpp"

using namespace decouple;

TEST_CASE("extended real addition table") {
  const ExtReal p = ExtReal::pos_inf(), n = ExtReal::neg_inf(), a = 2.5, b = -1.0;
  CHECK((p + a).is_pos_inf());
  CHECK((a + p).is_pos_inf());
  CHECK((p + p).is_pos_inf());
  CHECK((n + a).is_neg_inf());
  CHECK((n + n).is_neg_inf());
  CHECK((a + b).value() == 1.5);
  CHECK((p - n).is_pos_inf());
  CHECK_THROWS_AS(p + n, Error);
  CHECK_THROWS_AS(n + p, Error);
  CHECK_THROWS_AS(p - p, Error);
  try {
    (void)(p + n);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UndefinedSum);
  }
  CHECK_THROWS_AS(ExtReal(std::nan("")), Error);
}

TEST_CASE("extended real order and empty conventions") {
  CHECK(ExtReal::neg_inf() < ExtReal(-1e300));
  CHECK(ExtReal(1e300) < ExtReal::pos_inf());
  CHECK(ext_inf({}).is_pos_inf());
  CHECK(ext_sup_nonneg({}).value() == 0.0);
  CHECK(ext_inf({3.0, -2.0, ExtReal::pos_inf()}).value() == -2.0);
  CHECK(ext_sup_nonneg({1.0, 4.0}).value() == 4.0);
}

TEST_CASE("maximum norm and its dual") {
  Point x = make_point({1.0, -3.0, 2.0});
  CHECK(norm(x) == 3.0);
  CHECK(dual_norm(x) == 6.0);
  CHECK(dist(x, Point::Zero(3)) == 3.0);
}

TEST_CASE("regions") {
  auto ob = Region::open_ball(make_point({0.0, 0.0}), 1.0);
  auto cb = Region::closed_ball(make_point({0.0, 0.0}), 1.0);
  CHECK_FALSE(ob.contains(make_point({1.0, 0.0})));
  CHECK(cb.contains(make_point({1.0, 0.5})));
  CHECK(ob.dist_to(make_point({3.0, 0.0})) == 2.0);
  CHECK(ob.margin_of(make_point({0.5, 0.0})) == 0.5);
  auto bx = Region::box(make_point({0.0}), make_point({1.0}));
  CHECK(bx.contains(make_point({0.0})));
  CHECK(bx.dist_to(make_point({1.5})) == 0.5);
  CHECK(bx.margin_of(make_point({0.25})) == 0.25);
  auto ws = Region::whole({make_point({-1.0}), make_point({1.0})});
  CHECK(ws.contains(make_point({100.0})));
  CHECK(ws.margin_of(make_point({0.0})) == kInf);
  auto f = ob.fattened(0.5);
  CHECK(f.contains(make_point({1.4, 0.0})));
}

TEST_CASE("essentially interior family of a ball") {
  auto u = Region::open_ball(Point::Zero(2), 1.0);
  auto fam = ei_family_for(u, 3);
  REQUIRE(fam.members.size() == 3);
  const double radii[] = {0.5, 0.75, 0.875}, gaps[] = {0.5, 0.25, 0.125};
  for (int i = 0; i < 3; ++i) {
    CHECK(fam.members[i].radius == doctest::Approx(radii[i]));
    CHECK(fam.members[i].gap == doctest::Approx(gaps[i]));
  }
}

TEST_CASE("essentially interior family of a box") {
  auto u = Region::box(make_point({0.0}), make_point({1.0}));
  auto fam = ei_family_for(u, 2);
  REQUIRE(fam.members.size() == 2);
  CHECK(fam.members[0].region.lo[0] == doctest::Approx(0.25));
  CHECK(fam.members[0].region.hi[0] == doctest::Approx(0.75));
  CHECK(fam.members[0].gap == doctest::Approx(0.25));
  CHECK(fam.members[1].region.lo[0] == doctest::Approx(0.125));
  CHECK(fam.members[1].region.hi[0] == doctest::Approx(0.875));
  CHECK(fam.members[1].gap == doctest::Approx(0.125));
}

TEST_CASE("singleton region has empty interior") {
  CHECK_THROWS_AS(ei_family_for(Region::box(make_point({0.3}), make_point({0.3})), 2), Error);
  try {
    ei_family_for(Region::box(make_point({0.3}), make_point({0.3})), 2);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyInterior);
  }
}

TEST_CASE("fattened members stay inside the parent") {
  SampleScheme s;
  for (const auto& u : {Region::open_ball(Point::Zero(2), 1.0), Region::closed_ball(make_point({0.5, -1.0}), 0.3),
                        Region::box(make_point({0.0, 0.0}), make_point({2.0, 1.0}))}) {
    auto fam = ei_family_for(u, 5);
    for (const auto& m : fam.members) {
      auto pts = samples(m.region, 2, s);
      REQUIRE_FALSE(pts.empty());
      for (const auto& p : pts) CHECK(u.margin_of(p) >= m.gap - 1e-12);
    }
  }
}

TEST_CASE("members of a closed ball lie in a smaller open ball") {
  SampleScheme s;
  auto u = Region::closed_ball(Point::Zero(2), 1.0);
  for (const auto& m : ei_family_for(u, 4).members) {
    double worst = 0.0;
    for (const auto& p : samples(m.region, 2, s)) worst = std::max(worst, norm(p));
    CHECK(worst < 1.0);
  }
}

TEST_CASE("dual sets") {
  auto c = DualSet::cone(make_point({-1.0, 0.0}), {make_point({0.5, -1.0})});
  auto s = c.shifted(make_point({1.0, 1.0}));
  CHECK(s.pieces[0].vertices[0].isApprox(make_point({0.0, 1.0})));
  Eigen::MatrixXd m(1, 2);
  m << 2.0, 1.0;
  auto im = c.mapped(m);
  CHECK(im.dim == 1);
  CHECK(im.pieces[0].vertices[0][0] == -2.0);
  CHECK(im.pieces[0].rays[0][0] == 0.0);
  CHECK(DualSet::empty(2).is_empty());
}

TEST_CASE("oracle dimension is enforced") {
  FnOracle f;
  f.dim = 2;
  f.eval = [](const Point&) { return ExtReal(0.0); };
  CHECK_THROWS_AS(f(make_point({1.0})), Error);
  FnOracle g = f;
  g.dim = 1;
  CHECK_THROWS_AS(sum(f, g), Error);
}
