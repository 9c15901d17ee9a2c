#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "decouple/examples.hpp"
#include "decouple/semicontinuity.hpp"

using namespace decouple;

namespace {

SampleScheme scheme(int levels = 8) {
  SampleScheme s;
  s.levels = levels;
  return s;
}

FnOracle abs_fn() {
  return examples::make_fn(1, [](const Point& p) -> ExtReal { return std::abs(p[0]); });
}

SetOracle line_y0() {
  SetOracle s;
  s.dim = 2;
  s.contains = [](const Point& x) { return x[1] == 0.0; };
  s.dist = [](const Point& x) { return std::abs(x[1]); };
  s.project = [](const Point& x) -> Point { return make_point({x[0], 0.0}); };
  return s;
}

SetOracle diagonal() {
  SetOracle s;
  s.dim = 2;
  s.contains = [](const Point& x) { return x[0] == x[1]; };
  s.dist = [](const Point& x) { return std::abs(x[0] - x[1]) / 2; };
  s.project = [](const Point& x) -> Point {
    double m = (x[0] + x[1]) / 2;
    return make_point({m, m});
  };
  return s;
}

// {y = 0, x <= -0.5} together with the half-plane x + y >= 1; no projection oracle.
SetOracle bent_pair_partner() {
  SetOracle s;
  s.dim = 2;
  s.contains = [](const Point& x) { return (x[1] == 0.0 && x[0] <= -0.5) || x[0] + x[1] >= 1.0; };
  s.dist = [](const Point& x) {
    double ray = std::max(std::abs(x[1]), std::max(0.0, x[0] + 0.5));
    double half = std::max(0.0, 1.0 - x[0] - x[1]) / 2;
    return std::min(ray, half);
  };
  return s;
}

std::map<LscProperty, VerdictStatus> all_four(const FnOracle& f1, const FnOracle& f2, const Region& u,
                                             const SampleScheme& s) {
  std::map<LscProperty, VerdictStatus> v;
  for (auto p : {LscProperty::Uniform, LscProperty::Quasiuniform, LscProperty::FirmUniform,
                 LscProperty::FirmQuasiuniform})
    v[p] = certify(f1, f2, u, p, s).verdict.status;
  return v;
}

}  // namespace

TEST_CASE("step function is firmly quasiuniformly lsc") {
  auto c = certify(examples::unit_step(), examples::zero(1), Region::box(make_point({0.0}), make_point({1.0})),
                   LscProperty::FirmQuasiuniform, scheme());
  CHECK(c.verdict.is_holds());
  CHECK(c.per_eps.size() == default_eps_grid().size());
  for (const auto& e : c.per_eps) CHECK(e.eta.has_value());
}

TEST_CASE("opposite blow-ups are not uniformly lsc") {
  auto s = scheme();
  auto f1 = examples::blowup_left(1), f2 = examples::blowup_right(1);
  auto c = certify(f1, f2, Region::open_ball(make_point({0.0}), 1.0), LscProperty::Uniform, s);
  REQUIRE(c.verdict.is_fails());
  REQUIRE(c.verdict.witness.size() == 2);
  const auto& w = c.verdict.witness;
  CHECK(std::max(w[0][0], w[1][0]) > 0.9);
}

TEST_CASE("failure witnesses re-verify") {
  auto s = scheme();
  auto f1 = examples::blowup_left(1), f2 = examples::blowup_right(1);
  auto u = Region::open_ball(make_point({0.0}), 1.0);
  auto c = certify(f1, f2, u, LscProperty::Uniform, s);
  REQUIRE(c.verdict.is_fails());
  for (const auto& e : c.per_eps) {
    if (e.status != VerdictStatus::Fails) continue;
    REQUIRE(e.witness.size() == 2);
    const double target = (f1(e.witness[0]) + f2(e.witness[1])).value() + e.eps;
    for (const auto& x : samples(u, s.levels - 1, s)) CHECK_FALSE((f1(x) + f2(x)).value() < target);
  }
}

TEST_CASE("mirrored reciprocal wedges fail the firm quasiuniform property") {
  auto c = certify(examples::reciprocal_wedge(false), examples::reciprocal_wedge(true),
                   Region::open_ball(Point::Zero(2), 1.0), LscProperty::FirmQuasiuniform, scheme(6));
  CHECK(c.verdict.is_fails());
}

TEST_CASE("absolute value with zero is firmly uniformly lsc near 0") {
  auto c = certify_near(abs_fn(), examples::zero(1), make_point({0.0}), LscProperty::FirmUniform, scheme());
  CHECK(c.verdict.is_holds());
  CHECK(c.radii.size() == 2);
}

TEST_CASE("tilted parabola and half-plane hold all four properties near 0") {
  auto s = scheme(10);
  for (auto p : {LscProperty::Uniform, LscProperty::Quasiuniform, LscProperty::FirmUniform,
                 LscProperty::FirmQuasiuniform}) {
    CAPTURE(to_string(p));
    CHECK(certify_near(examples::parabola_tilt(), examples::lower_half_indicator(), Point::Zero(2), p, s)
              .verdict.is_holds());
  }
}

TEST_CASE("sufficient conditions") {
  auto s = scheme();
  auto u = Region::box(make_point({0.0}), make_point({1.0}));
  auto r = sufficient_conditions(examples::unit_step(), examples::zero(1), u, s);
  CHECK(r.f2_constant_on_dom_f1.is_holds());
  CHECK(r.f2_uniformly_continuous.is_holds());
  CHECK(r.singleton_dom_f2.is_fails());
  CHECK(r.bounded_coupled_sums.is_holds());

  auto r2 = sufficient_conditions(examples::zero(1), abs_fn(), u, s);
  CHECK(r2.f2_constant_on_dom_f1.is_fails());
  CHECK(r2.f2_uniformly_continuous.is_holds());

  auto r3 = sufficient_conditions(examples::reciprocal_wedge(false), examples::reciprocal_wedge(true),
                                  Region::open_ball(Point::Zero(2), 1.0), scheme(10));
  CHECK(r3.bounded_inner_coupled_sums.is_fails());
  CHECK(r3.f2_uniformly_continuous.is_fails());
}

TEST_CASE("implication diagram on synthetic verdicts") {
  using P = LscProperty;
  using V = VerdictStatus;
  CHECK(implication_violations({{P::FirmUniform, V::Holds}, {P::Quasiuniform, V::Fails}}).size() == 1);
  CHECK(implication_violations({{P::Uniform, V::Holds}, {P::Quasiuniform, V::Fails}}).size() == 1);
  CHECK(implication_violations({{P::FirmUniform, V::Holds}, {P::FirmQuasiuniform, V::Fails}, {P::Uniform, V::Fails},
                                {P::Quasiuniform, V::Fails}})
            .size() == 3);
  CHECK(implication_violations({{P::FirmUniform, V::Fails}, {P::Quasiuniform, V::Fails}}).empty());
  CHECK(implication_violations({{P::Uniform, V::Inconclusive}, {P::Quasiuniform, V::Fails}}).empty());
}

TEST_CASE("implication diagram on computed verdicts") {
  auto s = scheme();
  auto u1 = Region::box(make_point({0.0}), make_point({1.0}));
  auto u2 = Region::open_ball(make_point({0.0}), 1.0);
  CHECK(implication_violations(all_four(examples::unit_step(), examples::zero(1), u1, s)).empty());
  CHECK(implication_violations(all_four(examples::blowup_left(1), examples::blowup_right(1), u2, s)).empty());
  CHECK(implication_violations(all_four(abs_fn(), examples::unit_step(), u2, s)).empty());
}

TEST_CASE("firm properties survive Lipschitz perturbations") {
  auto s = scheme();
  auto u = Region::box(make_point({0.0}), make_point({1.0}));
  auto f1 = examples::unit_step(), f2 = examples::zero(1);
  for (auto p : {LscProperty::FirmUniform, LscProperty::FirmQuasiuniform}) {
    if (!certify(f1, f2, u, p, s).verdict.is_holds()) continue;
    for (double c : {0.1, 1.0}) CHECK_FALSE(certify(f1, with_norm_penalty(f2, c, make_point({0.0})), u, p, s).verdict.is_fails());
  }
}

TEST_CASE("zero function is lsc relative to any set") {
  auto s = scheme(6);
  auto f = examples::zero(2);
  auto u = Region::open_ball(Point::Zero(2), 0.5);
  for (auto p : {LscProperty::Uniform, LscProperty::Quasiuniform, LscProperty::FirmUniform,
                 LscProperty::FirmQuasiuniform}) {
    CAPTURE(to_string(p));
    CHECK(certify_relative(f, examples::lower_half_plane(), u, p, s).verdict.is_holds());
  }
}

TEST_CASE("relative lsc of the step above the axis") {
  auto s = scheme(6);
  auto u = examples::parabola_region(1.0);
  auto f = examples::step_above_axis();
  CHECK(certify_relative(f, examples::lower_half_plane(), u, LscProperty::Uniform, s).verdict.is_fails());
  CHECK(certify_relative(f, examples::lower_half_plane(), u, LscProperty::FirmQuasiuniform, s).verdict.is_holds());
}

TEST_CASE("pair of identical half-planes") {
  auto h = examples::lower_half_plane();
  auto r = certify_pair_of_sets(h, h, Region::closed_ball(Point::Zero(2), 0.5), false, scheme(6));
  CHECK(r.verdict.is_holds());
  CHECK(r.value == 0.0);
}

TEST_CASE("parabola epigraph and half-plane pair") {
  auto r = certify_pair_of_sets(examples::parabola_epigraph(), examples::lower_half_plane(),
                                Region::closed_ball(Point::Zero(2), 0.5), false, scheme(6));
  CHECK(r.verdict.is_holds());
}

TEST_CASE("sets meeting only outside the region fail") {
  auto r = certify_pair_of_sets(line_y0(), bent_pair_partner(), Region::open_ball(Point::Zero(2), 1.0), false,
                                scheme(6));
  REQUIRE(r.verdict.is_fails());
  REQUIRE(r.verdict.witness.size() == 1);
  const Point& w = r.verdict.witness[0];
  CHECK(w[1] == 0.0);
  CHECK(w[0] > 0.9);
  CHECK(r.value > 1.0);
}

TEST_CASE("crossing lines have a finite subtransversality modulus") {
  auto s = scheme(6);
  auto r = subtransversality_modulus(line_y0(), diagonal(), Point::Zero(2), 0.5, s);
  CHECK(r.verdict.is_holds());
  double brute = 0.0;
  const int n = 400;
  for (int i = -n; i <= n; ++i)
    for (int k = -n; k <= n; ++k) {
      double a = 0.5 * i / n, b = 0.5 * k / n;
      double den = std::max(std::abs(b), std::abs(a - b) / 2);
      if (den < 1e-9) continue;
      brute = std::max(brute, std::max(std::abs(a), std::abs(b)) / den);
    }
  CHECK(brute == doctest::Approx(3.0).epsilon(1e-3));
  CHECK(r.alpha <= brute + 1e-9);
  CHECK(r.alpha >= 2.5);
}

TEST_CASE("identical sets have modulus one") {
  auto r = subtransversality_modulus(diagonal(), diagonal(), Point::Zero(2), 0.5, scheme(6));
  CHECK(r.verdict.is_holds());
  CHECK(r.alpha == doctest::Approx(1.0));
}

TEST_CASE("parabola epigraph and half-plane are not subtransversal") {
  auto r = subtransversality_modulus(examples::parabola_epigraph(), examples::lower_half_plane(), Point::Zero(2),
                                     0.5, scheme(10));
  CHECK(r.verdict.is_fails());
}

TEST_CASE("finite modulus implies the set-pair property") {
  auto s = scheme(6);
  auto st = subtransversality_modulus(line_y0(), diagonal(), Point::Zero(2), 0.5, s);
  REQUIRE(st.verdict.is_holds());
  CHECK(certify_pair_of_sets(line_y0(), diagonal(), Region::closed_ball(Point::Zero(2), 0.5), false, s).verdict.is_holds());
}

TEST_CASE("base point outside the intersection") {
  try {
    subtransversality_modulus(line_y0(), diagonal(), make_point({0.5, 0.0}), 0.5, scheme(4));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BasePointNotInIntersection);
  }
}
