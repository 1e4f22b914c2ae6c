#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "jaam/maps.hpp"

using namespace jaam;
using jaam::testing::vec;

namespace {

IteratedIntegrals scalar_step(double h, double dw) {
  return IteratedIntegrals::from_parts(h, vec({dw}), Matrix());
}

// Root of y - h (y - 3 y^3) - x = 0 by bisection; the map is increasing in
// y for h < 1, so the root is unique.
double cubic_implicit_root(double x, double h) {
  auto r = [&](double y) { return y - h * (y - 3 * y * y * y) - x; };
  double lo = -10, hi = 10;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (r(mid) > 0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_SUITE("maps") {

TEST_CASE("ids and labels") {
  CHECK(*parse_map_id("milstein") == MapKind::Milstein);
  CHECK(*parse_map_id("pmil") == MapKind::ProjectedMilstein);
  CHECK(*parse_map_id("ssbm") == MapKind::SplitStepBackward);
  CHECK(*parse_map_id("tmil") == MapKind::TamedMilstein);
  CHECK_FALSE(parse_map_id("euler").has_value());
  CHECK(scheme_label(MapKind::ProjectedMilstein) == "JA-PMil");
  for (auto k : {MapKind::Milstein, MapKind::ProjectedMilstein, MapKind::SplitStepBackward,
                 MapKind::TamedMilstein})
    CHECK(*parse_map_id(map_id(k)) == k);
}

TEST_CASE("milstein") {
  SUBCASE("inert problem is the identity") {
    const SjdeProblem p = jaam::testing::inert(2);
    const Vector x = vec({0.3, -1.2});
    const auto xi = IteratedIntegrals::from_parts(0.1, vec({0.2}), Matrix());
    CHECK(milstein(x, xi, p) == x);
  }
  SUBCASE("scalar geometric noise") {
    const SjdeProblem p = jaam::testing::geometric();
    const double x = 1.3, h = 0.02, dw = -0.17;
    const double expected = x + x * dw + x * (dw * dw - h) / 2;
    CHECK(milstein(vec({x}), scalar_step(h, dw), p)[0] == doctest::Approx(expected).epsilon(1e-15));
  }
  SUBCASE("1d multiplicative model") {
    const SjdeProblem p = make_1d_multiplicative(0.2);
    const double y = milstein(vec({0.5}), scalar_step(0.01, 0.1), p)[0];
    // 0.5 + 0.01 * 0.125 + 0.15 * 0.1 + (-0.03) * (0.01 - 0.01) / 2
    CHECK(y == doctest::Approx(0.51625).epsilon(1e-14));
  }
  SUBCASE("index convention of the correction term") {
    // Only Dg_1 g_2 is non-zero, so the correction is Dg_1 g_2 * I(2,1).
    SjdeProblem p = jaam::testing::inert(1);
    p.drivers = 2;
    p.diffusion = [](const Vector&) { return Matrix(Matrix::Zero(1, 2)); };
    p.diffusion_correction = [](int i, int j, const Vector&) {
      return Vector::Constant(1, i == 0 && j == 1 ? 1.0 : 0.0);
    };
    p.noise_class = NoiseClass::NonCommutative;
    Matrix area = Matrix::Zero(2, 2);
    area(0, 1) = 0.01;
    area(1, 0) = -0.01;
    const auto xi = IteratedIntegrals::from_parts(0.1, vec({0.2, 0.3}), area);
    CHECK(milstein(vec({0.0}), xi, p)[0] == doctest::Approx(xi.i2(1, 0)).epsilon(1e-15));
    CHECK(xi.i2(1, 0) == doctest::Approx(0.03 - 0.01));
  }
}

TEST_CASE("projected milstein") {
  const SjdeProblem p = make_1d_additive(0.2);
  const MapParams params;
  CHECK(projection_radius(std::ldexp(1.0, -8), p, params) == doctest::Approx(1.0).epsilon(1e-15));
  double prev = 0;
  for (int k = 1; k <= 18; ++k) {
    const double r = projection_radius(std::ldexp(1.0, -k), p, params);
    CHECK(r > prev);
    prev = r;
  }
  const double h = std::ldexp(1.0, -8);
  const auto xi = scalar_step(h, 0.03);
  const Vector inside = vec({0.9});
  CHECK(projected_milstein(inside, xi, p, params) == milstein(inside, xi, p));
  const Vector outside = vec({2.0});
  CHECK(projected_milstein(outside, xi, p, params) == milstein(vec({1.0}), xi, p));

  MapParams explicit_alpha;
  explicit_alpha.projection_scale = 1.0;
  explicit_alpha.projection_exponent = 0.5;
  CHECK(projection_radius(0.25, p, explicit_alpha) == doctest::Approx(2.0));
}

TEST_CASE("split-step backward milstein") {
  SUBCASE("zero drift leaves only the stochastic terms") {
    const SjdeProblem p = jaam::testing::geometric();
    const auto xi = scalar_step(0.05, 0.2);
    CHECK(split_step_backward_milstein(vec({0.7}), xi, p)[0] ==
          doctest::Approx(milstein(vec({0.7}), xi, p)[0]).epsilon(1e-15));
  }
  SUBCASE("linear decay") {
    const SjdeProblem p = jaam::testing::linear_drift(-1.0);
    const double x = 0.8, h = 0.1;
    const double y = split_step_backward_milstein(vec({x}), scalar_step(h, 0.0), p)[0];
    CHECK(std::abs(y - x / (1 + h)) <= 1e-12);
  }
  SUBCASE("cubic drift") {
    const SjdeProblem p = make_1d_additive(0.2);
    const double x = 0.5, h = 0.1;
    const double y = split_step_backward_milstein(vec({x}), scalar_step(h, 0.0), p)[0];
    CHECK(std::abs(y - h * (y - 3 * y * y * y) - x) <= 1e-12);
    CHECK(y == doctest::Approx(cubic_implicit_root(x, h)).epsilon(1e-12));
  }
  SUBCASE("non-convergence is reported") {
    const SjdeProblem p = make_1d_additive(0.2);
    MapParams params;
    params.newton_max_iter = 0;
    CHECK_THROWS_AS(split_step_backward_milstein(vec({3.0}), scalar_step(0.1, 0.0), p, params),
                    MapFailure);
  }
  SUBCASE("finite-difference Jacobian fallback") {
    SjdeProblem p = make_2d(Noise2d::G1, 0.2);
    const auto xi = IteratedIntegrals::from_parts(0.05, vec({0.1, -0.1}), Matrix());
    const Vector with_jac = split_step_backward_milstein(vec({1.5, -0.4}), xi, p);
    p.drift_jacobian = nullptr;
    const Vector without = split_step_backward_milstein(vec({1.5, -0.4}), xi, p);
    CHECK((with_jac - without).norm() < 1e-11);
  }
}

TEST_CASE("tamed milstein") {
  const SjdeProblem inert = jaam::testing::inert(1);
  CHECK(tamed_milstein(vec({0.4}), scalar_step(0.1, 0.3), inert)[0] == 0.4);

  const SjdeProblem p = make_1d_multiplicative(0.2);
  const double h = 1e-4, x = 0.5;
  const auto xi = scalar_step(h, 0.007);
  const double tm = tamed_milstein(vec({x}), xi, p)[0];
  const double m = milstein(vec({x}), xi, p)[0];
  const double fx = std::abs(p.drift(vec({x}))[0]);
  CHECK(std::abs(tm - m) <= 2 * h * fx * std::abs(m - x));

  // Cubic drift at large states: the tamed drift contribution h f / (1 + h|f|)
  // stays below 1.
  const SjdeProblem add = make_1d_additive(0.2);
  for (double big : {10.0, 1e3, 1e6}) {
    const auto step = scalar_step(0.01, 0.05);
    const double inc = tamed_milstein(vec({big}), step, add)[0] - big;
    CHECK(std::abs(inc) <= 0.2 * 0.05 + 1.0);
  }
}

TEST_CASE("all maps agree without drift when the projection is inactive") {
  SjdeProblem p = jaam::testing::driftless_additive(0.3);
  p.drift_poly_degree = 3;
  for (double x : {-0.4, 0.1, 0.6}) {
    const auto xi = scalar_step(1.0 / 256, 0.04);
    const Vector ref = milstein(vec({x}), xi, p);
    for (auto k : {MapKind::ProjectedMilstein, MapKind::SplitStepBackward, MapKind::TamedMilstein})
      CHECK((OneStepMap{k, {}}(vec({x}), xi, p) - ref).norm() == 0.0);
  }
}

TEST_CASE("Levy area sign is irrelevant for commutative noise only") {
  const SjdeProblem g2 = make_2d(Noise2d::G2, 0.2);
  const SjdeProblem g3 = make_2d(Noise2d::G3, 0.2);
  RandomStream rng(17, 0);
  double worst_g2 = 0, largest_g3 = 0;
  for (int k = 0; k < 10000; ++k) {
    const double h = 0.01;
    const Vector dW = std::sqrt(h) * vec({rng.normal(), rng.normal()});
    const Vector x = vec({2 * rng.uniform() - 1, 2 * rng.uniform() - 1});
    const Matrix a = sample_levy_area(h, dW, 20, rng);
    const auto plus = IteratedIntegrals::from_parts(h, dW, a);
    const auto minus = IteratedIntegrals::from_parts(h, dW, -a);
    worst_g2 = std::max(worst_g2, (milstein(x, plus, g2) - milstein(x, minus, g2)).norm());
    largest_g3 = std::max(largest_g3, (milstein(x, plus, g3) - milstein(x, minus, g3)).norm());
  }
  CHECK(worst_g2 <= 1e-12);
  CHECK(largest_g3 > 1e-6);
}

}
