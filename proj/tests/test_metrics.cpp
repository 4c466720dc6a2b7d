#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hec/metrics.hpp"
#include "hec/rng.hpp"
#include "hec/synth.hpp"

using namespace hec;

namespace {

Rotation random_rotation(Rng& rng) {
  double c[4];
  double n = 0;
  do {
    n = 0;
    for (double& v : c) {
      v = rng.normal();
      n += v * v;
    }
    n = std::sqrt(n);
  } while (n < 1e-6);
  return rotation_from_quaternion(
      UnitQuaternion::from_components(c[0] / n, c[1] / n, c[2] / n, c[3] / n, 1e-6));
}

RigidTransform random_transform(Rng& rng) {
  return {random_rotation(rng),
          Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()) * 0.3};
}

}  // namespace

TEST_CASE("position error") {
  Rng rng(301);
  const RigidTransform t = random_transform(rng);
  CHECK(position_error(t, t) == 0);

  RigidTransform moved = t;
  moved.translation += Eigen::Vector3d(0.003, 0.004, 0.0);
  CHECK(std::abs(position_error(moved, t) - 0.005) < 1e-15);

  // Common displacement cancels.
  const Eigen::Vector3d d(0.4, -0.1, 0.2);
  RigidTransform a = t;
  RigidTransform b = moved;
  a.translation += d;
  b.translation += d;
  CHECK(std::abs(position_error(b, a) - 0.005) < 1e-12);
}

TEST_CASE("rotation error") {
  Rng rng(303);
  const RigidTransform t = random_transform(rng);
  CHECK(rotation_error(t, t) == 0);

  const double ten_deg = 10.0 * std::numbers::pi / 180.0;
  RigidTransform truth = t;
  truth.rotation = Rotation::about_z(ten_deg) * t.rotation;
  CHECK(std::abs(rotation_error(t, truth) - ten_deg) < 1e-12);

  for (int i = 0; i < 25; ++i) {
    const RigidTransform p = random_transform(rng);
    const RigidTransform q = random_transform(rng);
    const double pq = rotation_error(p, q);
    CHECK(pq >= 0);
    CHECK(pq <= std::numbers::pi);
    CHECK(std::abs(pq - rotation_error(q, p)) < 1e-12);
  }

  const PoseError pe = pose_error(t, truth);
  CHECK(pe.e_t == 0);
  CHECK(std::abs(pe.e_r - ten_deg) < 1e-12);
}

TEST_CASE("spread error vanishes on consistent data") {
  ScenarioConfig cfg;
  cfg.samples = 60;
  cfg.seed = 4242;
  Rng rng(4242);
  const RigidTransform x = sample_extrinsic(cfg, rng);
  const Scenario sc = generate_scenario(cfg, x, rng);
  CHECK(indirect_spread_error(x, sc.samples) < 1e-12);
}

TEST_CASE("pure translation bias is common mode under constant end-effector rotation") {
  // All end-effector poses share one rotation; only translations differ.
  Rng rng(305);
  const RigidTransform x = random_transform(rng);
  const RigidTransform tag = random_transform(rng);
  const Rotation r_be = random_rotation(rng);
  std::vector<CalibrationSample> samples;
  for (int i = 0; i < 20; ++i) {
    const RigidTransform t_be{r_be, Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal())};
    samples.push_back({t_be, invert(t_be * x) * tag});
  }
  REQUIRE(indirect_spread_error(x, samples) < 1e-12);

  RigidTransform shifted = x;
  shifted.translation += Eigen::Vector3d(0.02, -0.01, 0.03);
  CHECK(indirect_spread_error(shifted, samples) < 1e-12);
}

TEST_CASE("rotated extrinsic produces the frozen spread") {
  ScenarioConfig cfg;
  cfg.samples = 60;
  cfg.seed = 4242;
  Rng rng(4242);
  const RigidTransform x = sample_extrinsic(cfg, rng);
  const Scenario sc = generate_scenario(cfg, x, rng);
  const RigidTransform tilted{
      Rotation::about_y(5.0 * std::numbers::pi / 180.0) * x.rotation, x.translation};
  const double eps = indirect_spread_error(tilted, sc.samples);
  CHECK(eps > 0);
  CHECK(eps == doctest::Approx(0.021529241744847508).epsilon(1e-12));
}

TEST_CASE("spread error is invariant to a base frame change") {
  ScenarioConfig cfg;
  cfg.samples = 30;
  cfg.seed = 99;
  Rng rng(99);
  const RigidTransform x = sample_extrinsic(cfg, rng);
  const Scenario sc = generate_scenario(cfg, x, rng);
  RigidTransform est = x;
  est.translation += Eigen::Vector3d(0.004, -0.002, 0.001);
  est.rotation = Rotation::about_x(0.02) * est.rotation;
  const double base = indirect_spread_error(est, sc.samples);

  const RigidTransform g = random_transform(rng);
  std::vector<CalibrationSample> moved = sc.samples;
  for (CalibrationSample& s : moved) {
    s.t_be = g * s.t_be;
  }
  CHECK(std::abs(indirect_spread_error(est, moved) - base) < 1e-12);
}

TEST_CASE("spread error rejects an empty set") {
  CHECK_THROWS_AS(indirect_spread_error(RigidTransform{}, {}), InsufficientData);
}
