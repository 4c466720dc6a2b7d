#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hec/metrics.hpp"
#include "hec/pnp.hpp"
#include "hec/rng.hpp"
#include "hec/synth.hpp"

using namespace hec;

namespace {

// Camera pose in the gripper frame with the whole model comfortably in frame.
RigidTransform random_view_pose(Rng& rng) {
  const Eigen::Vector3d axis = rng.unit_vector3();
  const double angle = 0.15 * rng.uniform01();
  const Eigen::Vector3d t(0.08 * (rng.uniform01() - 0.5), 0.08 * (rng.uniform01() - 0.5),
                          -0.32 - 0.08 * rng.uniform01());
  return {rotation_about_axis(axis, angle), t};
}

struct Fixture {
  RigidTransform pose;
  KeypointObservations obs;
};

Fixture exact_fixture(Rng& rng, const KeypointModel& model, const CameraIntrinsics& k) {
  for (int attempt = 0; attempt < 50; ++attempt) {
    const RigidTransform pose = random_view_pose(rng);
    const KeypointObservations obs = render_keypoints(model, pose, k);
    const bool all_visible = std::all_of(obs.points.begin(), obs.points.end(),
                                         [](const KeypointObservation& o) { return o.visible; });
    if (all_visible) {
      return {pose, obs};
    }
  }
  REQUIRE(false);
  return {};
}

}  // namespace

TEST_CASE("frame clamp") {
  CHECK((clamp_to_frame({0.3, -0.7}) - Eigen::Vector2d(0.3, -0.7)).norm() == 0);
  CHECK((clamp_to_frame({1.4, 0}) - Eigen::Vector2d(1, 0)).norm() == 0);
  CHECK((clamp_to_frame({-2, 3}) - Eigen::Vector2d(-1, 1)).norm() == 0);
}

TEST_CASE("rim filter") {
  KeypointObservations obs;
  obs.points.push_back({0, {0, 0}, true});
  obs.points.push_back({1, {0.999, 0}, true});
  obs.points.push_back({2, {0.98, 0}, true});     // exactly at threshold: removed
  obs.points.push_back({3, {0, -0.9799}, true});  // just inside: kept
  obs.points.push_back({4, {1.0, 0.2}, false});   // clamped rim point: removed

  const KeypointObservations kept = rim_filter(obs, 0.01);
  REQUIRE(kept.points.size() == 2);
  CHECK(kept.points[0].id == 0);
  CHECK(kept.points[1].id == 3);

  CHECK_THROWS_AS(rim_filter(obs, 0.0), InvalidInput);
  CHECK_THROWS_AS(rim_filter(obs, 0.5), InvalidInput);
}

TEST_CASE("exact recovery over random views") {
  const GripperGeometry& g = synthetic_gripper();
  const CameraIntrinsics k = default_intrinsics();
  Rng rng(71);
  for (int i = 0; i < 20; ++i) {
    const Fixture f = exact_fixture(rng, g.keypoints, k);
    const PnpResult res = solve_pnp(g.keypoints, f.obs, k);
    CAPTURE(i);
    CHECK(res.converged);
    CHECK(position_error(res.pose, f.pose) < 1e-6);
    CHECK(rotation_error(res.pose, f.pose) < 1e-6);
    CHECK(res.mean_reprojection_px < 1e-6);
  }
}

TEST_CASE("prior-guided refinement accepts four points") {
  const GripperGeometry& g = synthetic_gripper();
  const CameraIntrinsics k = default_intrinsics();
  Rng rng(73);
  const Fixture f = exact_fixture(rng, g.keypoints, k);

  // Four well-spread ids: two palm corners, one knuckle, one fingertip.
  KeypointModel small;
  KeypointObservations small_obs;
  for (const int id : {0, 7, 14, 30}) {
    small.points.push_back(g.keypoints.points[id]);
    small_obs.points.push_back(f.obs.points[id]);
    REQUIRE(g.keypoints.points[id].id == id);
  }

  // No prior: four points are not enough to initialize.
  CHECK_THROWS_AS(solve_pnp(small, small_obs, k), InsufficientData);

  Rng prng(74);
  const RigidTransform prior = perturb_pose(f.pose, 0.01, 0.05, prng);
  const PnpResult res = solve_pnp(small, small_obs, k, prior);
  CHECK(position_error(res.pose, f.pose) < 1e-6);
  CHECK(rotation_error(res.pose, f.pose) < 1e-6);
}

TEST_CASE("collinear points are rejected") {
  const CameraIntrinsics k = default_intrinsics();
  KeypointModel line;
  for (int i = 0; i < 5; ++i) {
    line.points.push_back({i, Eigen::Vector3d(0.01 * i, 0.005 * i, 0.002 * i), true});
  }
  const RigidTransform pose{Rotation(), Eigen::Vector3d(0, 0, -0.3)};
  const KeypointObservations obs = render_keypoints(line, pose, k);
  CHECK_THROWS_AS(solve_pnp(line, obs, k), DegenerateGeometry);
  // Even a prior cannot make a line observable.
  CHECK_THROWS_AS(solve_pnp(line, obs, k, pose), DegenerateGeometry);
}

TEST_CASE("insufficient correspondences") {
  const GripperGeometry& g = synthetic_gripper();
  const CameraIntrinsics k = default_intrinsics();
  Rng rng(75);
  const Fixture f = exact_fixture(rng, g.keypoints, k);

  KeypointModel small;
  KeypointObservations small_obs;
  for (const int id : {0, 7, 14, 26, 31}) {  // five spread-out points
    small.points.push_back(g.keypoints.points[id]);
    small_obs.points.push_back(f.obs.points[id]);
  }
  CHECK_THROWS_AS(solve_pnp(small, small_obs, k), InsufficientData);

  small.points.resize(3);
  small_obs.points.resize(3);
  CHECK_THROWS_AS(solve_pnp(small, small_obs, k, f.pose), InsufficientData);
}

TEST_CASE("consensus on exact data matches the direct solve") {
  const GripperGeometry& g = synthetic_gripper();
  const CameraIntrinsics k = default_intrinsics();
  Rng rng(77);
  const Fixture f = exact_fixture(rng, g.keypoints, k);

  const PnpResult direct = solve_pnp(g.keypoints, f.obs, k);
  Rng r1(123);
  const RansacResult res = solve_pnp_ransac(g.keypoints, f.obs, k, {}, r1);
  CHECK(res.inlier_ids.size() == g.keypoints.points.size());
  CHECK(std::is_sorted(res.inlier_ids.begin(), res.inlier_ids.end()));
  CHECK(position_error(res.fit.pose, direct.pose) < 1e-9);
  CHECK(rotation_error(res.fit.pose, direct.pose) < 1e-9);

  Rng r2(123);
  const RansacResult rep = solve_pnp_ransac(g.keypoints, f.obs, k, {}, r2);
  CHECK(rep.inlier_ids == res.inlier_ids);
  CHECK((rep.fit.pose.translation.array() == res.fit.pose.translation.array()).all());
}

TEST_CASE("consensus rejects gross outliers") {
  const GripperGeometry& g = synthetic_gripper();
  const CameraIntrinsics k = default_intrinsics();
  Rng rng(79);
  const Fixture f = exact_fixture(rng, g.keypoints, k);

  KeypointObservations corrupted = f.obs;
  const std::vector<int> bad_ids = {1, 6, 15, 22, 33};
  for (const int id : bad_ids) {
    // Push far into a corner; verify it really is a gross error in pixels.
    const Eigen::Vector2d fake(id % 2 == 0 ? 0.9 : -0.9, id % 3 == 0 ? 0.85 : -0.85);
    const double moved_px =
        (normalized_to_pixel(k, fake) - normalized_to_pixel(k, corrupted.points[id].uv)).norm();
    REQUIRE(moved_px > 20.0);
    corrupted.points[id].uv = fake;
  }

  Rng solver_rng(321);
  const RansacResult res = solve_pnp_ransac(g.keypoints, corrupted, k, {}, solver_rng);
  CHECK(res.inlier_ids.size() == g.keypoints.points.size() - bad_ids.size());
  for (const int id : bad_ids) {
    CHECK(!std::binary_search(res.inlier_ids.begin(), res.inlier_ids.end(), id));
  }
  CHECK(position_error(res.fit.pose, f.pose) < 1e-6);
  CHECK(rotation_error(res.fit.pose, f.pose) < 1e-6);
}

TEST_CASE("consensus fails on pure noise") {
  const GripperGeometry& g = synthetic_gripper();
  const CameraIntrinsics k = default_intrinsics();
  Rng rng(81);
  KeypointObservations obs;
  for (const Keypoint& kp : g.keypoints.points) {
    obs.points.push_back(
        {kp.id, {2.0 * rng.uniform01() - 1.0, 2.0 * rng.uniform01() - 1.0}, true});
  }
  RansacOptions opts;
  opts.iterations = 100;
  Rng solver_rng(83);
  CHECK_THROWS_AS(solve_pnp_ransac(g.keypoints, obs, k, opts, solver_rng), NoConsensus);
}

TEST_CASE("clustered subset is more noise-sensitive than the full set") {
  const GripperGeometry& g = synthetic_gripper();
  const KeypointModel tips = g.keypoints.subset(KeypointSubset::InFrame100);
  const CameraIntrinsics k = default_intrinsics();
  const ScenarioConfig cfg;
  Rng rng(85);
  Rng noise(86);
  Rng solver_rng(87);

  double full_sum = 0;
  double tips_sum = 0;
  int used = 0;
  const int trials = 40;
  for (int i = 0; i < trials; ++i) {
    // Wrist-mount viewpoints, as the calibration pipeline sees them.
    const RigidTransform pose = sample_extrinsic(cfg, rng);
    const KeypointObservations full_noisy =
        rim_filter(perturb_keypoints(render_keypoints(g.keypoints, pose, k), 1.0, k, noise),
                   0.01);
    const KeypointObservations tips_noisy =
        rim_filter(perturb_keypoints(render_keypoints(tips, pose, k), 1.0, k, noise), 0.01);

    // Individual consensus runs can fail on the thin cluster; skip those.
    try {
      const double full_err = position_error(
          solve_pnp_ransac(g.keypoints, full_noisy, k, {}, solver_rng).fit.pose, pose);
      const double tips_err = position_error(
          solve_pnp_ransac(tips, tips_noisy, k, {}, solver_rng).fit.pose, pose);
      full_sum += full_err;
      tips_sum += tips_err;
      ++used;
    } catch (const Error&) {
      continue;
    }
  }
  REQUIRE(used >= 25);
  CHECK(full_sum / used > 0);
  CHECK(full_sum < tips_sum);
}
