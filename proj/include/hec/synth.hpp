#pragma once

#include <cstdint>
#include <vector>

#include "hec/geometry.hpp"
#include "hec/handeye.hpp"
#include "hec/icp.hpp"
#include "hec/pnp.hpp"
#include "hec/rng.hpp"

namespace hec {

// Sampling ranges for ground-truth extrinsics and synthetic trajectories.
struct ScenarioConfig {
  // Half-extents of the uniform translation box around the nominal mount (m).
  Eigen::Vector3d extents = Eigen::Vector3d(0.015, 0.015, 0.015);
  // Per-axis uniform Euler perturbation range around the nominal mount (rad).
  double orientation_range = 5.0 * std::numbers::pi / 180.0;
  int samples = 15;
  // Camera orbit radius around the calibration tag (m).
  double workspace_radius = 0.30;
  std::uint64_t seed = 0;
};

// Noise magnitudes for synthetic data generation.  Pose noise is applied at
// exact magnitude in a uniformly random direction; estimator noise is
// zero-mean Gaussian.
struct NoiseSpec {
  double tag_trans_mag = 0;          // m
  double tag_rot_mag = 0;            // rad
  double keypoint_px_mag = 0;        // px
  double estimator_trans_sigma = 0;  // m, per axis
  double estimator_rot_sigma = 0;    // rad, angle about a random axis
};

// A complete synthetic calibration setup: ground-truth extrinsic (camera in
// end-effector frame), fixed tag pose, and the sample trajectory.  Invariant:
// t_co == invert(t_be * truth_extrinsic) * tag_in_base for every sample.
struct Scenario {
  RigidTransform truth_extrinsic;
  RigidTransform tag_in_base;
  std::vector<CalibrationSample> samples;
  std::uint64_t seed = 0;
};

// Wrist-mount reference pose of the camera in the end-effector frame: 50 mm
// behind and 80 mm above the flange, pitched 30 degrees toward the fingers.
RigidTransform nominal_mount();

// Camera intrinsics of the synthetic sensor (256x144).
CameraIntrinsics default_intrinsics();

// Ground-truth extrinsic drawn uniformly from the box/orientation ranges
// around the nominal mount.  Zero ranges return the nominal mount exactly.
RigidTransform sample_extrinsic(const ScenarioConfig& cfg, Rng& rng);

// Tag-facing trajectory on the viewsphere (deterministic low-discrepancy
// azimuth/elevation pattern, seeded phases).  Re-samples until the motion set
// contains at least two distinct rotation axes; throws DegenerateGeometry
// after 100 attempts.  Requires cfg.samples >= 2.
Scenario generate_scenario(const ScenarioConfig& cfg, const RigidTransform& truth_extrinsic,
                           Rng& rng);

// Displaces the translation by exactly trans_mag in a uniformly random
// direction and composes a rotation by exactly rot_mag about a uniformly
// random axis (left-multiplied).  Draw order: direction, then axis.
RigidTransform perturb_pose(const RigidTransform& pose, double trans_mag, double rot_mag,
                            Rng& rng);

// Projects model keypoints through the pinhole camera at camera_pose (camera
// in model frame).  Out-of-frame projections are clamped to the boundary and
// flagged invisible.  Throws InvalidInput when a point lies at or behind the
// camera plane.
KeypointObservations render_keypoints(const KeypointModel& model,
                                      const RigidTransform& camera_pose,
                                      const CameraIntrinsics& k);

// Displaces every visible keypoint by exactly px_mag pixels in a uniformly
// random image direction (one draw per visible point, in storage order), then
// clamps back to the frame.  Invisible points are untouched.
KeypointObservations perturb_keypoints(const KeypointObservations& obs, double px_mag,
                                       const CameraIntrinsics& k, Rng& rng);

struct GripperGeometry {
  KeypointModel keypoints;  // 38 points; the 12 fingertip points carry in_frame_100
  PointCloud cloud;         // 5000 surface samples with outward normals
};

// Deterministic synthetic parallel-jaw gripper in the end-effector frame
// (+z toward the fingertips).  Same geometry on every call.
const GripperGeometry& synthetic_gripper();

// Single-image stand-in estimator: ground truth corrupted by Gaussian
// translation noise (per axis) and a Gaussian-angle rotation about a random
// axis.  Draw order: three translation normals, axis, angle.
RigidTransform noisy_oracle_estimator(const Scenario& scenario, int sample_index,
                                      const NoiseSpec& noise, Rng& rng);

}  // namespace hec
