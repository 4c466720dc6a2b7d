#pragma once

#include <optional>
#include <span>
#include <vector>

#include "hec/geometry.hpp"
#include "hec/rng.hpp"

namespace hec {

// Named subsets of the keypoint model.  InFrame70 is the full working set;
// InFrame100 is the small always-visible cluster around the fingertips.
enum class KeypointSubset { InFrame70, InFrame100 };

struct Keypoint {
  int id = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // model frame, meters
  bool in_frame_100 = false;
};

struct KeypointModel {
  std::vector<Keypoint> points;

  // Throws InvalidInput on duplicate ids.
  void validate() const;

  KeypointModel subset(KeypointSubset s) const;
};

// Detected/rendered keypoint location in normalized image coordinates
// ([-1, 1] over the full sensor span on each axis).  Out-of-frame projections
// are stored clamped to the boundary with visible = false.
struct KeypointObservation {
  int id = 0;
  Eigen::Vector2d uv = Eigen::Vector2d::Zero();
  bool visible = true;
};

struct KeypointObservations {
  std::vector<KeypointObservation> points;

  // Throws InvalidInput when any coordinate leaves [-1, 1].
  void validate() const;
};

// Clamps normalized coordinates to the [-1, 1]^2 frame.
Eigen::Vector2d clamp_to_frame(const Eigen::Vector2d& uv);

// Drops every observation lying within `margin` of the image rim, where the
// margin is a fraction of the full span (0.01 = 1%).  A point at |u| >=
// 1 - 2 * margin on either axis is removed; the boundary itself is excluded.
KeypointObservations rim_filter(const KeypointObservations& obs, double margin = 0.01);

struct PnpOptions {
  int max_iterations = 100;
  double step_tolerance = 1e-10;  // Gauss-Newton stop on update norm
};

struct PnpResult {
  // Camera pose in the model frame: model points p map to camera coordinates
  // via pose^-1 * p.
  RigidTransform pose;
  bool converged = false;
  int iterations = 0;
  double mean_reprojection_px = 0;  // over the points used
};

// Pose from 2D-3D correspondences: linear initialization followed by damped
// Gauss-Newton on pixel reprojection error.  Uses observations that are
// visible and match a model id.  Requires >= 6 usable points, or >= 4 when a
// prior pose is supplied (refinement-only mode).  Throws DegenerateGeometry
// when the usable points are collinear.
PnpResult solve_pnp(const KeypointModel& model, const KeypointObservations& obs,
                    const CameraIntrinsics& k,
                    const std::optional<RigidTransform>& prior = std::nullopt,
                    const PnpOptions& opts = {});

struct RansacOptions {
  int iterations = 500;
  double inlier_threshold_px = 2.0;
  int min_inliers = 6;
  PnpOptions refine;
};

struct RansacResult {
  PnpResult fit;
  std::vector<int> inlier_ids;  // sorted ascending
};

// Hypothesize-and-verify over minimal 6-point subsets with a deterministic
// seeded generator, then a final refit on the winning inlier set.  Throws
// NoConsensus when no hypothesis reaches min_inliers.
RansacResult solve_pnp_ransac(const KeypointModel& model, const KeypointObservations& obs,
                              const CameraIntrinsics& k, const RansacOptions& opts, Rng& rng);

}  // namespace hec
