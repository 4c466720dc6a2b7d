#pragma once

#include <span>

#include "hec/errors.hpp"
#include "hec/geometry.hpp"
#include "hec/handeye.hpp"

namespace hec {

// Translation / rotation error of an estimated pose against ground truth.
struct PoseError {
  double e_t = 0;  // meters
  double e_r = 0;  // radians, in [0, pi]
};

// ||t_est - t_truth||.
double position_error(const RigidTransform& est, const RigidTransform& truth);

// Angle of the residual rotation R_truth * R_est^T.  Symmetric in its
// arguments, in [0, pi].
double rotation_error(const RigidTransform& est, const RigidTransform& truth);

PoseError pose_error(const RigidTransform& est, const RigidTransform& truth);

// Spread of the implied object-in-base position across an evaluation set:
// for each sample, t_bo = (t_be * extrinsic * t_co).translation; returns the
// root mean squared deviation from the mean position (population divisor).
// Zero when the extrinsic and samples are exactly consistent.
double indirect_spread_error(const RigidTransform& extrinsic,
                             std::span<const CalibrationSample> eval_set);

}  // namespace hec
