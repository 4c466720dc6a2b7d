#include "hec/metrics.hpp"

#include <cmath>

namespace hec {

double position_error(const RigidTransform& est, const RigidTransform& truth) {
  return (est.translation - truth.translation).norm();
}

double rotation_error(const RigidTransform& est, const RigidTransform& truth) {
  return rotation_angle_between(est.rotation, truth.rotation);
}

PoseError pose_error(const RigidTransform& est, const RigidTransform& truth) {
  return {position_error(est, truth), rotation_error(est, truth)};
}

double indirect_spread_error(const RigidTransform& extrinsic,
                             std::span<const CalibrationSample> eval_set) {
  if (eval_set.empty()) {
    throw InsufficientData("spread error needs a non-empty evaluation set");
  }
  std::vector<Eigen::Vector3d> positions;
  positions.reserve(eval_set.size());
  for (const CalibrationSample& s : eval_set) {
    positions.push_back((s.t_be * extrinsic * s.t_co).translation);
  }
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const Eigen::Vector3d& p : positions) {
    mean += p;
  }
  mean /= static_cast<double>(positions.size());
  double sum_sq = 0;
  for (const Eigen::Vector3d& p : positions) {
    sum_sq += (p - mean).squaredNorm();
  }
  return std::sqrt(sum_sq / static_cast<double>(positions.size()));
}

}  // namespace hec
