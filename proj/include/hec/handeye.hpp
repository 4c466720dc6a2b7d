#pragma once

#include <span>
#include <string>
#include <vector>

#include "hec/geometry.hpp"

namespace hec {

// One robot pose paired with the calibration-object pose seen at that time:
// t_be is end-effector in base, t_co is object in camera.
struct CalibrationSample {
  RigidTransform t_be;
  RigidTransform t_co;
};

// Relative motion pair satisfying a * X = X * b for the true extrinsic X
// (camera in end-effector frame): a is the end-effector motion, b the
// corresponding object-in-camera motion.
struct MotionPair {
  RigidTransform a;
  RigidTransform b;
};

enum class PairStrategy {
  AllPairs,     // every (i, j) with i < j: n*(n-1)/2 pairs
  Consecutive,  // (i, i+1) only: n-1 pairs
};

enum class HandEyeMethod { Tsai, Park, Horaud, Daniilidis };

const char* method_name(HandEyeMethod m);

struct SolverOptions {
  // Stacked linear systems with condition number above this are rejected as
  // degenerate (e.g. all motion axes parallel).
  double condition_limit = 1e8;
  // Dual-quaternion solver: sigma_6 below this fraction of sigma_1 means the
  // null space is larger than the expected two dimensions.
  double nullspace_ratio = 1e-8;
  // Pairs whose rotation angle exceeds this are dropped from the Tsai solve;
  // its modified-Rodrigues parametrization blows up near pi.
  double near_pi_cutoff = std::numbers::pi - 1e-3;
};

// Builds relative-motion pairs from absolute samples:
//   a_ij = t_be_i^-1 * t_be_j,  b_ij = t_co_i * t_co_j^-1.
// Requires >= 2 samples.
std::vector<MotionPair> build_motion_pairs(std::span<const CalibrationSample> samples,
                                           PairStrategy strategy = PairStrategy::AllPairs);

// Closed-form AX = XB solvers.  Each requires >= 2 pairs with at least two
// distinct rotation axes and throws DegenerateGeometry otherwise.  All return
// the camera-in-end-effector transform; translation always comes from the
// stacked least squares (R_a - I) t_x = R_x t_b - t_a over all pairs.
RigidTransform solve_tsai(std::span<const MotionPair> pairs, const SolverOptions& opts = {});
RigidTransform solve_park(std::span<const MotionPair> pairs, const SolverOptions& opts = {});
RigidTransform solve_horaud(std::span<const MotionPair> pairs, const SolverOptions& opts = {});
RigidTransform solve_daniilidis(std::span<const MotionPair> pairs,
                                const SolverOptions& opts = {});

RigidTransform solve_hand_eye(std::span<const MotionPair> pairs, HandEyeMethod method,
                              const SolverOptions& opts = {});

// End-to-end calibration from >= 3 absolute samples.
RigidTransform calibrate(std::span<const CalibrationSample> samples, HandEyeMethod method,
                         PairStrategy strategy = PairStrategy::AllPairs,
                         const SolverOptions& opts = {});

// Consistency of an extrinsic with the motion constraint: per-pair mismatch
// between a * X and X * b.
struct MotionResiduals {
  double mean_rotation = 0;   // radians
  double max_rotation = 0;    // radians
  double mean_translation = 0;  // meters
  double max_translation = 0;   // meters
};

MotionResiduals motion_residuals(std::span<const MotionPair> pairs, const RigidTransform& x);

}  // namespace hec
