#include "hec/handeye.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace hec {

namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0, -v.z(), v.y(),
      v.z(), 0, -v.x(),
      -v.y(), v.x(), 0;
  return s;
}

// Left quaternion multiplication matrix: Q(q) p = q * p (scalar-first).
Eigen::Matrix4d quat_left_matrix(const Quaternion& q) {
  Eigen::Matrix4d m;
  m << q.w, -q.x, -q.y, -q.z,
      q.x, q.w, -q.z, q.y,
      q.y, q.z, q.w, -q.x,
      q.z, -q.y, q.x, q.w;
  return m;
}

// Right quaternion multiplication matrix: W(q) p = p * q.
Eigen::Matrix4d quat_right_matrix(const Quaternion& q) {
  Eigen::Matrix4d m;
  m << q.w, -q.x, -q.y, -q.z,
      q.x, q.w, q.z, -q.y,
      q.y, -q.z, q.w, q.x,
      q.z, q.y, -q.x, q.w;
  return m;
}

void require_pairs(std::size_t n) {
  if (n < 2) {
    throw InsufficientData("hand-eye solve requires at least 2 motion pairs, got " +
                           std::to_string(n));
  }
}

// Shared translation recovery: stack (R_a - I) t_x = R_x t_b - t_a.
Eigen::Vector3d solve_translation(std::span<const MotionPair> pairs, const Rotation& rx,
                                  const SolverOptions& opts) {
  const auto n = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd a(3 * n, 3);
  Eigen::VectorXd b(3 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const MotionPair& p = pairs[i];
    a.middleRows<3>(3 * i) = p.a.rotation.matrix() - Eigen::Matrix3d::Identity();
    b.segment<3>(3 * i) = rx * p.b.translation - p.a.translation;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(2) <= 0 || sv(0) / sv(2) > opts.condition_limit) {
    throw DegenerateGeometry("translation system is rank-deficient (condition number " +
                             std::to_string(sv(2) > 0 ? sv(0) / sv(2) : 0.0) + ")");
  }
  return svd.solve(b);
}

}  // namespace

const char* method_name(HandEyeMethod m) {
  switch (m) {
    case HandEyeMethod::Tsai: return "tsai";
    case HandEyeMethod::Park: return "park";
    case HandEyeMethod::Horaud: return "horaud";
    case HandEyeMethod::Daniilidis: return "daniilidis";
  }
  return "unknown";
}

std::vector<MotionPair> build_motion_pairs(std::span<const CalibrationSample> samples,
                                           PairStrategy strategy) {
  if (samples.size() < 2) {
    throw InsufficientData("motion pairs require at least 2 samples");
  }
  std::vector<MotionPair> pairs;
  if (strategy == PairStrategy::Consecutive) {
    pairs.reserve(samples.size() - 1);
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
      pairs.push_back({invert(samples[i].t_be) * samples[i + 1].t_be,
                       samples[i].t_co * invert(samples[i + 1].t_co)});
    }
  } else {
    pairs.reserve(samples.size() * (samples.size() - 1) / 2);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      for (std::size_t j = i + 1; j < samples.size(); ++j) {
        pairs.push_back({invert(samples[i].t_be) * samples[j].t_be,
                         samples[i].t_co * invert(samples[j].t_co)});
      }
    }
  }
  return pairs;
}

RigidTransform solve_tsai(std::span<const MotionPair> pairs, const SolverOptions& opts) {
  require_pairs(pairs.size());

  // The modified Rodrigues vector 2 sin(theta/2) n is singular at theta = pi,
  // so pairs that close to a half turn are excluded up front.
  std::vector<MotionPair> kept;
  kept.reserve(pairs.size());
  for (const MotionPair& p : pairs) {
    const double ang = std::max(axis_angle_from_rotation(p.a.rotation).angle,
                                axis_angle_from_rotation(p.b.rotation).angle);
    if (ang <= opts.near_pi_cutoff) {
      kept.push_back(p);
    }
  }
  require_pairs(kept.size());

  const auto n = static_cast<Eigen::Index>(kept.size());
  Eigen::MatrixXd a(3 * n, 3);
  Eigen::VectorXd b(3 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const AxisAngle aa = axis_angle_from_rotation(kept[i].a.rotation);
    const AxisAngle ab = axis_angle_from_rotation(kept[i].b.rotation);
    const Eigen::Vector3d pg = 2.0 * std::sin(aa.angle / 2.0) * aa.axis;
    const Eigen::Vector3d pc = 2.0 * std::sin(ab.angle / 2.0) * ab.axis;
    a.middleRows<3>(3 * i) = skew(pg + pc);
    b.segment<3>(3 * i) = pc - pg;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(2) <= 0 || sv(0) / sv(2) > opts.condition_limit) {
    throw DegenerateGeometry("rotation system is rank-deficient; motion axes likely parallel");
  }
  const Eigen::Vector3d pp = svd.solve(b);

  const Eigen::Vector3d pcg = 2.0 * pp / std::sqrt(1.0 + pp.squaredNorm());
  const double nsq = pcg.squaredNorm();
  const Eigen::Matrix3d rm = (1.0 - nsq / 2.0) * Eigen::Matrix3d::Identity() +
                             0.5 * (pcg * pcg.transpose() +
                                    std::sqrt(std::max(0.0, 4.0 - nsq)) * skew(pcg));
  const Rotation rx = Rotation::nearest(rm);
  return {rx, solve_translation(kept, rx, opts)};
}

RigidTransform solve_park(std::span<const MotionPair> pairs, const SolverOptions& opts) {
  require_pairs(pairs.size());

  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  for (const MotionPair& p : pairs) {
    m += log_rotation(p.b.rotation) * log_rotation(p.a.rotation).transpose();
  }

  const Eigen::Matrix3d mtm = m.transpose() * m;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(mtm);
  if (eig.info() != Eigen::Success) {
    throw NumericalFailure("eigendecomposition failed in rotation solve");
  }
  const Eigen::Vector3d ev = eig.eigenvalues();  // ascending
  if (ev(0) <= 0 || std::sqrt(ev(2) / ev(0)) > opts.condition_limit) {
    throw DegenerateGeometry("rotation system is rank-deficient; motion axes likely parallel");
  }
  const Eigen::Matrix3d inv_sqrt = eig.eigenvectors() *
                                   ev.cwiseSqrt().cwiseInverse().asDiagonal() *
                                   eig.eigenvectors().transpose();
  const Rotation rx = Rotation::nearest(inv_sqrt * m.transpose());
  return {rx, solve_translation(pairs, rx, opts)};
}

RigidTransform solve_horaud(std::span<const MotionPair> pairs, const SolverOptions& opts) {
  require_pairs(pairs.size());

  // q_a * q_x - q_x * q_b = (Q(q_a) - W(q_b)) q_x; accumulate the normal
  // matrix of the stacked system and take its smallest eigenvector.
  Eigen::Matrix4d b = Eigen::Matrix4d::Zero();
  for (const MotionPair& p : pairs) {
    const Eigen::Matrix4d block =
        quat_left_matrix(quaternion_from_rotation(p.a.rotation).as_quaternion()) -
        quat_right_matrix(quaternion_from_rotation(p.b.rotation).as_quaternion());
    b += block.transpose() * block;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(b);
  if (eig.info() != Eigen::Success) {
    throw NumericalFailure("eigendecomposition failed in rotation solve");
  }
  const Eigen::Vector4d ev = eig.eigenvalues();  // ascending
  // A unique solution needs a one-dimensional null space: the second-smallest
  // singular value of the stacked system must be well separated from zero.
  const double s1 = std::sqrt(std::max(0.0, ev(1)));
  const double s3 = std::sqrt(std::max(0.0, ev(3)));
  if (s1 <= 0 || s3 / s1 > opts.condition_limit) {
    throw DegenerateGeometry("rotation constraints do not isolate a unique quaternion");
  }
  const Eigen::Vector4d q = eig.eigenvectors().col(0);
  const Rotation rx = rotation_from_quaternion(
      UnitQuaternion::from_components(q(0), q(1), q(2), q(3), 1e-6));
  return {rx, solve_translation(pairs, rx, opts)};
}

RigidTransform solve_daniilidis(std::span<const MotionPair> pairs, const SolverOptions& opts) {
  require_pairs(pairs.size());

  const auto n = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(6 * n, 8);
  for (Eigen::Index i = 0; i < n; ++i) {
    const DualQuaternion qa = dual_quaternion_from_transform(pairs[i].a);
    const DualQuaternion qb = dual_quaternion_from_transform(pairs[i].b);
    const Eigen::Vector3d s1 = qa.real.vec() - qb.real.vec();
    const Eigen::Matrix3d s2 = skew(qa.real.vec() + qb.real.vec());
    const Eigen::Vector3d t1 = qa.dual.vec() - qb.dual.vec();
    const Eigen::Matrix3d t2 = skew(qa.dual.vec() + qb.dual.vec());
    t.block<3, 1>(6 * i, 0) = s1;
    t.block<3, 3>(6 * i, 1) = s2;
    t.block<3, 1>(6 * i + 3, 0) = t1;
    t.block<3, 3>(6 * i + 3, 1) = t2;
    t.block<3, 1>(6 * i + 3, 4) = s1;
    t.block<3, 3>(6 * i + 3, 5) = s2;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(t, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();  // descending
  if (sv(5) < opts.nullspace_ratio * sv(0)) {
    throw DegenerateGeometry("dual-quaternion system null space exceeds two dimensions");
  }

  // The solution lives in span of the two right singular vectors for the
  // smallest singular values: x = l1 * v7 + l2 * v8 with x = (q, q').
  const Eigen::Vector4d u1 = svd.matrixV().col(6).head<4>();
  const Eigen::Vector4d v1 = svd.matrixV().col(6).tail<4>();
  const Eigen::Vector4d u2 = svd.matrixV().col(7).head<4>();
  const Eigen::Vector4d v2 = svd.matrixV().col(7).tail<4>();

  // Unit-norm and orthogonality constraints reduce to a quadratic in
  // s = l1 / l2.
  const double a = u1.dot(v1);
  const double b = u1.dot(v2) + u2.dot(v1);
  const double c = u2.dot(v2);

  double s;
  if (std::abs(a) < 1e-15) {
    if (std::abs(b) < 1e-15) {
      throw NumericalFailure("dual-quaternion orthogonality constraint is degenerate");
    }
    s = -c / b;
  } else {
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0) {
      throw NumericalFailure("no real root in dual-quaternion constraint quadratic");
    }
    const double r1 = (-b + std::sqrt(disc)) / (2.0 * a);
    const double r2 = (-b - std::sqrt(disc)) / (2.0 * a);
    const auto norm_at = [&](double sv_) {
      return sv_ * sv_ * u1.dot(u1) + 2.0 * sv_ * u1.dot(u2) + u2.dot(u2);
    };
    s = norm_at(r1) > norm_at(r2) ? r1 : r2;
  }

  const double val = s * s * u1.dot(u1) + 2.0 * s * u1.dot(u2) + u2.dot(u2);
  if (val <= 0) {
    throw NumericalFailure("dual-quaternion unit constraint has no positive solution");
  }
  const double l2 = std::sqrt(1.0 / val);
  const double l1 = s * l2;

  const Eigen::Vector4d qv = l1 * u1 + l2 * u2;
  const Eigen::Vector4d qpv = l1 * v1 + l2 * v2;
  const Quaternion q{qv(0), qv(1), qv(2), qv(3)};
  const Quaternion qp{qpv(0), qpv(1), qpv(2), qpv(3)};

  const Rotation rx = rotation_from_quaternion(
      UnitQuaternion::from_components(q.w, q.x, q.y, q.z, 1e-6));
  const Eigen::Vector3d tx = (qp * q.conjugate()).scaled(2.0).vec();
  return {rx, tx};
}

RigidTransform solve_hand_eye(std::span<const MotionPair> pairs, HandEyeMethod method,
                              const SolverOptions& opts) {
  switch (method) {
    case HandEyeMethod::Tsai: return solve_tsai(pairs, opts);
    case HandEyeMethod::Park: return solve_park(pairs, opts);
    case HandEyeMethod::Horaud: return solve_horaud(pairs, opts);
    case HandEyeMethod::Daniilidis: return solve_daniilidis(pairs, opts);
  }
  throw InvalidInput("unknown hand-eye method");
}

RigidTransform calibrate(std::span<const CalibrationSample> samples, HandEyeMethod method,
                         PairStrategy strategy, const SolverOptions& opts) {
  if (samples.size() < 3) {
    throw InsufficientData("calibration requires at least 3 samples, got " +
                           std::to_string(samples.size()));
  }
  const std::vector<MotionPair> pairs = build_motion_pairs(samples, strategy);
  return solve_hand_eye(pairs, method, opts);
}

MotionResiduals motion_residuals(std::span<const MotionPair> pairs, const RigidTransform& x) {
  if (pairs.empty()) {
    throw InsufficientData("residuals require at least one motion pair");
  }
  MotionResiduals out;
  for (const MotionPair& p : pairs) {
    const RigidTransform lhs = p.a * x;
    const RigidTransform rhs = x * p.b;
    const double dr = rotation_angle_between(lhs.rotation, rhs.rotation);
    const double dt = (lhs.translation - rhs.translation).norm();
    out.mean_rotation += dr;
    out.mean_translation += dt;
    out.max_rotation = std::max(out.max_rotation, dr);
    out.max_translation = std::max(out.max_translation, dt);
  }
  out.mean_rotation /= static_cast<double>(pairs.size());
  out.mean_translation /= static_cast<double>(pairs.size());
  return out;
}

}  // namespace hec
