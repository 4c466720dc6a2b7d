#include "hec/geometry.hpp"

#include <algorithm>

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

}  // namespace

Rotation Rotation::from_matrix(const Eigen::Matrix3d& m, double tol) {
  const double ortho_err = (m.transpose() * m - Eigen::Matrix3d::Identity()).norm();
  const double det_err = std::abs(m.determinant() - 1.0);
  if (ortho_err > tol || det_err > tol) {
    throw InvalidInput("rotation matrix fails orthonormality/determinant check (errors " +
                       std::to_string(ortho_err) + ", " + std::to_string(det_err) + ")");
  }
  return Rotation(m, Unchecked{});
}

Rotation Rotation::nearest(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0) {
    Eigen::Matrix3d u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  return Rotation(r, Unchecked{});
}

Rotation Rotation::about_x(double a) {
  Eigen::Matrix3d m;
  m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return Rotation(m, Unchecked{});
}

Rotation Rotation::about_y(double a) {
  Eigen::Matrix3d m;
  m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return Rotation(m, Unchecked{});
}

Rotation Rotation::about_z(double a) {
  Eigen::Matrix3d m;
  m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return Rotation(m, Unchecked{});
}

RigidTransform RigidTransform::from_matrix(const Eigen::Matrix4d& m, double tol) {
  const Eigen::RowVector4d bottom = m.row(3);
  if ((bottom - Eigen::RowVector4d(0, 0, 0, 1)).norm() > tol) {
    throw InvalidInput("homogeneous matrix bottom row is not [0 0 0 1]");
  }
  return {Rotation::from_matrix(m.topLeftCorner<3, 3>(), tol), m.topRightCorner<3, 1>()};
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation.matrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

UnitQuaternion UnitQuaternion::from_components(double w, double x, double y, double z,
                                               double tol) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (std::abs(n - 1.0) > tol) {
    throw InvalidInput("quaternion norm " + std::to_string(n) + " is not 1");
  }
  UnitQuaternion q{w / n, x / n, y / n, z / n};
  // Canonical double-cover representative: w >= 0, and for w == 0 the first
  // nonzero vector component is positive.
  bool flip = q.w < 0;
  if (q.w == 0) {
    if (q.x != 0) {
      flip = q.x < 0;
    } else if (q.y != 0) {
      flip = q.y < 0;
    } else {
      flip = q.z < 0;
    }
  }
  if (flip) {
    q.w = -q.w;
    q.x = -q.x;
    q.y = -q.y;
    q.z = -q.z;
  }
  return q;
}

UnitQuaternion quaternion_from_rotation(const Rotation& r) {
  const Eigen::Matrix3d& m = r.matrix();
  // Shepperd's method: branch on the largest of w^2, x^2, y^2, z^2 so the
  // division below is always well conditioned.
  const double tr = m.trace();
  double w, x, y, z;
  if (tr > m(0, 0) && tr > m(1, 1) && tr > m(2, 2)) {
    const double s = std::sqrt(tr + 1.0) * 2.0;
    w = 0.25 * s;
    x = (m(2, 1) - m(1, 2)) / s;
    y = (m(0, 2) - m(2, 0)) / s;
    z = (m(1, 0) - m(0, 1)) / s;
  } else if (m(0, 0) > m(1, 1) && m(0, 0) > m(2, 2)) {
    const double s = std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2)) * 2.0;
    w = (m(2, 1) - m(1, 2)) / s;
    x = 0.25 * s;
    y = (m(0, 1) + m(1, 0)) / s;
    z = (m(0, 2) + m(2, 0)) / s;
  } else if (m(1, 1) > m(2, 2)) {
    const double s = std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2)) * 2.0;
    w = (m(0, 2) - m(2, 0)) / s;
    x = (m(0, 1) + m(1, 0)) / s;
    y = 0.25 * s;
    z = (m(1, 2) + m(2, 1)) / s;
  } else {
    const double s = std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1)) * 2.0;
    w = (m(1, 0) - m(0, 1)) / s;
    x = (m(0, 2) + m(2, 0)) / s;
    y = (m(1, 2) + m(2, 1)) / s;
    z = 0.25 * s;
  }
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  return UnitQuaternion::from_components(w / n, x / n, y / n, z / n, 1e-6);
}

Rotation rotation_from_quaternion(const UnitQuaternion& q) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  Eigen::Matrix3d m;
  m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return Rotation::nearest(m);
}

AxisAngle axis_angle_from_rotation(const Rotation& r) {
  const UnitQuaternion q = quaternion_from_rotation(r);
  const Eigen::Vector3d v = q.vec();
  const double vn = v.norm();
  // atan2 is accurate for both tiny and near-pi angles; w >= 0 keeps the
  // result in [0, pi].
  const double angle = 2.0 * std::atan2(vn, q.w);
  if (vn < 1e-14) {
    return {Eigen::Vector3d::UnitX(), 0.0};
  }
  return {v / vn, angle};
}

Rotation rotation_from_axis_angle(const AxisAngle& aa) {
  const double n = aa.axis.norm();
  if (std::abs(n - 1.0) > 1e-6) {
    throw InvalidInput("axis-angle axis is not unit length");
  }
  if (aa.angle < 0 || aa.angle > std::numbers::pi + 1e-12) {
    throw InvalidInput("axis-angle angle outside [0, pi]");
  }
  const Eigen::Vector3d a = aa.axis / n;
  const double c = std::cos(aa.angle), s = std::sin(aa.angle);
  const Eigen::Matrix3d k = skew(a);
  const Eigen::Matrix3d m =
      Eigen::Matrix3d::Identity() + s * k + (1.0 - c) * (k * k);
  return Rotation::nearest(m);
}

EulerDecomposition euler_from_rotation(const Rotation& r) {
  const Eigen::Matrix3d& m = r.matrix();
  // R = Rx ry Rz gives m(0,2) = sin(ry).
  const double s = std::clamp(m(0, 2), -1.0, 1.0);
  const double ry = std::asin(s);
  EulerDecomposition out;
  if (std::numbers::pi / 2 - std::abs(ry) < 1e-7) {
    // Gimbal branch: only rx + rz (ry = +pi/2) or rz - rx (ry = -pi/2) is
    // observable.  The deterministic choice sets rx = 0 and folds the sum
    // into rz; m(1,0) and m(1,1) give that combined angle directly.
    out.gimbal_degenerate = true;
    out.angles.rx = 0.0;
    out.angles.ry = ry;
    out.angles.rz = std::atan2(m(1, 0), m(1, 1));
  } else {
    out.angles.rx = std::atan2(-m(1, 2), m(2, 2));
    out.angles.ry = ry;
    out.angles.rz = std::atan2(-m(0, 1), m(0, 0));
  }
  return out;
}

Rotation rotation_from_euler(const EulerXYZ& e) {
  return Rotation::about_x(e.rx) * Rotation::about_y(e.ry) * Rotation::about_z(e.rz);
}

DualQuaternion DualQuaternion::from_parts(const Quaternion& real, const Quaternion& dual,
                                          double tol) {
  if (std::abs(real.norm() - 1.0) > tol) {
    throw InvalidInput("dual quaternion real part is not unit length");
  }
  if (std::abs(real.dot(dual)) > tol) {
    throw InvalidInput("dual quaternion parts are not orthogonal");
  }
  DualQuaternion dq;
  dq.real = real;
  dq.dual = dual;
  return dq;
}

DualQuaternion dual_quaternion_from_transform(const RigidTransform& t) {
  const UnitQuaternion uq = quaternion_from_rotation(t.rotation);
  const Quaternion q = uq.as_quaternion();
  const Quaternion tq{0, t.translation.x(), t.translation.y(), t.translation.z()};
  const Quaternion dual = (tq * q).scaled(0.5);
  return DualQuaternion::from_parts(q, dual);
}

RigidTransform transform_from_dual_quaternion(const DualQuaternion& dq) {
  const double n = dq.real.norm();
  if (std::abs(n - 1.0) > kOrthonormalTol) {
    throw InvalidInput("dual quaternion real part is not unit length");
  }
  const UnitQuaternion uq =
      UnitQuaternion::from_components(dq.real.w, dq.real.x, dq.real.y, dq.real.z, 1e-6);
  // Rebuild the rotation from the original (possibly non-canonical) real part
  // so that translation recovery uses matching signs.
  const Quaternion tq = (dq.dual * dq.real.conjugate()).scaled(2.0);
  return {rotation_from_quaternion(uq), tq.vec()};
}

Rot6d rot6d_from_rotation(const Rotation& r) {
  const Eigen::Matrix3d& m = r.matrix();
  Rot6d out;
  out.v = {m(0, 0), m(1, 0), m(2, 0), m(0, 1), m(1, 1), m(2, 1)};
  return out;
}

Rotation rotation_from_rot6d(const Rot6d& enc) {
  const Eigen::Vector3d a1(enc.v[0], enc.v[1], enc.v[2]);
  const Eigen::Vector3d a2(enc.v[3], enc.v[4], enc.v[5]);
  const double n1 = a1.norm(), n2 = a2.norm();
  if (n1 < 1e-12 || n2 < 1e-12) {
    throw DegenerateGeometry("rot6d column with near-zero norm");
  }
  if ((a1 / n1).cross(a2 / n2).norm() < 1e-9) {
    throw DegenerateGeometry("rot6d columns are near-parallel");
  }
  const Eigen::Vector3d b1 = a1 / n1;
  const Eigen::Vector3d v2 = a2 - b1.dot(a2) * b1;
  const Eigen::Vector3d b2 = v2 / v2.norm();
  const Eigen::Vector3d b3 = b1.cross(b2);
  Eigen::Matrix3d m;
  m.col(0) = b1;
  m.col(1) = b2;
  m.col(2) = b3;
  return Rotation::from_matrix(m, 1e-6);
}

Rotation rotation_about_axis(const Eigen::Vector3d& axis, double angle) {
  const double n = axis.norm();
  if (n < 1e-12) {
    throw InvalidInput("rotation axis has near-zero norm");
  }
  return exp_rotation(axis * (angle / n));
}

Eigen::Vector3d log_rotation(const Rotation& r) {
  const AxisAngle aa = axis_angle_from_rotation(r);
  return aa.axis * aa.angle;
}

Rotation exp_rotation(const Eigen::Vector3d& w) {
  const double angle = w.norm();
  if (angle < 1e-14) {
    return Rotation();
  }
  const Eigen::Vector3d a = w / angle;
  const Eigen::Matrix3d k = skew(a);
  const Eigen::Matrix3d m = Eigen::Matrix3d::Identity() + std::sin(angle) * k +
                            (1.0 - std::cos(angle)) * (k * k);
  return Rotation::nearest(m);
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0) || !(fy > 0) || width <= 0 || height <= 0) {
    throw InvalidInput("camera intrinsics require fx, fy > 0 and positive image size");
  }
}

Eigen::Vector2d project(const CameraIntrinsics& k, const Eigen::Vector3d& p) {
  k.validate();
  if (p.z() <= 1e-9) {
    throw InvalidInput("point at or behind the camera plane");
  }
  return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

Eigen::Vector3d unproject(const CameraIntrinsics& k, const Eigen::Vector2d& px, double depth) {
  k.validate();
  if (depth <= 0) {
    throw InvalidInput("unproject requires positive depth");
  }
  return {(px.x() - k.cx) / k.fx * depth, (px.y() - k.cy) / k.fy * depth, depth};
}

Eigen::Vector2d pixel_to_normalized(const CameraIntrinsics& k, const Eigen::Vector2d& px) {
  return {2.0 * px.x() / k.width - 1.0, 2.0 * px.y() / k.height - 1.0};
}

Eigen::Vector2d normalized_to_pixel(const CameraIntrinsics& k, const Eigen::Vector2d& uv) {
  return {(uv.x() + 1.0) * 0.5 * k.width, (uv.y() + 1.0) * 0.5 * k.height};
}

double rotation_angle_between(const Rotation& a, const Rotation& b) {
  return axis_angle_from_rotation(a * b.inverse()).angle;
}

}  // namespace hec
