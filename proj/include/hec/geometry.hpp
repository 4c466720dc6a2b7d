#pragma once

#include <array>
#include <cmath>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "hec/errors.hpp"

namespace hec {

// Tolerance used to validate orthonormality and unit-norm invariants.
inline constexpr double kOrthonormalTol = 1e-9;

// Proper rotation (member of SO(3)).  The wrapped matrix always satisfies
// R^T R = I and det R = +1 within kOrthonormalTol; checked constructors
// enforce it, composition preserves it.
class Rotation {
public:
  Rotation() : m_(Eigen::Matrix3d::Identity()) {}

  // Validates orthonormality and det = +1; throws InvalidInput otherwise.
  static Rotation from_matrix(const Eigen::Matrix3d& m, double tol = kOrthonormalTol);

  // Nearest rotation in Frobenius norm (polar projection via SVD).  Used by
  // solvers whose intermediate algebra is exact only in infinite precision.
  static Rotation nearest(const Eigen::Matrix3d& m);

  static Rotation about_x(double angle);
  static Rotation about_y(double angle);
  static Rotation about_z(double angle);

  const Eigen::Matrix3d& matrix() const { return m_; }

  Rotation inverse() const { return Rotation(m_.transpose(), Unchecked{}); }

  Rotation operator*(const Rotation& o) const { return Rotation(m_ * o.m_, Unchecked{}); }
  Eigen::Vector3d operator*(const Eigen::Vector3d& v) const { return m_ * v; }

private:
  struct Unchecked {};
  Rotation(const Eigen::Matrix3d& m, Unchecked) : m_(m) {}

  Eigen::Matrix3d m_;
};

// Element of SE(3): rotation plus translation, acting as p' = R p + t.
struct RigidTransform {
  Rotation rotation;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  RigidTransform() = default;
  RigidTransform(const Rotation& r, const Eigen::Vector3d& t) : rotation(r), translation(t) {}

  static RigidTransform identity() { return {}; }

  // Validates the upper-left 3x3 block and the [0 0 0 1] bottom row.
  static RigidTransform from_matrix(const Eigen::Matrix4d& m, double tol = kOrthonormalTol);

  Eigen::Matrix4d matrix() const;

  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }

  RigidTransform operator*(const RigidTransform& o) const {
    return {rotation * o.rotation, rotation * o.translation + translation};
  }

  RigidTransform inverse() const {
    const Rotation rinv = rotation.inverse();
    return {rinv, -(rinv * translation)};
  }
};

inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) { return a * b; }
inline RigidTransform invert(const RigidTransform& t) { return t.inverse(); }

// General (not necessarily unit) quaternion, scalar-first storage.
struct Quaternion {
  double w = 1, x = 0, y = 0, z = 0;

  Eigen::Vector3d vec() const { return {x, y, z}; }
  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  double dot(const Quaternion& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }
  Quaternion conjugate() const { return {w, -x, -y, -z}; }
  Quaternion scaled(double s) const { return {s * w, s * x, s * y, s * z}; }

  Quaternion operator*(const Quaternion& o) const {
    return {w * o.w - x * o.x - y * o.y - z * o.z,
            w * o.x + x * o.w + y * o.z - z * o.y,
            w * o.y - x * o.z + y * o.w + z * o.x,
            w * o.z + x * o.y - y * o.x + z * o.w};
  }
};

// Unit quaternion representing a rotation.  Canonical form keeps w >= 0, so
// each rotation has exactly one representative (up to the w = 0 double cover,
// where the first nonzero vector component is made positive).
struct UnitQuaternion {
  double w = 1, x = 0, y = 0, z = 0;

  // Validates |q| = 1 within tol and canonicalizes the sign.
  static UnitQuaternion from_components(double w, double x, double y, double z,
                                        double tol = kOrthonormalTol);

  Quaternion as_quaternion() const { return {w, x, y, z}; }
  Eigen::Vector3d vec() const { return {x, y, z}; }
};

// Axis-angle rotation; axis is unit length and angle lies in [0, pi].
// The identity rotation maps to axis (1,0,0), angle 0.
struct AxisAngle {
  Eigen::Vector3d axis = Eigen::Vector3d::UnitX();
  double angle = 0;
};

// Intrinsic X-Y-Z Euler angles: R = Rx(rx) * Ry(ry) * Rz(rz).
struct EulerXYZ {
  double rx = 0, ry = 0, rz = 0;
};

// Euler extraction result.  Near ry = ±pi/2 the x and z rotations become
// coupled; the extraction then fixes rx = 0, folds everything into rz, and
// reports the degeneracy.
struct EulerDecomposition {
  EulerXYZ angles;
  bool gimbal_degenerate = false;
};

// Unit dual quaternion: real part encodes rotation, dual part translation.
// Invariants: |real| = 1 and real . dual = 0, both within kOrthonormalTol.
struct DualQuaternion {
  Quaternion real{1, 0, 0, 0};
  Quaternion dual{0, 0, 0, 0};

  static DualQuaternion from_parts(const Quaternion& real, const Quaternion& dual,
                                   double tol = kOrthonormalTol);
};

// First two columns of a rotation matrix, flattened column-major.
struct Rot6d {
  std::array<double, 6> v{1, 0, 0, 0, 1, 0};
};

// Pinhole camera model; origin of pixel coordinates is the top-left corner,
// u along +x (width), v along +y (height).
struct CameraIntrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;

  // Throws InvalidInput unless fx, fy > 0 and width, height > 0.
  void validate() const;
};

// ---- Rotation representation conversions ----------------------------------

UnitQuaternion quaternion_from_rotation(const Rotation& r);
Rotation rotation_from_quaternion(const UnitQuaternion& q);

AxisAngle axis_angle_from_rotation(const Rotation& r);
Rotation rotation_from_axis_angle(const AxisAngle& aa);
// Unrestricted axis/angle helper (any sign or magnitude of angle).
Rotation rotation_about_axis(const Eigen::Vector3d& axis, double angle);

EulerDecomposition euler_from_rotation(const Rotation& r);
Rotation rotation_from_euler(const EulerXYZ& e);

DualQuaternion dual_quaternion_from_transform(const RigidTransform& t);
RigidTransform transform_from_dual_quaternion(const DualQuaternion& dq);

Rot6d rot6d_from_rotation(const Rotation& r);
// Gram-Schmidt decode; throws DegenerateGeometry when the two columns are
// near-parallel (cross-product norm of the normalized columns < 1e-9).
Rotation rotation_from_rot6d(const Rot6d& enc);

// Rotation vector (axis * angle): the so(3) logarithm and exponential.
Eigen::Vector3d log_rotation(const Rotation& r);
Rotation exp_rotation(const Eigen::Vector3d& w);

// ---- Pinhole projection ----------------------------------------------------

// Projects a camera-frame point to pixel coordinates.
// Throws InvalidInput when p.z() <= 1e-9 (point at or behind the camera).
Eigen::Vector2d project(const CameraIntrinsics& k, const Eigen::Vector3d& p);

// Back-projects pixel coordinates at a given positive depth.
// unproject(k, project(k, p), p.z()) == p within 1e-12 for valid p.
Eigen::Vector3d unproject(const CameraIntrinsics& k, const Eigen::Vector2d& px, double depth);

// Pixel <-> normalized image coordinates in [-1, 1]^2 (full sensor span).
Eigen::Vector2d pixel_to_normalized(const CameraIntrinsics& k, const Eigen::Vector2d& px);
Eigen::Vector2d normalized_to_pixel(const CameraIntrinsics& k, const Eigen::Vector2d& uv);

// Angle of the relative rotation between two transforms' rotation parts.
double rotation_angle_between(const Rotation& a, const Rotation& b);

}  // namespace hec
