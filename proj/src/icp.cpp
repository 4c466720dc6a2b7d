#include "hec/icp.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace hec {

namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0, -v.z(), v.y(),
      v.z(), 0, -v.x(),
      -v.y(), v.x(), 0;
  return s;
}

// Uniform voxel hash over the model cloud.  Cell edge equals the
// correspondence gate, so the 27-cell neighborhood of a query covers every
// point within the gate.
class VoxelGrid {
 public:
  VoxelGrid(const std::vector<Eigen::Vector3d>& points, double cell)
      : points_(points), cell_(cell) {
    cells_.reserve(points.size());
    for (int i = 0; i < static_cast<int>(points.size()); ++i) {
      cells_[key_of(points[i])].push_back(i);
    }
  }

  // Index of the nearest model point within max_dist, or -1.  Ties resolve
  // to the point visited first in the fixed cell scan order.
  int nearest(const Eigen::Vector3d& q, double max_dist) const {
    const std::int64_t ix = coord(q.x());
    const std::int64_t iy = coord(q.y());
    const std::int64_t iz = coord(q.z());
    int best = -1;
    double best_d2 = max_dist * max_dist;
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          const auto it = cells_.find(pack(ix + dx, iy + dy, iz + dz));
          if (it == cells_.end()) {
            continue;
          }
          for (const int i : it->second) {
            const double d2 = (points_[i] - q).squaredNorm();
            if (d2 < best_d2 || (d2 == best_d2 && best >= 0 && i < best)) {
              best_d2 = d2;
              best = i;
            }
          }
        }
      }
    }
    return best;
  }

 private:
  std::int64_t coord(double x) const { return static_cast<std::int64_t>(std::floor(x / cell_)); }

  static std::int64_t pack(std::int64_t x, std::int64_t y, std::int64_t z) {
    // 21 bits per axis, biased; collision-free for |index| < 2^20.
    const std::int64_t bias = std::int64_t{1} << 20;
    return ((x + bias) << 42) | ((y + bias) << 21) | (z + bias);
  }

  std::int64_t key_of(const Eigen::Vector3d& p) const {
    return pack(coord(p.x()), coord(p.y()), coord(p.z()));
  }

  const std::vector<Eigen::Vector3d>& points_;
  double cell_;
  std::unordered_map<std::int64_t, std::vector<int>> cells_;
};

struct Pairing {
  std::vector<int> src;
  std::vector<int> mdl;
  double rms = 0;
};

Pairing correspond(const PointCloud& source, const VoxelGrid& grid, const RigidTransform& q,
                   double gate, const PointCloud& model) {
  Pairing out;
  double sum_sq = 0;
  for (int i = 0; i < static_cast<int>(source.points.size()); ++i) {
    const Eigen::Vector3d mapped = q * source.points[i];
    const int j = grid.nearest(mapped, gate);
    if (j < 0) {
      continue;
    }
    out.src.push_back(i);
    out.mdl.push_back(j);
    sum_sq += (mapped - model.points[j]).squaredNorm();
  }
  if (!out.src.empty()) {
    out.rms = std::sqrt(sum_sq / static_cast<double>(out.src.size()));
  }
  return out;
}

double rms_under(const PointCloud& source, const PointCloud& model, const Pairing& pairs,
                 const RigidTransform& q) {
  double sum_sq = 0;
  for (std::size_t i = 0; i < pairs.src.size(); ++i) {
    sum_sq += (q * source.points[pairs.src[i]] - model.points[pairs.mdl[i]]).squaredNorm();
  }
  return std::sqrt(sum_sq / static_cast<double>(pairs.src.size()));
}

// Least-squares rigid alignment of paired points (Kabsch).  Returns the
// transform q with q*src ~= mdl.
RigidTransform fit_point_to_point(const PointCloud& source, const PointCloud& model,
                                  const Pairing& pairs) {
  const auto n = static_cast<double>(pairs.src.size());
  Eigen::Vector3d cs = Eigen::Vector3d::Zero();
  Eigen::Vector3d cm = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < pairs.src.size(); ++i) {
    cs += source.points[pairs.src[i]];
    cm += model.points[pairs.mdl[i]];
  }
  cs /= n;
  cm /= n;
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < pairs.src.size(); ++i) {
    h += (source.points[pairs.src[i]] - cs) * (model.points[pairs.mdl[i]] - cm).transpose();
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d r = svd.matrixV() * svd.matrixU().transpose();
  if (r.determinant() < 0) {
    Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
    flip(2, 2) = -1;
    r = svd.matrixV() * flip * svd.matrixU().transpose();
  }
  const Rotation rot = Rotation::nearest(r);
  return {rot, cm - rot.matrix() * cs};
}

// One linearized point-to-plane step: minimizes sum over pairs of
// (n . (exp(w)^ (q*s) + u - m))^2 in the increment (w, u).
RigidTransform fit_point_to_plane(const PointCloud& source, const PointCloud& model,
                                  const Pairing& pairs, const RigidTransform& q) {
  Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
  for (std::size_t i = 0; i < pairs.src.size(); ++i) {
    const Eigen::Vector3d s = q * source.points[pairs.src[i]];
    const Eigen::Vector3d& m = model.points[pairs.mdl[i]];
    const Eigen::Vector3d& nrm = model.normals[pairs.mdl[i]];
    Eigen::Matrix<double, 6, 1> j;
    j.head<3>() = s.cross(nrm);
    j.tail<3>() = nrm;
    const double r = nrm.dot(s - m);
    h += j * j.transpose();
    g += j * r;
  }
  const Eigen::Matrix<double, 6, 1> delta =
      (h + 1e-12 * Eigen::Matrix<double, 6, 6>::Identity()).ldlt().solve(-g);
  if (!delta.allFinite()) {
    throw NumericalFailure("alignment step did not solve");
  }
  return RigidTransform(exp_rotation(delta.head<3>()), delta.tail<3>()) * q;
}

}  // namespace

void DepthMap::validate() const {
  if (width <= 0 || height <= 0) {
    throw InvalidInput("depth map dimensions must be positive");
  }
  if (values.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw InvalidInput("depth buffer size does not match dimensions");
  }
  for (const double v : values) {
    if (!std::isfinite(v)) {
      throw InvalidInput("depth values must be finite");
    }
  }
}

void SegmentationMask::validate() const {
  if (width <= 0 || height <= 0) {
    throw InvalidInput("mask dimensions must be positive");
  }
  if (values.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw InvalidInput("mask buffer size does not match dimensions");
  }
}

void PointCloud::validate() const {
  if (!normals.empty() && normals.size() != points.size()) {
    throw InvalidInput("normals must be empty or one per point");
  }
  for (const Eigen::Vector3d& p : points) {
    if (!p.allFinite()) {
      throw InvalidInput("cloud points must be finite");
    }
  }
  for (const Eigen::Vector3d& n : normals) {
    if (std::abs(n.norm() - 1.0) > 1e-6) {
      throw InvalidInput("cloud normals must be unit length");
    }
  }
}

DepthMap segment_depth(const DepthMap& depth, const SegmentationMask& mask) {
  depth.validate();
  mask.validate();
  if (depth.width != mask.width || depth.height != mask.height) {
    throw InvalidInput("depth and mask dimensions differ");
  }
  DepthMap out = depth;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    if (mask.values[i] == 0) {
      out.values[i] = 0;
    }
  }
  return out;
}

PointCloud depth_to_cloud(const DepthMap& depth, const CameraIntrinsics& k) {
  depth.validate();
  k.validate();
  if (depth.width != k.width || depth.height != k.height) {
    throw InvalidInput("depth map dimensions do not match the intrinsics");
  }
  PointCloud out;
  for (int r = 0; r < depth.height; ++r) {
    for (int c = 0; c < depth.width; ++c) {
      const double d = depth.at(r, c);
      if (d <= 0) {
        continue;
      }
      out.points.push_back(unproject(k, Eigen::Vector2d(c, r), d));
    }
  }
  return out;
}

IcpResult icp_refine(const PointCloud& source, const PointCloud& model,
                     const RigidTransform& init, IcpVariant variant, const IcpOptions& opts) {
  source.validate();
  model.validate();
  if (source.points.empty() || model.points.empty()) {
    throw InvalidInput("alignment requires non-empty clouds");
  }
  if (variant == IcpVariant::PointToPlane && !model.has_normals()) {
    throw InvalidInput("point-to-plane alignment requires model normals");
  }
  if (opts.max_corr_dist <= 0 || opts.max_iterations < 1 || opts.tolerance < 0) {
    throw InvalidInput("invalid alignment options");
  }

  const VoxelGrid grid(model.points, opts.max_corr_dist);
  // Internal state maps source into the model frame; the returned pose is
  // its inverse (model point = invert(pose) * source point).
  RigidTransform q = invert(init);

  IcpResult out;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    const Pairing pairs = correspond(source, grid, q, opts.max_corr_dist, model);
    if (pairs.src.empty()) {
      throw EmptyCorrespondence("no correspondences within the gate");
    }

    RigidTransform next;
    if (variant == IcpVariant::PointToPoint) {
      next = fit_point_to_point(source, model, pairs);
    } else {
      next = fit_point_to_plane(source, model, pairs, q);
    }

    const RigidTransform step = next * invert(q);
    const double step_size =
        rotation_angle_between(step.rotation, Rotation()) + step.translation.norm();

    IcpIterationStats stats;
    stats.correspondences = static_cast<int>(pairs.src.size());
    stats.residual_pre = pairs.rms;
    stats.residual_post = rms_under(source, model, pairs, next);
    out.trace.push_back(stats);

    q = next;
    out.iterations = it;
    out.residual = stats.residual_post;
    if (step_size < opts.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.pose = invert(q);
  return out;
}

}  // namespace hec
