#pragma once

#include <cstdint>
#include <vector>

#include "hec/geometry.hpp"

namespace hec {

// Row-major depth image in meters; values <= 0 mark invalid pixels.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  double at(int row, int col) const { return values[static_cast<std::size_t>(row) * width + col]; }
  double& at(int row, int col) { return values[static_cast<std::size_t>(row) * width + col]; }

  // Throws InvalidInput unless dimensions are positive, the buffer matches
  // width * height, and every value is finite.
  void validate() const;
};

// Row-major binary mask; nonzero keeps the pixel.
struct SegmentationMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> values;

  std::uint8_t at(int row, int col) const {
    return values[static_cast<std::size_t>(row) * width + col];
  }

  void validate() const;
};

struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  // Either empty or one unit normal per point (within 1e-6).
  std::vector<Eigen::Vector3d> normals;

  bool has_normals() const { return !normals.empty(); }
  void validate() const;
};

// Zeroes out depth wherever the mask is zero.  Dimensions must match.
DepthMap segment_depth(const DepthMap& depth, const SegmentationMask& mask);

// Back-projects every valid pixel; pixel (col, row) unprojects at coordinates
// (col, row), scan order is row-major so output order is deterministic.
PointCloud depth_to_cloud(const DepthMap& depth, const CameraIntrinsics& k);

enum class IcpVariant { PointToPoint, PointToPlane };

struct IcpOptions {
  int max_iterations = 50;
  double tolerance = 1e-8;      // stop when the pose update is smaller than this
  double max_corr_dist = 0.02;  // meters, correspondence gate
};

struct IcpIterationStats {
  int correspondences = 0;
  double residual_pre = 0;   // RMS distance under the pose entering the iteration
  double residual_post = 0;  // RMS distance on the same pairs after the update
};

struct IcpResult {
  // Aligning pose: source ~= pose * model, i.e. pose maps model points onto
  // the source cloud.
  RigidTransform pose;
  int iterations = 0;
  double residual = 0;  // final RMS correspondence distance
  bool converged = false;
  std::vector<IcpIterationStats> trace;
};

// Iterative closest point from init, which must be within the correspondence
// gate of the optimum.  PointToPlane requires model normals.  Throws
// EmptyCorrespondence when no source point finds a model point within
// max_corr_dist.
IcpResult icp_refine(const PointCloud& source, const PointCloud& model,
                     const RigidTransform& init, IcpVariant variant = IcpVariant::PointToPoint,
                     const IcpOptions& opts = {});

}  // namespace hec
