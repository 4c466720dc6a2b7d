#include "hec/pnp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace hec {

namespace {

struct Correspondence {
  int id;
  Eigen::Vector3d p;    // model frame
  Eigen::Vector2d px;   // pixel coordinates
};

std::vector<Correspondence> match(const KeypointModel& model, const KeypointObservations& obs,
                                  const CameraIntrinsics& k) {
  std::unordered_map<int, Eigen::Vector3d> by_id;
  for (const Keypoint& kp : model.points) {
    by_id.emplace(kp.id, kp.position);
  }
  std::vector<Correspondence> out;
  out.reserve(obs.points.size());
  for (const KeypointObservation& o : obs.points) {
    if (!o.visible) {
      continue;
    }
    const auto it = by_id.find(o.id);
    if (it == by_id.end()) {
      continue;
    }
    out.push_back({o.id, it->second, normalized_to_pixel(k, o.uv)});
  }
  return out;
}

// Singular values of the centered point scatter, descending.
Eigen::Vector3d scatter_spectrum(const std::vector<Correspondence>& c) {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& x : c) mean += x.p;
  mean /= static_cast<double>(c.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& x : c) {
    const Eigen::Vector3d d = x.p - mean;
    cov += d * d.transpose();
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov);
  return svd.singularValues().cwiseSqrt();
}

void check_not_collinear(const std::vector<Correspondence>& c) {
  const Eigen::Vector3d s = scatter_spectrum(c);
  if (s(0) <= 0 || s(1) < 1e-9 * s(0)) {
    throw DegenerateGeometry("correspondences are collinear");
  }
}

// Linear pose initialization: direct linear transform on calibrated rays,
// followed by orthonormalization of the rotation block.  Returns the
// camera-from-model transform W (camera coordinates = W * model point).
RigidTransform dlt_pose(const std::vector<Correspondence>& corr, const CameraIntrinsics& k) {
  const auto n = static_cast<Eigen::Index>(corr.size());

  // Normalize the 3D points for conditioning.
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& c : corr) centroid += c.p;
  centroid /= static_cast<double>(n);
  double mean_norm = 0;
  for (const auto& c : corr) mean_norm += (c.p - centroid).norm();
  mean_norm /= static_cast<double>(n);
  const double scale = mean_norm > 1e-12 ? std::sqrt(3.0) / mean_norm : 1.0;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 12);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d pn = scale * (corr[i].p - centroid);
    const double x = (corr[i].px.x() - k.cx) / k.fx;
    const double y = (corr[i].px.y() - k.cy) / k.fy;
    const Eigen::RowVector4d ph(pn.x(), pn.y(), pn.z(), 1.0);
    a.block<1, 4>(2 * i, 0) = ph;
    a.block<1, 4>(2 * i, 8) = -x * ph;
    a.block<1, 4>(2 * i + 1, 4) = ph;
    a.block<1, 4>(2 * i + 1, 8) = -y * ph;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(10) < 1e-12 * sv(0)) {
    throw DegenerateGeometry("projection system is rank-deficient");
  }
  const Eigen::VectorXd v = svd.matrixV().col(11);
  Eigen::Matrix<double, 3, 4> p;
  p.row(0) = v.segment<4>(0).transpose();
  p.row(1) = v.segment<4>(4).transpose();
  p.row(2) = v.segment<4>(8).transpose();

  // Undo the 3D normalization: model point q maps through pn = scale*(q - c).
  Eigen::Matrix<double, 3, 4> pd;
  pd.leftCols<3>() = p.leftCols<3>() * scale;
  pd.col(3) = p.col(3) - p.leftCols<3>() * (scale * centroid);

  // Majority of depths must be positive.
  int pos = 0;
  for (const auto& c : corr) {
    const double w = pd.row(2).head<3>().dot(c.p) + pd(2, 3);
    pos += w > 0 ? 1 : -1;
  }
  if (pos < 0) {
    pd = -pd;
  }

  const Eigen::Matrix3d m = pd.leftCols<3>();
  Eigen::JacobiSVD<Eigen::Matrix3d> msvd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double sigma = msvd.singularValues().mean();
  if (sigma < 1e-12) {
    throw DegenerateGeometry("projection system is rank-deficient");
  }
  const Rotation r = Rotation::nearest(m);
  return {r, pd.col(3) / sigma};
}

struct Residuals {
  double cost = std::numeric_limits<double>::infinity();  // sum of squared px errors
  bool valid = false;
};

Residuals evaluate(const std::vector<Correspondence>& corr, const CameraIntrinsics& k,
                   const RigidTransform& w) {
  Residuals out;
  double cost = 0;
  for (const auto& c : corr) {
    const Eigen::Vector3d pc = w * c.p;
    if (pc.z() <= 1e-9) {
      return out;  // behind the camera: reject this pose
    }
    const Eigen::Vector2d px(k.fx * pc.x() / pc.z() + k.cx, k.fy * pc.y() / pc.z() + k.cy);
    cost += (px - c.px).squaredNorm();
  }
  out.cost = cost;
  out.valid = true;
  return out;
}

struct RefineOutcome {
  RigidTransform w;
  bool converged = false;
  int iterations = 0;
};

// Damped Gauss-Newton on pixel reprojection error with a left-multiplied
// se(3) increment.
RefineOutcome refine(const std::vector<Correspondence>& corr, const CameraIntrinsics& k,
                     RigidTransform w, const PnpOptions& opts) {
  RefineOutcome out;
  Residuals cur = evaluate(corr, k, w);
  if (!cur.valid) {
    throw NumericalFailure("initial pose places points behind the camera");
  }
  RigidTransform best = w;
  double best_cost = cur.cost;
  double lambda = 1e-6;

  const auto n = static_cast<Eigen::Index>(corr.size());
  Eigen::MatrixXd jac(2 * n, 6);
  Eigen::VectorXd res(2 * n);

  int it = 0;
  while (it < opts.max_iterations) {
    ++it;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Vector3d pc = w * corr[i].p;
      const double z = pc.z();
      const Eigen::Vector2d px(k.fx * pc.x() / z + k.cx, k.fy * pc.y() / z + k.cy);
      res.segment<2>(2 * i) = px - corr[i].px;
      Eigen::Matrix<double, 2, 3> dpdc;
      dpdc << k.fx / z, 0, -k.fx * pc.x() / (z * z),
          0, k.fy / z, -k.fy * pc.y() / (z * z);
      Eigen::Matrix3d neg_skew;
      neg_skew << 0, pc.z(), -pc.y(),
          -pc.z(), 0, pc.x(),
          pc.y(), -pc.x(), 0;
      jac.block<2, 3>(2 * i, 0) = dpdc * neg_skew;
      jac.block<2, 3>(2 * i, 3) = dpdc;
    }

    const Eigen::Matrix<double, 6, 6> h = jac.transpose() * jac;
    const Eigen::Matrix<double, 6, 1> g = jac.transpose() * res;
    const Eigen::Matrix<double, 6, 1> delta =
        (h + lambda * Eigen::Matrix<double, 6, 6>::Identity()).ldlt().solve(-g);

    const RigidTransform trial =
        RigidTransform(exp_rotation(delta.head<3>()), delta.tail<3>()) * w;
    const Residuals trial_res = evaluate(corr, k, trial);
    if (trial_res.valid && trial_res.cost <= cur.cost) {
      w = trial;
      cur = trial_res;
      lambda = std::max(lambda / 3.0, 1e-12);
      if (cur.cost < best_cost) {
        best_cost = cur.cost;
        best = w;
      }
      if (delta.norm() < opts.step_tolerance) {
        out.converged = true;
        break;
      }
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) {
        break;  // damping saturated; keep the best iterate
      }
    }
  }
  out.w = best;
  out.iterations = it;
  return out;
}

double mean_reprojection(const std::vector<Correspondence>& corr, const CameraIntrinsics& k,
                         const RigidTransform& w) {
  double sum = 0;
  for (const auto& c : corr) {
    const Eigen::Vector3d pc = w * c.p;
    if (pc.z() <= 1e-9) {
      return std::numeric_limits<double>::infinity();
    }
    const Eigen::Vector2d px(k.fx * pc.x() / pc.z() + k.cx, k.fy * pc.y() / pc.z() + k.cy);
    sum += (px - c.px).norm();
  }
  return sum / static_cast<double>(corr.size());
}

PnpResult solve_on(const std::vector<Correspondence>& corr, const CameraIntrinsics& k,
                   const std::optional<RigidTransform>& prior, const PnpOptions& opts) {
  if (corr.size() < 4) {
    throw InsufficientData("pose solve requires at least 4 usable correspondences, got " +
                           std::to_string(corr.size()));
  }
  // Collinearity is reported ahead of the count check: more points on the
  // same line would not help.
  check_not_collinear(corr);
  if (!prior && corr.size() < 6) {
    throw InsufficientData("pose initialization requires at least 6 correspondences, got " +
                           std::to_string(corr.size()));
  }

  RigidTransform w0;
  if (prior) {
    w0 = invert(*prior);
  } else {
    w0 = dlt_pose(corr, k);
  }
  const RefineOutcome r = refine(corr, k, w0, opts);

  PnpResult out;
  out.pose = invert(r.w);
  out.converged = r.converged;
  out.iterations = r.iterations;
  out.mean_reprojection_px = mean_reprojection(corr, k, r.w);
  return out;
}

}  // namespace

void KeypointModel::validate() const {
  std::unordered_set<int> seen;
  for (const Keypoint& kp : points) {
    if (!seen.insert(kp.id).second) {
      throw InvalidInput("duplicate keypoint id " + std::to_string(kp.id));
    }
  }
}

KeypointModel KeypointModel::subset(KeypointSubset s) const {
  if (s == KeypointSubset::InFrame70) {
    return *this;
  }
  KeypointModel out;
  for (const Keypoint& kp : points) {
    if (kp.in_frame_100) {
      out.points.push_back(kp);
    }
  }
  return out;
}

void KeypointObservations::validate() const {
  for (const KeypointObservation& o : points) {
    if (std::abs(o.uv.x()) > 1.0 || std::abs(o.uv.y()) > 1.0 || !o.uv.allFinite()) {
      throw InvalidInput("keypoint observation outside [-1,1] frame");
    }
  }
}

Eigen::Vector2d clamp_to_frame(const Eigen::Vector2d& uv) {
  return {std::clamp(uv.x(), -1.0, 1.0), std::clamp(uv.y(), -1.0, 1.0)};
}

KeypointObservations rim_filter(const KeypointObservations& obs, double margin) {
  if (margin <= 0 || margin >= 0.5) {
    throw InvalidInput("rim margin must lie in (0, 0.5)");
  }
  obs.validate();
  const double threshold = 1.0 - 2.0 * margin;
  KeypointObservations out;
  out.points.reserve(obs.points.size());
  for (const KeypointObservation& o : obs.points) {
    // Closed boundary: a point exactly at the threshold is removed.
    if (std::abs(o.uv.x()) >= threshold || std::abs(o.uv.y()) >= threshold) {
      continue;
    }
    out.points.push_back(o);
  }
  return out;
}

PnpResult solve_pnp(const KeypointModel& model, const KeypointObservations& obs,
                    const CameraIntrinsics& k, const std::optional<RigidTransform>& prior,
                    const PnpOptions& opts) {
  model.validate();
  obs.validate();
  k.validate();
  return solve_on(match(model, obs, k), k, prior, opts);
}

RansacResult solve_pnp_ransac(const KeypointModel& model, const KeypointObservations& obs,
                              const CameraIntrinsics& k, const RansacOptions& opts, Rng& rng) {
  model.validate();
  obs.validate();
  k.validate();
  if (opts.iterations < 1 || opts.inlier_threshold_px <= 0 || opts.min_inliers < 4) {
    throw InvalidInput("invalid consensus options");
  }
  const std::vector<Correspondence> corr = match(model, obs, k);
  const int n = static_cast<int>(corr.size());
  const int needed = std::max(6, opts.min_inliers);
  if (n < needed) {
    throw InsufficientData("consensus requires at least " + std::to_string(needed) +
                           " usable correspondences, got " + std::to_string(n));
  }

  std::vector<int> best_inliers;
  double best_mean = std::numeric_limits<double>::infinity();
  RigidTransform best_w;
  const double thr = opts.inlier_threshold_px;

  // Hypotheses get a short local polish: the raw linear solve is unreliable
  // on shallow point sets, and a few damped steps on the minimal set rescue
  // most near-miss initializations.
  PnpOptions polish;
  polish.max_iterations = 15;

  std::vector<Correspondence> minimal(6);
  std::vector<int> inliers;
  for (int it = 0; it < opts.iterations; ++it) {
    const std::vector<int> pick = rng.sample_without_replacement(n, 6);
    for (int j = 0; j < 6; ++j) {
      minimal[j] = corr[pick[j]];
    }
    RigidTransform w;
    try {
      check_not_collinear(minimal);
      w = refine(minimal, k, dlt_pose(minimal, k), polish).w;
    } catch (const Error&) {
      continue;  // degenerate minimal sample
    }

    inliers.clear();
    double err_sum = 0;
    for (int i = 0; i < n; ++i) {
      const Eigen::Vector3d pc = w * corr[i].p;
      if (pc.z() <= 1e-9) {
        continue;
      }
      const Eigen::Vector2d px(k.fx * pc.x() / pc.z() + k.cx, k.fy * pc.y() / pc.z() + k.cy);
      const double err = (px - corr[i].px).norm();
      if (err <= thr) {
        inliers.push_back(i);
        err_sum += err;
      }
    }
    if (inliers.empty()) {
      continue;
    }
    const double mean_err = err_sum / static_cast<double>(inliers.size());
    if (inliers.size() > best_inliers.size() ||
        (inliers.size() == best_inliers.size() && mean_err < best_mean)) {
      best_inliers = inliers;
      best_mean = mean_err;
      best_w = w;
      // Early exit once the inlier ratio makes further samples pointless
      // (0.999 confidence of having seen one all-inlier minimal set).
      const double ratio = static_cast<double>(inliers.size()) / n;
      const double p_good = std::pow(ratio, 6);
      if (p_good >= 1.0 - 1e-12) {
        break;
      }
      const double trials = std::log(0.001) / std::log(1.0 - p_good);
      if (static_cast<double>(it + 1) >= trials) {
        break;
      }
    }
  }

  if (static_cast<int>(best_inliers.size()) < opts.min_inliers) {
    throw NoConsensus("best hypothesis has " + std::to_string(best_inliers.size()) +
                      " inliers, need " + std::to_string(opts.min_inliers));
  }

  std::vector<Correspondence> in_corr;
  in_corr.reserve(best_inliers.size());
  for (const int i : best_inliers) {
    in_corr.push_back(corr[i]);
  }
  RansacResult out;
  out.fit = solve_on(in_corr, k, invert(best_w), opts.refine);
  for (const int i : best_inliers) {
    out.inlier_ids.push_back(corr[i].id);
  }
  std::sort(out.inlier_ids.begin(), out.inlier_ids.end());
  return out;
}

}  // namespace hec
