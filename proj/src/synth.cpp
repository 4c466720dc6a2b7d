#include "hec/synth.hpp"

#include <array>
#include <cmath>

namespace hec {

namespace {

constexpr double kGoldenAngle = 2.399963229728653;  // pi * (3 - sqrt(5))

// Van der Corput radical inverse, base 2: low-discrepancy sequence in [0, 1).
double radical_inverse(std::uint32_t i) {
  i = (i << 16) | (i >> 16);
  i = ((i & 0x00ff00ffu) << 8) | ((i & 0xff00ff00u) >> 8);
  i = ((i & 0x0f0f0f0fu) << 4) | ((i & 0xf0f0f0f0u) >> 4);
  i = ((i & 0x33333333u) << 2) | ((i & 0xccccccccu) >> 2);
  i = ((i & 0x55555555u) << 1) | ((i & 0xaaaaaaaau) >> 1);
  return static_cast<double>(i) * 0x1.0p-32;
}

// Camera pose in the base frame looking at `target` from `eye`, rolled about
// the optical axis by `roll`.
RigidTransform look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, double roll) {
  const Eigen::Vector3d zc = (target - eye).normalized();
  Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
  if (std::abs(up.dot(zc)) > 0.999) {
    up = Eigen::Vector3d::UnitX();
  }
  const Eigen::Vector3d x0 = up.cross(zc).normalized();
  const Eigen::Vector3d y0 = zc.cross(x0);
  const Eigen::Vector3d xc = std::cos(roll) * x0 + std::sin(roll) * y0;
  const Eigen::Vector3d yc = zc.cross(xc);
  Eigen::Matrix3d r;
  r.col(0) = xc;
  r.col(1) = yc;
  r.col(2) = zc;
  return {Rotation::from_matrix(r, 1e-9), eye};
}

// True when the consecutive motions contain two rotation axes at least
// ~0.06 degrees apart (cross-product norm above 1e-3).
bool has_axis_diversity(const std::vector<CalibrationSample>& samples) {
  std::vector<Eigen::Vector3d> axes;
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    const RigidTransform a = invert(samples[i].t_be) * samples[i + 1].t_be;
    const AxisAngle aa = axis_angle_from_rotation(a.rotation);
    if (aa.angle > 1e-3) {
      axes.push_back(aa.axis);
    }
  }
  if (axes.size() < 2) {
    return false;
  }
  for (std::size_t i = 0; i < axes.size(); ++i) {
    for (std::size_t j = i + 1; j < axes.size(); ++j) {
      if (axes[i].cross(axes[j]).norm() > 1e-3) {
        return true;
      }
    }
  }
  return false;
}

struct Box {
  Eigen::Vector3d center;
  Eigen::Vector3d half;
};

// Gripper solid: palm, two fingers, two fingertip pads.
const std::array<Box, 5>& gripper_boxes() {
  static const std::array<Box, 5> boxes = {{
      {{0.0, 0.0, 0.02}, {0.045, 0.03, 0.02}},     // palm
      {{-0.025, 0.0, 0.065}, {0.007, 0.012, 0.025}},  // left finger
      {{0.025, 0.0, 0.065}, {0.007, 0.012, 0.025}},   // right finger
      {{-0.022, 0.0, 0.095}, {0.004, 0.008, 0.005}},  // left tip pad
      {{0.022, 0.0, 0.095}, {0.004, 0.008, 0.005}},   // right tip pad
  }};
  return boxes;
}

GripperGeometry build_gripper() {
  GripperGeometry g;

  const auto add = [&g](double x, double y, double z, bool tip) {
    Keypoint kp;
    kp.id = static_cast<int>(g.keypoints.points.size());
    kp.position = {x, y, z};
    kp.in_frame_100 = tip;
    g.keypoints.points.push_back(kp);
  };

  // Palm landmarks (14).
  for (const double x : {-0.045, 0.045}) {
    for (const double y : {-0.03, 0.03}) {
      add(x, y, 0.0, false);
      add(x, y, 0.04, false);
    }
  }
  add(-0.045, 0.0, 0.02, false);
  add(0.045, 0.0, 0.02, false);
  add(0.0, -0.03, 0.02, false);
  add(0.0, 0.03, 0.02, false);
  add(0.0, -0.03, 0.04, false);
  add(0.0, 0.03, 0.04, false);

  // Finger landmarks (12): knuckle corners, outer and inner mid-face points,
  // upper outer corners.
  for (const double x : {-0.032, 0.032}) {
    for (const double y : {-0.012, 0.012}) {
      add(x, y, 0.04, false);
    }
  }
  add(-0.032, 0.0, 0.065, false);
  add(0.032, 0.0, 0.065, false);
  add(-0.018, 0.0, 0.065, false);
  add(0.018, 0.0, 0.065, false);
  for (const double x : {-0.032, 0.032}) {
    for (const double y : {-0.012, 0.012}) {
      add(x, y, 0.09, false);
    }
  }

  // Fingertip cluster (12), tagged always-in-frame.
  for (const double sx : {-1.0, 1.0}) {
    for (const double x : {0.018, 0.026}) {
      for (const double y : {-0.008, 0.008}) {
        add(sx * x, y, 0.10, true);
      }
    }
    add(sx * 0.026, 0.0, 0.095, true);
    add(sx * 0.018, 0.0, 0.095, true);
  }

  g.keypoints.validate();

  // Surface cloud: 5000 area-weighted samples over the box faces, with
  // outward normals.  Fixed internal seed; user seeds never reach this.
  Rng rng(0x6772697065720ull);
  struct Face {
    int box;
    int axis;    // 0=x, 1=y, 2=z
    double sign; // +1 or -1 face
    double area;
  };
  std::vector<Face> faces;
  double total_area = 0;
  const auto& boxes = gripper_boxes();
  for (int b = 0; b < static_cast<int>(boxes.size()); ++b) {
    const Eigen::Vector3d& h = boxes[b].half;
    const double areas[3] = {4 * h.y() * h.z(), 4 * h.x() * h.z(), 4 * h.x() * h.y()};
    for (int axis = 0; axis < 3; ++axis) {
      for (const double sign : {-1.0, 1.0}) {
        faces.push_back({b, axis, sign, areas[axis]});
        total_area += areas[axis];
      }
    }
  }

  const int cloud_size = 5000;
  g.cloud.points.reserve(cloud_size);
  g.cloud.normals.reserve(cloud_size);
  for (int i = 0; i < cloud_size; ++i) {
    double pick = rng.uniform01() * total_area;
    std::size_t f = 0;
    while (f + 1 < faces.size() && pick > faces[f].area) {
      pick -= faces[f].area;
      ++f;
    }
    const Box& box = boxes[faces[f].box];
    Eigen::Vector3d p = box.center;
    Eigen::Vector3d n = Eigen::Vector3d::Zero();
    const int axis = faces[f].axis;
    p[axis] += faces[f].sign * box.half[axis];
    n[axis] = faces[f].sign;
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;
    p[u] += rng.uniform(-box.half[u], box.half[u]);
    p[v] += rng.uniform(-box.half[v], box.half[v]);
    g.cloud.points.push_back(p);
    g.cloud.normals.push_back(n);
  }
  return g;
}

}  // namespace

RigidTransform nominal_mount() {
  return {Rotation::about_x(30.0 * std::numbers::pi / 180.0), {0.0, 0.08, -0.05}};
}

CameraIntrinsics default_intrinsics() {
  CameraIntrinsics k;
  k.fx = 186.0;
  k.fy = 186.0;
  k.cx = 128.0;
  k.cy = 72.0;
  k.width = 256;
  k.height = 144;
  return k;
}

RigidTransform sample_extrinsic(const ScenarioConfig& cfg, Rng& rng) {
  if (cfg.extents.minCoeff() < 0 || cfg.orientation_range < 0) {
    throw InvalidInput("extrinsic sampling ranges must be non-negative");
  }
  const RigidTransform nominal = nominal_mount();
  Eigen::Vector3d t = nominal.translation;
  for (int i = 0; i < 3; ++i) {
    t[i] += rng.uniform(-cfg.extents[i], cfg.extents[i]);
  }
  EulerXYZ e;
  e.rx = rng.uniform(-cfg.orientation_range, cfg.orientation_range);
  e.ry = rng.uniform(-cfg.orientation_range, cfg.orientation_range);
  e.rz = rng.uniform(-cfg.orientation_range, cfg.orientation_range);
  return {nominal.rotation * rotation_from_euler(e), t};
}

Scenario generate_scenario(const ScenarioConfig& cfg, const RigidTransform& truth_extrinsic,
                           Rng& rng) {
  if (cfg.samples < 2) {
    throw InvalidInput("scenario requires at least 2 samples");
  }
  if (cfg.workspace_radius <= 0) {
    throw InvalidInput("workspace radius must be positive");
  }

  Scenario sc;
  sc.truth_extrinsic = truth_extrinsic;
  sc.tag_in_base = RigidTransform::identity();
  sc.seed = rng.seed();

  const RigidTransform x_inv = invert(truth_extrinsic);
  for (int attempt = 0; attempt < 100; ++attempt) {
    sc.samples.clear();
    sc.samples.reserve(cfg.samples);
    // Seeded phases make scenarios differ; the golden-angle azimuth walk and
    // bit-reversed elevations give well-spread view directions at any count.
    const double az0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double roll0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (int i = 0; i < cfg.samples; ++i) {
      const double az = az0 + i * kGoldenAngle;
      const double elev = 0.35 + (1.10 - 0.35) * radical_inverse(static_cast<std::uint32_t>(i));
      const double roll = roll0 + i * 0.9 + rng.uniform(-0.15, 0.15);
      const double radius = cfg.workspace_radius * (1.0 + 0.1 * (radical_inverse(
                                static_cast<std::uint32_t>(i + 4096)) - 0.5));
      const Eigen::Vector3d dir(std::cos(elev) * std::cos(az), std::cos(elev) * std::sin(az),
                                std::sin(elev));
      const Eigen::Vector3d eye = sc.tag_in_base.translation + radius * dir;
      const RigidTransform t_bc = look_at(eye, sc.tag_in_base.translation, roll);
      CalibrationSample s;
      s.t_be = t_bc * x_inv;
      s.t_co = invert(s.t_be * truth_extrinsic) * sc.tag_in_base;
      sc.samples.push_back(s);
    }
    if (has_axis_diversity(sc.samples)) {
      return sc;
    }
  }
  throw DegenerateGeometry("failed to sample a trajectory with diverse rotation axes");
}

RigidTransform perturb_pose(const RigidTransform& pose, double trans_mag, double rot_mag,
                            Rng& rng) {
  if (trans_mag < 0 || rot_mag < 0) {
    throw InvalidInput("perturbation magnitudes must be non-negative");
  }
  const Eigen::Vector3d dir = rng.unit_vector3();
  const Eigen::Vector3d axis = rng.unit_vector3();
  return {rotation_about_axis(axis, rot_mag) * pose.rotation,
          pose.translation + trans_mag * dir};
}

KeypointObservations render_keypoints(const KeypointModel& model,
                                      const RigidTransform& camera_pose,
                                      const CameraIntrinsics& k) {
  model.validate();
  k.validate();
  const RigidTransform w = invert(camera_pose);
  KeypointObservations out;
  out.points.reserve(model.points.size());
  for (const Keypoint& kp : model.points) {
    const Eigen::Vector3d pc = w * kp.position;
    const Eigen::Vector2d uv = pixel_to_normalized(k, project(k, pc));
    KeypointObservation o;
    o.id = kp.id;
    o.visible = std::abs(uv.x()) <= 1.0 && std::abs(uv.y()) <= 1.0;
    o.uv = clamp_to_frame(uv);
    out.points.push_back(o);
  }
  return out;
}

KeypointObservations perturb_keypoints(const KeypointObservations& obs, double px_mag,
                                       const CameraIntrinsics& k, Rng& rng) {
  if (px_mag < 0) {
    throw InvalidInput("pixel perturbation magnitude must be non-negative");
  }
  k.validate();
  KeypointObservations out = obs;
  for (KeypointObservation& o : out.points) {
    if (!o.visible) {
      continue;
    }
    const Eigen::Vector2d dir = rng.unit_vector2();
    const Eigen::Vector2d delta(dir.x() * px_mag * 2.0 / k.width,
                                dir.y() * px_mag * 2.0 / k.height);
    o.uv = clamp_to_frame(o.uv + delta);
  }
  return out;
}

const GripperGeometry& synthetic_gripper() {
  static const GripperGeometry g = build_gripper();
  return g;
}

RigidTransform noisy_oracle_estimator(const Scenario& scenario, int sample_index,
                                      const NoiseSpec& noise, Rng& rng) {
  if (sample_index < 0 || sample_index >= static_cast<int>(scenario.samples.size())) {
    throw InvalidInput("sample index out of range");
  }
  if (noise.estimator_trans_sigma < 0 || noise.estimator_rot_sigma < 0) {
    throw InvalidInput("estimator noise sigmas must be non-negative");
  }
  Eigen::Vector3d t = scenario.truth_extrinsic.translation;
  for (int i = 0; i < 3; ++i) {
    t[i] += rng.normal(0.0, noise.estimator_trans_sigma);
  }
  const Eigen::Vector3d axis = rng.unit_vector3();
  const double angle = rng.normal(0.0, noise.estimator_rot_sigma);
  return {rotation_about_axis(axis, angle) * scenario.truth_extrinsic.rotation, t};
}

}  // namespace hec
