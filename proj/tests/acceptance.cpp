// Acceptance gate: eight end-to-end checks over the whole toolkit, each with
// pinned tolerances and a fixed seed.  Prints exactly one PASS/FAIL line per
// criterion and exits with the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "hec/bench.hpp"
#include "hec/fusion.hpp"
#include "hec/geometry.hpp"
#include "hec/handeye.hpp"
#include "hec/icp.hpp"
#include "hec/io.hpp"
#include "hec/metrics.hpp"
#include "hec/rng.hpp"
#include "hec/synth.hpp"

using namespace hec;

namespace {

constexpr std::uint64_t kSeed = 2026;
constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& on_fail) {
    if (!cond && ok) {
      ok = false;
      detail = on_fail;
    }
  }
  void note(const std::string& text) {
    if (ok) detail = text;
  }
};

std::string fmt(const char* pattern, double a, double b = 0, double c = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

// --- 1. exact-data recovery --------------------------------------------------
// All four solvers on 100 seeded exact scenarios (15 samples each):
// e_t < 1e-8 m and e_R < 1e-8 rad, in under 10 seconds.
Outcome exact_recovery() {
  Outcome out;
  const Rng root(kSeed);
  ScenarioConfig cfg;
  cfg.samples = 15;
  double worst_t = 0, worst_r = 0;
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 100; ++i) {
    Rng rng = root.stream(1, 0, static_cast<std::uint64_t>(i));
    const RigidTransform truth = sample_extrinsic(cfg, rng);
    const Scenario scn = generate_scenario(cfg, truth, rng);
    for (const HandEyeMethod m : classical_methods()) {
      const RigidTransform x = calibrate(scn.samples, m);
      const PoseError e = pose_error(x, truth);
      worst_t = std::max(worst_t, e.e_t);
      worst_r = std::max(worst_r, e.e_r);
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.require(worst_t < 1e-8, fmt("worst e_t %.3g m exceeds 1e-8", worst_t));
  out.require(worst_r < 1e-8, fmt("worst e_R %.3g rad exceeds 1e-8", worst_r));
  out.require(secs < 10.0, fmt("took %.1f s, limit 10 s", secs));
  out.note(fmt("worst e_t %.2g m, e_R %.2g rad over 400 solves", worst_t, worst_r));
  return out;
}

// --- 2. classical noise sweep shape -------------------------------------------
// 21 paired tiers x 100 scenarios, single-threaded, under 5 minutes:
// tier 0 exact, per-method curves non-decreasing with at most one violated
// adjacent pair, and tier (10 mm, 10 deg) at least 10x tier (0.5 mm, 0.5 deg).
Outcome classical_sweep_shape() {
  Outcome out;
  ClassicalSweepConfig cfg;  // 21 tiers, 0.5 mm / 0.5 deg steps, 100 scenarios
  cfg.seed = kSeed;
  cfg.threads = 1;
  const auto start = std::chrono::steady_clock::now();
  const ClassicalSweepReport rep = sweep_classical_noise(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const int methods = 4;
  std::vector<std::vector<double>> curve(methods);  // [method][tier] mean e_t
  for (std::size_t r = 0; r < rep.rows.size(); ++r) {
    curve[r % methods].push_back(rep.rows[r].mean_et_m);
  }
  int worst_violations = 0;
  double min_ratio = 1e300;
  for (int m = 0; m < methods; ++m) {
    const std::vector<double>& c = curve[m];
    out.require(c.size() == 21, "row grid is not 21 tiers x 4 methods");
    if (!out.ok) return out;
    out.require(c[0] < 1e-8, fmt("tier-0 mean e_t %.3g exceeds 1e-8 (%s)", c[0],
                                 static_cast<double>(m)));
    int violations = 0;
    for (int t = 0; t + 1 < 21; ++t) {
      if (c[t + 1] < c[t]) ++violations;
    }
    worst_violations = std::max(worst_violations, violations);
    min_ratio = std::min(min_ratio, c[20] / c[1]);
  }
  out.require(worst_violations <= 1,
              fmt("%+.0f adjacent-tier decreases in one curve (allowed 1)",
                  static_cast<double>(worst_violations)));
  out.require(min_ratio >= 10.0, fmt("tier20/tier1 ratio %.2f below 10", min_ratio));
  out.require(secs < 300.0, fmt("took %.1f s single-threaded, limit 300 s", secs));
  out.note(fmt("monotone curves, worst decreases %g, min tier20/tier1 %.1f",
               static_cast<double>(worst_violations), min_ratio));
  return out;
}

// --- 3. pixel-noise sweep shape ------------------------------------------------
// 10 tiers x 200 poses, under 2 minutes: exact at tier 0, the always-in-frame
// fingertip config strictly worse than the full model at every tier >= 2 px,
// and the full model's mean e_t crossing 1 cm somewhere in [2, 9] px.
Outcome pnp_sweep_shape() {
  Outcome out;
  PnpSweepConfig cfg;  // 10 tiers, 1 px step, 200 poses
  cfg.seed = kSeed;
  cfg.threads = 1;
  const auto start = std::chrono::steady_clock::now();
  const PnpSweepReport rep = sweep_pnp_noise(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::vector<double> full, tips;  // mean e_t per tier: InFrame70, InFrame100
  for (const PnpSweepRow& r : rep.rows) {
    (r.config == "InFrame70" ? full : tips).push_back(r.mean_et_m);
  }
  out.require(full.size() == 10 && tips.size() == 10, "row grid is not 10 tiers x 2 configs");
  if (!out.ok) return out;

  out.require(full[0] < 1e-6 && tips[0] < 1e-6,
              fmt("tier-0 mean e_t %.3g / %.3g exceeds 1e-6", full[0], tips[0]));
  for (int t = 2; t < 10; ++t) {
    out.require(tips[t] > full[t],
                fmt("fingertip config not above full model at tier %g px",
                    static_cast<double>(t)));
  }
  int crossing = -1;
  for (int t = 0; t < 10; ++t) {
    if (full[t] >= 0.01) {
      crossing = t;
      break;
    }
  }
  out.require(crossing >= 2 && crossing <= 9,
              fmt("full-model 1 cm crossing at tier %g px, outside [2, 9]",
                  static_cast<double>(crossing)));
  out.require(secs < 120.0, fmt("took %.1f s, limit 120 s", secs));
  out.note(fmt("1 cm crossing at %g px, %.0f s", static_cast<double>(crossing), secs));
  return out;
}

// --- 4. fusion invariants -------------------------------------------------------
// Bit-exact permutation invariance over 20 shuffles, exact idempotence on
// all-equal input, exact outlier rejection on the 12+3 fixture, and a
// Monte-Carlo check that fusing 15 noisy estimates beats their individual mean.
Outcome fusion_invariants() {
  Outcome out;
  Rng rng(kSeed);
  RigidTransform truth = nominal_mount();
  truth.translation += 0.01 * rng.unit_vector3();

  EstimateBatch batch;
  for (int i = 0; i < 15; ++i) {
    batch.estimates.push_back(perturb_pose(truth, 0.004 * rng.uniform01(), 0.02 * rng.uniform01(), rng));
  }
  const RigidTransform base = fuse_estimates(batch);
  for (int round = 0; round < 20; ++round) {
    EstimateBatch shuffled = batch;
    for (std::size_t i = shuffled.estimates.size(); i > 1; --i) {
      std::swap(shuffled.estimates[i - 1], shuffled.estimates[rng.uniform_index(i)]);
    }
    const RigidTransform f = fuse_estimates(shuffled);
    out.require((f.matrix().array() == base.matrix().array()).all(),
                "permutation changed the fused result bitwise");
  }

  EstimateBatch equal;
  equal.estimates.assign(15, truth);
  const RigidTransform same = fuse_estimates(equal);
  out.require((same.matrix().array() == truth.matrix().array()).all(),
              "all-equal input not reproduced exactly");

  EstimateBatch mixed;
  mixed.estimates.assign(12, truth);
  for (int i = 0; i < 3; ++i) {
    RigidTransform outlier = truth;
    outlier.translation += 0.5 * rng.unit_vector3();
    mixed.estimates.push_back(outlier);
  }
  const RigidTransform cleaned = fuse_estimates(mixed);
  const PoseError ce = pose_error(cleaned, truth);
  out.require(ce.e_t < 1e-9 && ce.e_r < 1e-9,
              fmt("12+3 outlier fixture missed truth: e_t %.3g, e_R %.3g", ce.e_t, ce.e_r));

  // 100 batches of 15 estimates with 5 mm Gaussian translation noise.
  double singles_sum = 0, fused_sum = 0;
  int singles_n = 0;
  for (int b = 0; b < 100; ++b) {
    Rng brng = Rng(kSeed).stream(4, 0, static_cast<std::uint64_t>(b));
    RigidTransform target = nominal_mount();
    target.translation += 0.02 * brng.unit_vector3();
    EstimateBatch mc;
    for (int i = 0; i < 15; ++i) {
      RigidTransform est = target;
      est.translation += 0.005 * Eigen::Vector3d(brng.normal(), brng.normal(), brng.normal());
      mc.estimates.push_back(est);
      singles_sum += position_error(est, target);
      ++singles_n;
    }
    fused_sum += position_error(fuse_estimates(mc), target);
  }
  const double singles_mean = singles_sum / singles_n;
  const double fused_mean = fused_sum / 100.0;
  out.require(fused_mean < singles_mean,
              fmt("fused mean e_t %.3g not below individual mean %.3g", fused_mean, singles_mean));
  out.note(fmt("fused mean e_t %.2g vs individual %.2g m", fused_mean, singles_mean));
  return out;
}

PointCloud transformed_cloud(const PointCloud& cloud, const RigidTransform& t) {
  PointCloud out;
  out.points.reserve(cloud.points.size());
  for (const Eigen::Vector3d& p : cloud.points) out.points.push_back(t * p);
  for (const Eigen::Vector3d& n : cloud.normals) out.normals.push_back(t.rotation * n);
  return out;
}

PointCloud every_nth(const PointCloud& cloud, int n) {
  PointCloud out;
  for (std::size_t i = 0; i < cloud.points.size(); i += n) {
    out.points.push_back(cloud.points[i]);
    if (cloud.has_normals()) out.normals.push_back(cloud.normals[i]);
  }
  return out;
}

RigidTransform small_pose(Rng& rng) {
  return {rotation_about_axis(rng.unit_vector3(), 0.3 * rng.uniform01()),
          Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()) * 0.05};
}

// --- 5. icp convergence -----------------------------------------------------------
// Exact alignment is a fixed point (residual < 1e-9 in <= 1 iteration); a
// 5 mm / 5 deg initialization error is recovered within 1e-4 m / 1e-4 rad in
// at least 95 of 100 seeded trials; the per-iteration residual never rises.
Outcome icp_convergence() {
  Outcome out;
  const PointCloud& model = synthetic_gripper().cloud;
  Rng rng0(91);
  const RigidTransform t0 = small_pose(rng0);
  const IcpResult fixed_point = icp_refine(transformed_cloud(model, t0), model, t0);
  out.require(fixed_point.iterations <= 1 && fixed_point.residual < 1e-9,
              fmt("exact start: %g iterations, residual %.3g",
                  static_cast<double>(fixed_point.iterations), fixed_point.residual));

  const PointCloud sub = every_nth(model, 4);
  Rng rng(93);
  const double five_deg = 5.0 * kPi / 180.0;
  int recovered = 0;
  for (int i = 0; i < 100; ++i) {
    const RigidTransform t = small_pose(rng);
    const PointCloud source = transformed_cloud(sub, t);
    const RigidTransform init = perturb_pose(t, 0.005, five_deg, rng);
    const IcpResult res = icp_refine(source, sub, init);
    if (position_error(res.pose, t) < 1e-4 && rotation_error(res.pose, t) < 1e-4) ++recovered;
  }
  out.require(recovered >= 95,
              fmt("only %g/100 trials recovered the pose", static_cast<double>(recovered)));

  Rng rng2(95);
  const RigidTransform t2 = small_pose(rng2);
  const RigidTransform init2 = perturb_pose(t2, 0.008, 0.12, rng2);
  const IcpResult traced = icp_refine(transformed_cloud(sub, t2), sub, init2);
  for (const IcpIterationStats& it : traced.trace) {
    out.require(it.residual_post <= it.residual_pre + 1e-15,
                fmt("residual rose within an iteration: %.3g -> %.3g", it.residual_pre,
                    it.residual_post));
  }
  for (std::size_t i = 1; i < traced.trace.size(); ++i) {
    out.require(traced.trace[i].residual_post <= traced.trace[i - 1].residual_post + 1e-12,
                "residual rose across iterations");
  }
  out.note(fmt("%g/100 perturbed starts recovered", static_cast<double>(recovered)));
  return out;
}

// --- 6. error metric fixtures -------------------------------------------------------
// Zero spread on an exact extrinsic over an exact 60-sample evaluation set
// (within float round-off), and hand-computed translation/rotation fixtures.
Outcome metric_fixtures() {
  Outcome out;
  Rng rng = Rng(kSeed).stream(6);
  ScenarioConfig cfg;
  cfg.samples = 60;
  const RigidTransform truth = sample_extrinsic(cfg, rng);
  const Scenario scn = generate_scenario(cfg, truth, rng);
  const double eps = indirect_spread_error(scn.truth_extrinsic, scn.samples);
  out.require(eps < 1e-12, fmt("spread %.3g on exact data exceeds 1e-12", eps));

  RigidTransform est = truth;
  est.translation += Eigen::Vector3d(3.0, 4.0, 0.0);  // 3-4-5 triangle
  out.require(std::abs(position_error(est, truth) - 5.0) < 1e-12,
              "3-4-5 translation fixture off by more than 1e-12");

  RigidTransform rot = truth;
  const double ten_deg = 10.0 * kPi / 180.0;
  rot.rotation = truth.rotation * rotation_about_axis(Eigen::Vector3d(1, 2, 2).normalized(), ten_deg);
  out.require(std::abs(rotation_error(rot, truth) - ten_deg) < 1e-12,
              "10-degree rotation fixture off by more than 1e-12");
  out.note(fmt("exact-data spread %.2g m", eps));
  return out;
}

// --- 7. protocol fidelity and determinism ----------------------------------------------
// Evaluation counts match the protocols exactly (100 x 15 single-image
// estimates; 40 datasets of 15 draws; a 60-item evaluation set), a zero-sigma
// oracle reports bitwise-zero errors, and reports are byte-identical across
// thread counts for a fixed seed.
Outcome protocol_fidelity() {
  Outcome out;

  SimProtocolConfig sim;  // 100 extrinsics x 15 samples
  sim.seed = kSeed;
  sim.threads = 1;
  const NoisyOracleEstimator oracle{NoiseSpec{}};
  const std::vector<const SingleImageEstimator*> est{&oracle};
  const ProtocolReport rep1 = run_sim_protocol(sim, est);
  sim.threads = 4;
  const ProtocolReport rep4 = run_sim_protocol(sim, est);
  out.require(protocol_report_to_json(rep1).dump() == protocol_report_to_json(rep4).dump(),
              "sim report differs between 1 and 4 threads");

  out.require(rep1.rows.size() == 6, "sim report does not have 6 rows");
  if (!out.ok) return out;
  for (int m = 0; m < 4; ++m) {
    out.require(rep1.rows[m].n == 100, "classical row is not 100 datasets");
  }
  const ProtocolRow& single = rep1.rows[4];
  const ProtocolRow& fused = rep1.rows[5];
  out.require(single.n == 1500 && single.failures == 0,
              fmt("oracle single-image count %g != 1500", static_cast<double>(single.n)));
  out.require(fused.n == 100, fmt("fused count %g != 100", static_cast<double>(fused.n)));
  out.require(single.mean_et_m == 0.0 && single.std_et_m == 0.0 && single.mean_er_rad == 0.0 &&
                  single.std_er_rad == 0.0 && fused.mean_et_m == 0.0 && fused.mean_er_rad == 0.0,
              "zero-sigma oracle errors are not bitwise zero");

  RealProtocolConfig real;  // bank 40, eval 60, 40 datasets x 15 draws
  real.seed = kSeed;
  real.threads = 1;
  const RealProtocolData data = make_real_protocol_data(real);
  out.require(data.bank.samples.size() == 40 && data.eval.size() == 60,
              "real-protocol bank/eval sizes are not 40/60");
  const auto draws = sample_dataset_indices(real.bank, real.samples, real.datasets, real.seed);
  out.require(draws.size() == 40, "not 40 dataset draws");
  for (const std::vector<int>& d : draws) {
    out.require(d.size() == 15, "a dataset draw is not 15 indices");
    std::vector<bool> seen(40, false);
    for (int idx : d) {
      out.require(idx >= 0 && idx < 40 && !seen[idx], "dataset draw repeats or out of range");
      if (idx >= 0 && idx < 40) seen[idx] = true;
    }
  }
  const ProtocolReport rr1 = run_real_protocol(real, data, est);
  real.threads = 4;
  const ProtocolReport rr4 = run_real_protocol(real, data, est);
  out.require(protocol_report_to_json(rr1).dump() == protocol_report_to_json(rr4).dump(),
              "real report differs between 1 and 4 threads");
  out.require(rr1.rows.size() == 6, "real report does not have 6 rows");
  if (!out.ok) return out;
  for (int m = 0; m < 4; ++m) {
    out.require(rr1.rows[m].n == 40, "classical row is not 40 datasets");
  }
  out.require(rr1.rows[4].n == 40, "per-image oracle row is not 40 estimates");
  out.require(rr1.rows[5].n == 40, "fused oracle row is not 40 datasets");
  out.require(rr1.rows[4].mean_eps_m < 1e-12,
              fmt("zero-sigma oracle spread %.3g on exact data", rr1.rows[4].mean_eps_m));
  out.note("counts 1500/100/40x15/60 exact, reports thread-invariant");
  return out;
}

// --- 8. rotation codec round-trips ----------------------------------------------------
// 10k round-trips per representation stay within 1e-9, and decoding 10k random
// 6-vectors always yields a proper rotation.
Outcome rotation_codecs() {
  Outcome out;
  Rng rng = Rng(kSeed).stream(8);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const Rotation r = rotation_about_axis(rng.unit_vector3(), rng.uniform(0.0, kPi));

    worst = std::max(worst, rotation_angle_between(r, rotation_from_quaternion(quaternion_from_rotation(r))));
    worst = std::max(worst, rotation_angle_between(r, rotation_from_axis_angle(axis_angle_from_rotation(r))));
    worst = std::max(worst, rotation_angle_between(r, rotation_from_rot6d(rot6d_from_rotation(r))));

    EulerXYZ e;
    e.rx = rng.uniform(-kPi, kPi);
    e.ry = rng.uniform(-1.4, 1.4);  // clear of the ry = pi/2 coupling
    e.rz = rng.uniform(-kPi, kPi);
    const Rotation re = rotation_from_euler(e);
    const EulerDecomposition dec = euler_from_rotation(re);
    out.require(!dec.gimbal_degenerate, "gimbal degeneracy reported away from ry = pi/2");
    worst = std::max(worst, rotation_angle_between(re, rotation_from_euler(dec.angles)));

    const RigidTransform t{r, 0.5 * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal())};
    const RigidTransform back = transform_from_dual_quaternion(dual_quaternion_from_transform(t));
    worst = std::max(worst, rotation_angle_between(t.rotation, back.rotation));
    worst = std::max(worst, (t.translation - back.translation).norm());
  }
  out.require(worst < 1e-9, fmt("worst round-trip error %.3g exceeds 1e-9", worst));

  double worst_orth = 0;
  for (int i = 0; i < 10000; ++i) {
    Rot6d enc;
    for (double& v : enc.v) v = rng.normal();
    const Eigen::Matrix3d m = rotation_from_rot6d(enc).matrix();
    worst_orth = std::max(worst_orth,
                          (m.transpose() * m - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff());
    worst_orth = std::max(worst_orth, std::abs(m.determinant() - 1.0));
  }
  out.require(worst_orth < 1e-9, fmt("decoded 6-vector rotation off by %.3g", worst_orth));
  out.note(fmt("worst round-trip %.2g, worst decode orthonormality %.2g", worst, worst_orth));
  return out;
}

struct Criterion {
  const char* label;
  Outcome (*fn)();
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {"exact-data recovery", exact_recovery},
      {"classical noise sweep shape", classical_sweep_shape},
      {"pixel-noise sweep shape", pnp_sweep_shape},
      {"fusion invariants", fusion_invariants},
      {"icp convergence", icp_convergence},
      {"error metric fixtures", metric_fixtures},
      {"protocol fidelity and determinism", protocol_fidelity},
      {"rotation codec round-trips", rotation_codecs},
  };
  int failures = 0;
  int index = 0;
  for (const Criterion& c : criteria) {
    ++index;
    const auto start = std::chrono::steady_clock::now();
    const Outcome out = c.fn();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %d/8 %s (%.1f s)%s%s\n", out.ok ? "PASS" : "FAIL", index, c.label, secs,
                out.detail.empty() ? "" : ": ", out.detail.c_str());
    std::fflush(stdout);
    if (!out.ok) ++failures;
  }
  return failures;
}
