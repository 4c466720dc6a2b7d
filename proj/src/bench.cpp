#include "hec/bench.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <thread>

#include "hec/errors.hpp"
#include "hec/pnp.hpp"

namespace hec {
namespace {

// RNG stream purposes.  Combined with a stage/tier key and a unit index, so
// no two logical draw sequences ever share a stream; workers touch only their
// own streams, which makes results independent of the thread count.
constexpr std::uint64_t kStreamScenario = 1;    // extrinsic + trajectory
constexpr std::uint64_t kStreamTagNoise = 2;    // tag pose perturbation
constexpr std::uint64_t kStreamEstimator = 3;   // single-image estimator draws
constexpr std::uint64_t kStreamSampling = 4;    // dataset index draws
constexpr std::uint64_t kStreamPixelNoise = 5;  // keypoint perturbation
constexpr std::uint64_t kStreamRansac = 6;

Rng derive(std::uint64_t seed, std::uint64_t purpose, std::uint64_t a, std::uint64_t b) {
  return Rng(seed).stream(purpose, a, b);
}

// Runs fn(i) for i in [0, n).  fn must confine writes to its own index's
// slots and must not throw.
void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    threads = hw ? static_cast<int>(hw) : 1;
  }
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < n;) fn(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

struct Stats {
  double mean = 0;
  double std = 0;
};

// Mean and sample standard deviation, summed in the order given (callers pass
// values in unit-index order so the result is reproducible bit for bit).
Stats summarize(const std::vector<double>& xs) {
  Stats s;
  if (xs.empty()) return s;
  double sum = 0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

void check_noise(const NoiseSpec& n) {
  if (n.tag_trans_mag < 0 || n.tag_rot_mag < 0 || n.keypoint_px_mag < 0 ||
      n.estimator_trans_sigma < 0 || n.estimator_rot_sigma < 0)
    throw InvalidInput("noise magnitudes must be non-negative");
}

void apply_tag_noise(std::vector<CalibrationSample>& samples, const NoiseSpec& noise, Rng& rng) {
  for (CalibrationSample& s : samples)
    s.t_co = perturb_pose(s.t_co, noise.tag_trans_mag, noise.tag_rot_mag, rng);
}

ProtocolRow direct_row(std::string name, const std::vector<PoseError>& errors, int failures) {
  ProtocolRow row;
  row.method = std::move(name);
  std::vector<double> et, er;
  et.reserve(errors.size());
  er.reserve(errors.size());
  for (const PoseError& e : errors) {
    et.push_back(e.e_t);
    er.push_back(e.e_r);
  }
  const Stats st = summarize(et);
  const Stats sr = summarize(er);
  row.mean_et_m = st.mean;
  row.std_et_m = st.std;
  row.mean_er_rad = sr.mean;
  row.std_er_rad = sr.std;
  row.n = static_cast<int>(errors.size());
  row.failures = failures;
  return row;
}

ProtocolRow spread_row(std::string name, const std::vector<double>& eps, int failures) {
  ProtocolRow row;
  row.method = std::move(name);
  const Stats s = summarize(eps);
  row.mean_eps_m = s.mean;
  row.std_eps_m = s.std;
  row.n = static_cast<int>(eps.size());
  row.failures = failures;
  return row;
}

// Collects an optional-per-unit column into ordered values + failure count.
template <typename T, typename F>
std::pair<std::vector<T>, int> collect(int n, const F& get) {
  std::vector<T> values;
  values.reserve(n);
  int failures = 0;
  for (int i = 0; i < n; ++i) {
    if (const std::optional<T>& v = get(i)) {
      values.push_back(*v);
    } else {
      ++failures;
    }
  }
  return {std::move(values), failures};
}

}  // namespace

NoisyOracleEstimator::NoisyOracleEstimator(const NoiseSpec& noise, std::string name)
    : noise_(noise), name_(std::move(name)) {}

RigidTransform NoisyOracleEstimator::estimate(const Scenario& scenario, int sample_index,
                                              Rng& rng) const {
  return noisy_oracle_estimator(scenario, sample_index, noise_, rng);
}

std::vector<HandEyeMethod> classical_methods() {
  return {HandEyeMethod::Tsai, HandEyeMethod::Park, HandEyeMethod::Horaud,
          HandEyeMethod::Daniilidis};
}

ProtocolReport run_sim_protocol(const SimProtocolConfig& cfg,
                                const std::vector<const SingleImageEstimator*>& estimators) {
  if (cfg.n_extrinsics < 1) throw InvalidInput("n_extrinsics must be >= 1");
  if (cfg.scenario.samples < 2) throw InvalidInput("scenario.samples must be >= 2");
  check_noise(cfg.noise);

  const std::vector<HandEyeMethod> methods = classical_methods();
  const int n = cfg.n_extrinsics;
  const int samples = cfg.scenario.samples;
  const int ne = static_cast<int>(estimators.size());

  struct Outcome {
    std::array<std::optional<PoseError>, 4> classical;
    // [estimator][sample] single-image errors; one fused error per estimator.
    std::vector<std::vector<std::optional<PoseError>>> singles;
    std::vector<std::optional<PoseError>> fused;
  };
  std::vector<Outcome> outcomes(n);

  parallel_for(n, cfg.threads, [&](int i) {
    Outcome& out = outcomes[i];
    out.singles.assign(ne, std::vector<std::optional<PoseError>>(samples));
    out.fused.assign(ne, std::nullopt);
    try {
      Rng grng = derive(cfg.seed, kStreamScenario, 0, i);
      const RigidTransform truth = sample_extrinsic(cfg.scenario, grng);
      Scenario scn = generate_scenario(cfg.scenario, truth, grng);
      Rng nrng = derive(cfg.seed, kStreamTagNoise, 0, i);
      apply_tag_noise(scn.samples, cfg.noise, nrng);

      for (std::size_t m = 0; m < methods.size(); ++m) {
        try {
          out.classical[m] = pose_error(calibrate(scn.samples, methods[m]), truth);
        } catch (const Error&) {
        }
      }

      Rng erng = derive(cfg.seed, kStreamEstimator, 0, i);
      for (int e = 0; e < ne; ++e) {
        EstimateBatch batch;
        for (int idx = 0; idx < samples; ++idx) {
          try {
            const RigidTransform w = estimators[e]->estimate(scn, idx, erng);
            out.singles[e][idx] = pose_error(w, truth);
            batch.estimates.push_back(w);
          } catch (const Error&) {
          }
        }
        try {
          out.fused[e] = pose_error(fuse_estimates(batch), truth);
        } catch (const Error&) {
        }
      }
    } catch (const Error&) {
      // Scenario-level breakdown: every cell for this index stays failed.
    }
  });

  ProtocolReport report;
  report.protocol = "sim";
  report.seed = cfg.seed;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    auto [values, failures] = collect<PoseError>(
        n, [&](int i) -> const std::optional<PoseError>& { return outcomes[i].classical[m]; });
    report.rows.push_back(direct_row(method_name(methods[m]), values, failures));
  }
  for (int e = 0; e < ne; ++e) {
    std::vector<PoseError> values;
    values.reserve(static_cast<std::size_t>(n) * samples);
    int failures = 0;
    for (int i = 0; i < n; ++i) {
      for (int idx = 0; idx < samples; ++idx) {
        if (const auto& v = outcomes[i].singles[e][idx]) {
          values.push_back(*v);
        } else {
          ++failures;
        }
      }
    }
    report.rows.push_back(direct_row(estimators[e]->name(), values, failures));
    auto [fvalues, ffailures] = collect<PoseError>(
        n, [&](int i) -> const std::optional<PoseError>& { return outcomes[i].fused[e]; });
    report.rows.push_back(direct_row(estimators[e]->name() + " (fusion)", fvalues, ffailures));
  }
  return report;
}

RealProtocolData make_real_protocol_data(const RealProtocolConfig& cfg) {
  if (cfg.bank < 1 || cfg.eval < 1) throw InvalidInput("bank and eval sizes must be >= 1");
  if (cfg.samples < 1 || cfg.samples > cfg.bank)
    throw InvalidInput("samples per dataset must lie in [1, bank]");
  check_noise(cfg.noise);

  ScenarioConfig scfg = cfg.scenario;
  scfg.samples = cfg.bank + cfg.eval;
  Rng grng = derive(cfg.seed, kStreamScenario, 0, 0);
  const RigidTransform truth = sample_extrinsic(scfg, grng);
  Scenario full = generate_scenario(scfg, truth, grng);
  Rng nrng = derive(cfg.seed, kStreamTagNoise, 0, 0);
  apply_tag_noise(full.samples, cfg.noise, nrng);

  RealProtocolData data;
  data.bank = full;
  data.bank.samples.assign(full.samples.begin(), full.samples.begin() + cfg.bank);
  data.eval.assign(full.samples.begin() + cfg.bank, full.samples.end());
  return data;
}

std::vector<std::vector<int>> sample_dataset_indices(int bank, int samples, int datasets,
                                                     std::uint64_t seed) {
  if (samples < 1 || samples > bank) throw InvalidInput("samples per dataset must lie in [1, bank]");
  if (datasets < 1) throw InvalidInput("datasets must be >= 1");
  std::vector<std::vector<int>> out(datasets);
  for (int d = 0; d < datasets; ++d) {
    Rng rng = derive(seed, kStreamSampling, 0, d);
    out[d] = rng.sample_without_replacement(bank, samples);
  }
  return out;
}

ProtocolReport run_real_protocol(const RealProtocolConfig& cfg, const RealProtocolData& data,
                                 const std::vector<const SingleImageEstimator*>& estimators) {
  const int bank_n = static_cast<int>(data.bank.samples.size());
  if (bank_n < cfg.samples) throw InsufficientData("data bank smaller than a dataset");
  if (data.eval.empty()) throw InsufficientData("empty evaluation set");
  if (cfg.datasets < 1) throw InvalidInput("datasets must be >= 1");

  const std::vector<HandEyeMethod> methods = classical_methods();
  const int nd = cfg.datasets;
  const int ne = static_cast<int>(estimators.size());
  const std::vector<std::vector<int>> indices =
      sample_dataset_indices(bank_n, cfg.samples, nd, cfg.seed);
  const std::span<const CalibrationSample> eval(data.eval);

  // Stage 1: per-dataset estimates (classical calibrations + fused estimators).
  struct DatasetOutcome {
    std::array<std::optional<double>, 4> classical;  // spread metric per method
    std::vector<std::optional<double>> fused;
  };
  std::vector<DatasetOutcome> per_dataset(nd);
  parallel_for(nd, cfg.threads, [&](int d) {
    DatasetOutcome& out = per_dataset[d];
    out.fused.assign(ne, std::nullopt);
    std::vector<CalibrationSample> ds;
    ds.reserve(indices[d].size());
    for (int idx : indices[d]) ds.push_back(data.bank.samples[idx]);

    for (std::size_t m = 0; m < methods.size(); ++m) {
      try {
        out.classical[m] = indirect_spread_error(calibrate(ds, methods[m]), eval);
      } catch (const Error&) {
      }
    }
    Rng erng = derive(cfg.seed, kStreamEstimator, 1, d);
    for (int e = 0; e < ne; ++e) {
      EstimateBatch batch;
      for (int idx : indices[d]) {
        try {
          batch.estimates.push_back(estimators[e]->estimate(data.bank, idx, erng));
        } catch (const Error&) {
        }
      }
      try {
        out.fused[e] = indirect_spread_error(fuse_estimates(batch), eval);
      } catch (const Error&) {
      }
    }
  });

  // Stage 2: per-image estimates over the whole bank.
  std::vector<std::vector<std::optional<double>>> per_image(
      bank_n, std::vector<std::optional<double>>(ne));
  parallel_for(bank_n, cfg.threads, [&](int i) {
    Rng erng = derive(cfg.seed, kStreamEstimator, 2, i);
    for (int e = 0; e < ne; ++e) {
      try {
        per_image[i][e] =
            indirect_spread_error(estimators[e]->estimate(data.bank, i, erng), eval);
      } catch (const Error&) {
      }
    }
  });

  ProtocolReport report;
  report.protocol = "real";
  report.seed = cfg.seed;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    auto [values, failures] = collect<double>(
        nd, [&](int d) -> const std::optional<double>& { return per_dataset[d].classical[m]; });
    report.rows.push_back(spread_row(method_name(methods[m]), values, failures));
  }
  for (int e = 0; e < ne; ++e) {
    auto [ivalues, ifailures] = collect<double>(
        bank_n, [&](int i) -> const std::optional<double>& { return per_image[i][e]; });
    report.rows.push_back(spread_row(estimators[e]->name(), ivalues, ifailures));
    auto [fvalues, ffailures] = collect<double>(
        nd, [&](int d) -> const std::optional<double>& { return per_dataset[d].fused[e]; });
    report.rows.push_back(spread_row(estimators[e]->name() + " (fusion)", fvalues, ffailures));
  }
  return report;
}

ProtocolReport run_real_protocol(const RealProtocolConfig& cfg,
                                 const std::vector<const SingleImageEstimator*>& estimators) {
  return run_real_protocol(cfg, make_real_protocol_data(cfg), estimators);
}

ClassicalSweepReport sweep_classical_noise(const ClassicalSweepConfig& cfg) {
  if (cfg.tiers < 1) throw InvalidInput("tiers must be >= 1");
  if (cfg.scenarios_per_tier < 1) throw InvalidInput("scenarios_per_tier must be >= 1");
  if (cfg.tier_step_mm < 0 || cfg.tier_step_deg < 0)
    throw InvalidInput("tier steps must be non-negative");
  if (cfg.scenario.samples < 2) throw InvalidInput("scenario.samples must be >= 2");

  const std::vector<HandEyeMethod> methods = classical_methods();
  const int per_tier = cfg.scenarios_per_tier;
  const int units = cfg.tiers * per_tier;
  std::vector<std::array<std::optional<PoseError>, 4>> results(units);

  parallel_for(units, cfg.threads, [&](int u) {
    const int tier = u / per_tier;
    const int j = u % per_tier;
    try {
      // Scenario j keeps its extrinsic, trajectory, and noise directions at
      // every tier; only the noise magnitude changes.  Reusing the draws
      // across tiers (common random numbers) makes adjacent tiers differ by
      // the injected magnitude alone instead of by sampling luck.
      Rng grng = derive(cfg.seed, kStreamScenario, 0, j);
      const RigidTransform truth = sample_extrinsic(cfg.scenario, grng);
      Scenario scn = generate_scenario(cfg.scenario, truth, grng);
      NoiseSpec noise;
      noise.tag_trans_mag = tier * cfg.tier_step_mm / 1000.0;
      noise.tag_rot_mag = tier * cfg.tier_step_deg * std::numbers::pi / 180.0;
      Rng nrng = derive(cfg.seed, kStreamTagNoise, 0, j);
      apply_tag_noise(scn.samples, noise, nrng);
      for (std::size_t m = 0; m < methods.size(); ++m) {
        try {
          results[u][m] = pose_error(calibrate(scn.samples, methods[m]), truth);
        } catch (const Error&) {
        }
      }
    } catch (const Error&) {
    }
  });

  ClassicalSweepReport report;
  report.seed = cfg.seed;
  report.scenarios_per_tier = per_tier;
  for (int tier = 0; tier < cfg.tiers; ++tier) {
    for (std::size_t m = 0; m < methods.size(); ++m) {
      std::vector<double> et, er;
      int failures = 0;
      for (int j = 0; j < per_tier; ++j) {
        if (const auto& v = results[tier * per_tier + j][m]) {
          et.push_back(v->e_t);
          er.push_back(v->e_r);
        } else {
          ++failures;
        }
      }
      ClassicalSweepRow row;
      row.tier_trans_mm = tier * cfg.tier_step_mm;
      row.tier_rot_deg = tier * cfg.tier_step_deg;
      row.method = method_name(methods[m]);
      const Stats st = summarize(et);
      const Stats sr = summarize(er);
      row.mean_et_m = st.mean;
      row.std_et_m = st.std;
      row.mean_er_rad = sr.mean;
      row.std_er_rad = sr.std;
      row.n = static_cast<int>(et.size());
      row.failures = failures;
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

PnpSweepReport sweep_pnp_noise(const PnpSweepConfig& cfg) {
  if (cfg.tiers < 1) throw InvalidInput("tiers must be >= 1");
  if (cfg.poses < 1) throw InvalidInput("poses must be >= 1");
  if (cfg.tier_step_px < 0) throw InvalidInput("tier_step_px must be non-negative");
  if (!(cfg.rim_margin > 0.0) || !(cfg.rim_margin < 0.5))
    throw InvalidInput("rim_margin must lie in (0, 0.5)");

  const GripperGeometry& gripper = synthetic_gripper();
  const std::array<KeypointModel, 2> models = {
      gripper.keypoints.subset(KeypointSubset::InFrame70),
      gripper.keypoints.subset(KeypointSubset::InFrame100)};
  const std::array<const char*, 2> config_names = {"InFrame70", "InFrame100"};
  const CameraIntrinsics k = default_intrinsics();

  const int units = cfg.tiers * cfg.poses;
  std::vector<std::array<std::optional<PoseError>, 2>> results(units);

  parallel_for(units, cfg.threads, [&](int u) {
    const int tier = u / cfg.poses;
    const int p = u % cfg.poses;
    // Poses are shared across tiers and configs; only the pixel noise varies.
    Rng prng = derive(cfg.seed, kStreamScenario, 0, p);
    const RigidTransform pose = sample_extrinsic(cfg.scenario, prng);
    const double sigma_px = tier * cfg.tier_step_px;
    for (int c = 0; c < 2; ++c) {
      const std::uint64_t cell = static_cast<std::uint64_t>(tier) * 2 + c;
      Rng nrng = derive(cfg.seed, kStreamPixelNoise, cell, p);
      Rng rrng = derive(cfg.seed, kStreamRansac, cell, p);
      try {
        const KeypointObservations obs = rim_filter(
            perturb_keypoints(render_keypoints(models[c], pose, k), sigma_px, k, nrng),
            cfg.rim_margin);
        RansacOptions opts;
        // Widen the gate with the injected noise so the verifier measures
        // geometry, not the noise floor: a fixed 2 px gate stops forming a
        // consensus once the typical displacement exceeds it.
        opts.inlier_threshold_px = 2.0 + 0.5 * sigma_px;
        const RansacResult r = solve_pnp_ransac(models[c], obs, k, opts, rrng);
        results[u][c] = pose_error(r.fit.pose, pose);
      } catch (const Error&) {
      }
    }
  });

  PnpSweepReport report;
  report.seed = cfg.seed;
  report.poses = cfg.poses;
  for (int tier = 0; tier < cfg.tiers; ++tier) {
    for (int c = 0; c < 2; ++c) {
      std::vector<double> et, er;
      int failures = 0;
      for (int p = 0; p < cfg.poses; ++p) {
        if (const auto& v = results[tier * cfg.poses + p][c]) {
          et.push_back(v->e_t);
          er.push_back(v->e_r);
        } else {
          ++failures;
        }
      }
      PnpSweepRow row;
      row.tier_px = tier * cfg.tier_step_px;
      row.config = config_names[c];
      const Stats st = summarize(et);
      const Stats sr = summarize(er);
      row.mean_et_m = st.mean;
      row.std_et_m = st.std;
      row.mean_er_rad = sr.mean;
      row.std_er_rad = sr.std;
      row.n = static_cast<int>(et.size());
      row.failures = failures;
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

}  // namespace hec
