#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hec/fusion.hpp"
#include "hec/metrics.hpp"
#include "hec/synth.hpp"

namespace hec {

// A calibration method that produces one extrinsic estimate per image.  The
// benchmark protocols treat implementations as black boxes: name() labels
// report rows, and any hec::Error thrown by estimate() marks that estimate as
// failed without aborting the run.
class SingleImageEstimator {
public:
  virtual ~SingleImageEstimator() = default;
  virtual std::string name() const = 0;
  virtual RigidTransform estimate(const Scenario& scenario, int sample_index,
                                  Rng& rng) const = 0;
};

// Ground truth corrupted by the configured estimator noise; zero sigmas make
// it exact.  Stand-in for a learned single-image method.
class NoisyOracleEstimator final : public SingleImageEstimator {
public:
  explicit NoisyOracleEstimator(const NoiseSpec& noise, std::string name = "oracle");
  std::string name() const override { return name_; }
  RigidTransform estimate(const Scenario& scenario, int sample_index, Rng& rng) const override;

private:
  NoiseSpec noise_;
  std::string name_;
};

// The four closed-form baselines in fixed report order.
std::vector<HandEyeMethod> classical_methods();

// --- aggregated reports -------------------------------------------------

// One table row: a method's error statistics under one protocol.  Either the
// direct-error columns (simulated protocol, truth available) or the spread
// column (real protocol, truth-free) are populated; the others stay zero.
struct ProtocolRow {
  std::string method;
  double mean_et_m = 0;
  double std_et_m = 0;
  double mean_er_rad = 0;
  double std_er_rad = 0;
  double mean_eps_m = 0;  // indirect spread metric
  double std_eps_m = 0;
  int n = 0;         // estimates evaluated
  int failures = 0;  // estimates skipped on solver errors
};

struct ProtocolReport {
  std::string protocol;  // "sim" or "real"
  std::uint64_t seed = 0;
  std::vector<ProtocolRow> rows;
};

struct ClassicalSweepRow {
  double tier_trans_mm = 0;
  double tier_rot_deg = 0;
  std::string method;
  double mean_et_m = 0;
  double std_et_m = 0;
  double mean_er_rad = 0;
  double std_er_rad = 0;
  int n = 0;
  int failures = 0;
};

struct ClassicalSweepReport {
  std::uint64_t seed = 0;
  int scenarios_per_tier = 0;
  std::vector<ClassicalSweepRow> rows;  // tier-major, methods in fixed order
};

struct PnpSweepRow {
  double tier_px = 0;
  std::string config;  // "InFrame70" or "InFrame100"
  double mean_et_m = 0;
  double std_et_m = 0;
  double mean_er_rad = 0;
  double std_er_rad = 0;
  int n = 0;
  int failures = 0;
};

struct PnpSweepReport {
  std::uint64_t seed = 0;
  int poses = 0;
  std::vector<PnpSweepRow> rows;  // tier-major, InFrame70 before InFrame100
};

// --- experiment protocols -------------------------------------------------

struct SimProtocolConfig {
  int n_extrinsics = 100;
  ScenarioConfig scenario;  // trajectory geometry; scenario.samples images each
  NoiseSpec noise;          // tag-pose noise on every sample + estimator noise
  std::uint64_t seed = 0;
  int threads = 0;  // worker count; 0 = available parallelism
};

// For each of n_extrinsics ground-truth extrinsics: generate a trajectory,
// perturb the tag poses, calibrate with every classical method on the full
// sample set, run every single-image estimator on each sample independently,
// and fuse each estimator's estimates.  Rows: the four classical methods,
// then per estimator its single-image row and its "<name> (fusion)" row.
// Errors are measured against the scenario's ground truth.  Deterministic for
// a fixed (config, seed) at any thread count.
ProtocolReport run_sim_protocol(const SimProtocolConfig& cfg,
                                const std::vector<const SingleImageEstimator*>& estimators);

struct RealProtocolConfig {
  int bank = 40;      // training data bank size
  int eval = 60;      // evaluation set size
  int datasets = 40;  // datasets sampled from the bank
  int samples = 15;   // datapoints per dataset; must be <= bank
  ScenarioConfig scenario;
  NoiseSpec noise;
  std::uint64_t seed = 0;
  int threads = 0;
};

// Data bank and evaluation set sharing one ground-truth extrinsic and tag
// pose, as collected by one scripted trajectory.
struct RealProtocolData {
  Scenario bank;
  std::vector<CalibrationSample> eval;
};

// Synthetic source for the real-world protocol: one trajectory of
// bank + eval samples with tag-pose noise applied, split into the two sets.
RealProtocolData make_real_protocol_data(const RealProtocolConfig& cfg);

// Dataset index draws used by run_real_protocol: `datasets` draws of
// `samples` distinct indices into [0, bank), independent across datasets.
std::vector<std::vector<int>> sample_dataset_indices(int bank, int samples, int datasets,
                                                     std::uint64_t seed);

// Truth-free evaluation protocol: samples `datasets` datasets from the bank,
// calibrates each with every classical method, fuses each estimator's
// per-dataset estimates, and additionally runs each estimator once per bank
// image.  Every stored estimate is scored with indirect_spread_error over the
// evaluation set.  Rows: classical methods, then per estimator its per-image
// row and its "<name> (fusion)" row.
ProtocolReport run_real_protocol(const RealProtocolConfig& cfg, const RealProtocolData& data,
                                 const std::vector<const SingleImageEstimator*>& estimators);

// Convenience overload generating the data with make_real_protocol_data.
ProtocolReport run_real_protocol(const RealProtocolConfig& cfg,
                                 const std::vector<const SingleImageEstimator*>& estimators);

// --- noise sensitivity sweeps ----------------------------------------------

struct ClassicalSweepConfig {
  int tiers = 21;  // paired magnitudes: tier i = i * step on both axes
  double tier_step_mm = 0.5;
  double tier_step_deg = 0.5;
  int scenarios_per_tier = 100;
  ScenarioConfig scenario;
  std::uint64_t seed = 0;
  int threads = 0;
};

// Perturbs only the tag poses by each tier's exact translation/rotation
// magnitudes and calibrates with all four classical methods.  The same
// scenarios (extrinsics and trajectories) are reused across tiers so that
// curves differ only in the injected noise.  Solver failures are counted per
// cell, never fatal.
ClassicalSweepReport sweep_classical_noise(const ClassicalSweepConfig& cfg);

struct PnpSweepConfig {
  int tiers = 10;  // tier i = i * tier_step_px of keypoint noise
  double tier_step_px = 1.0;
  int poses = 200;
  ScenarioConfig scenario;  // extrinsic sampling ranges
  double rim_margin = 0.01;
  std::uint64_t seed = 0;
  int threads = 0;
};

// Renders exact gripper keypoints from sampled camera poses, displaces them
// by each tier's exact pixel magnitude, rim-filters, and solves PnP + RANSAC;
// errors are measured against the sampled pose.  Runs both keypoint configs:
// the full model (InFrame70) and the always-in-frame subset (InFrame100).
// The RANSAC inlier gate widens with the tier so that consensus reflects the
// injected noise level rather than the fixed default.
PnpSweepReport sweep_pnp_noise(const PnpSweepConfig& cfg);

}  // namespace hec
