#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <numbers>

#include "hec/bench.hpp"
#include "hec/io.hpp"

using namespace hec;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Returns truth for most samples but fails on every fifth index.
class FlakyEstimator final : public SingleImageEstimator {
public:
  std::string name() const override { return "flaky"; }
  RigidTransform estimate(const Scenario& scenario, int sample_index, Rng&) const override {
    if (sample_index % 5 == 0) throw NumericalFailure("synthetic outage");
    return scenario.truth_extrinsic;
  }
};

std::string report_bytes(const ProtocolReport& r) { return protocol_report_to_json(r).dump(); }

}  // namespace

TEST_CASE("simulated protocol: exact data gives exact rows with pinned counts") {
  SimProtocolConfig cfg;
  cfg.n_extrinsics = 6;
  cfg.scenario.samples = 15;
  cfg.seed = 5;
  cfg.threads = 1;
  const NoisyOracleEstimator oracle(NoiseSpec{});
  const ProtocolReport r = run_sim_protocol(cfg, {&oracle});

  REQUIRE(r.rows.size() == 6);
  CHECK(r.rows[0].method == "tsai");
  CHECK(r.rows[1].method == "park");
  CHECK(r.rows[2].method == "horaud");
  CHECK(r.rows[3].method == "daniilidis");
  CHECK(r.rows[4].method == "oracle");
  CHECK(r.rows[5].method == "oracle (fusion)");

  for (int m = 0; m < 4; ++m) {
    CAPTURE(r.rows[m].method);
    CHECK(r.rows[m].n == 6);
    CHECK(r.rows[m].failures == 0);
    CHECK(r.rows[m].mean_et_m < 1e-8);
    CHECK(r.rows[m].mean_er_rad < 1e-8);
  }
  // A zero-sigma oracle reproduces truth exactly, so errors are exact zeros.
  CHECK(r.rows[4].n == 6 * 15);
  CHECK(r.rows[4].mean_et_m == 0.0);
  CHECK(r.rows[4].mean_er_rad == 0.0);
  CHECK(r.rows[5].n == 6);
  CHECK(r.rows[5].mean_et_m == 0.0);
}

TEST_CASE("simulated protocol: byte-identical across runs and thread counts") {
  SimProtocolConfig cfg;
  cfg.n_extrinsics = 5;
  cfg.scenario.samples = 6;
  cfg.noise.tag_trans_mag = 0.002;
  cfg.noise.tag_rot_mag = 1.0 * kDeg;
  cfg.noise.estimator_trans_sigma = 0.005;
  cfg.noise.estimator_rot_sigma = 2.0 * kDeg;
  cfg.seed = 99;
  const NoisyOracleEstimator oracle(cfg.noise);

  cfg.threads = 1;
  const std::string a = report_bytes(run_sim_protocol(cfg, {&oracle}));
  const std::string b = report_bytes(run_sim_protocol(cfg, {&oracle}));
  cfg.threads = 4;
  const std::string c = report_bytes(run_sim_protocol(cfg, {&oracle}));
  CHECK(a == b);
  CHECK(a == c);

  cfg.seed = 100;
  cfg.threads = 1;
  CHECK(a != report_bytes(run_sim_protocol(cfg, {&oracle})));
}

TEST_CASE("simulated protocol: failures are counted, never fatal") {
  SimProtocolConfig cfg;
  cfg.n_extrinsics = 4;
  cfg.scenario.samples = 10;
  cfg.seed = 17;
  cfg.threads = 2;
  const FlakyEstimator flaky;
  const ProtocolReport r = run_sim_protocol(cfg, {&flaky});

  REQUIRE(r.rows.size() == 6);
  const ProtocolRow& singles = r.rows[4];
  const ProtocolRow& fused = r.rows[5];
  // Indices 0 and 5 fail in every scenario: 2 failures out of 10 images.
  CHECK(singles.n == 4 * 8);
  CHECK(singles.failures == 4 * 2);
  CHECK(singles.n + singles.failures == 4 * 10);
  CHECK(singles.mean_et_m == 0.0);
  // The surviving 8 estimates per scenario still fuse.
  CHECK(fused.n == 4);
  CHECK(fused.failures == 0);
  for (const ProtocolRow& row : r.rows) {
    CAPTURE(row.method);
    CHECK(row.n + row.failures > 0);
    CHECK(std::isfinite(row.mean_et_m));
    CHECK(row.std_et_m >= 0);
  }
}

TEST_CASE("real protocol: exact data drives the spread metric to zero") {
  RealProtocolConfig cfg;
  cfg.bank = 12;
  cfg.eval = 10;
  cfg.datasets = 6;
  cfg.samples = 5;
  cfg.seed = 8;
  cfg.threads = 1;
  const NoisyOracleEstimator oracle(NoiseSpec{});
  const ProtocolReport r = run_real_protocol(cfg, {&oracle});

  CHECK(r.protocol == "real");
  REQUIRE(r.rows.size() == 6);
  for (int m = 0; m < 4; ++m) {
    CAPTURE(r.rows[m].method);
    CHECK(r.rows[m].n == 6);
    CHECK(r.rows[m].failures == 0);
    CHECK(r.rows[m].mean_eps_m < 1e-9);
  }
  CHECK(r.rows[4].method == "oracle");
  CHECK(r.rows[4].n == 12);  // one estimate per bank image
  CHECK(r.rows[4].mean_eps_m < 1e-12);
  CHECK(r.rows[5].method == "oracle (fusion)");
  CHECK(r.rows[5].n == 6);  // one fused estimate per dataset
  CHECK(r.rows[5].mean_eps_m < 1e-12);
}

TEST_CASE("real protocol: noisy run is deterministic at any thread count") {
  RealProtocolConfig cfg;
  cfg.bank = 10;
  cfg.eval = 8;
  cfg.datasets = 5;
  cfg.samples = 4;
  cfg.noise.tag_trans_mag = 0.003;
  cfg.noise.tag_rot_mag = 1.5 * kDeg;
  cfg.noise.estimator_trans_sigma = 0.004;
  cfg.seed = 23;
  const NoisyOracleEstimator oracle(cfg.noise);

  cfg.threads = 1;
  const std::string a = report_bytes(run_real_protocol(cfg, {&oracle}));
  cfg.threads = 4;
  const std::string b = report_bytes(run_real_protocol(cfg, {&oracle}));
  CHECK(a == b);

  // Noise widens the spread away from zero.
  const ProtocolReport r = run_real_protocol(cfg, {&oracle});
  CHECK(r.rows[4].mean_eps_m > 1e-4);
}

TEST_CASE("dataset sampling: distinct within a dataset, shared across datasets") {
  const auto indices = sample_dataset_indices(40, 15, 40, 3);
  REQUIRE(indices.size() == 40);
  std::map<int, int> occurrences;
  for (const std::vector<int>& ds : indices) {
    REQUIRE(ds.size() == 15);
    std::vector<int> sorted = ds;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    CHECK(sorted.front() >= 0);
    CHECK(sorted.back() < 40);
    for (int v : ds) ++occurrences[v];
  }
  // 600 draws from a 40-element bank must reuse indices across datasets.
  const int max_occurrences =
      std::max_element(occurrences.begin(), occurrences.end(),
                       [](const auto& a, const auto& b) { return a.second < b.second; })
          ->second;
  CHECK(max_occurrences > 1);

  CHECK(sample_dataset_indices(40, 15, 40, 3) == indices);
  CHECK(sample_dataset_indices(40, 15, 40, 4) != indices);
}

TEST_CASE("classical sweep: pinned shape, exact zero tier, growth with noise") {
  ClassicalSweepConfig cfg;
  cfg.tiers = 3;
  cfg.tier_step_mm = 2.0;
  cfg.tier_step_deg = 2.0;
  cfg.scenarios_per_tier = 6;
  cfg.scenario.samples = 10;
  cfg.seed = 31;
  cfg.threads = 2;
  const ClassicalSweepReport r = sweep_classical_noise(cfg);

  REQUIRE(r.rows.size() == 3 * 4);
  CHECK(r.rows[0].method == "tsai");
  CHECK(r.rows[1].method == "park");
  CHECK(r.rows[2].method == "horaud");
  CHECK(r.rows[3].method == "daniilidis");
  CHECK(r.rows[4].tier_trans_mm == 2.0);
  CHECK(r.rows[4].tier_rot_deg == 2.0);
  CHECK(r.rows[8].tier_trans_mm == 4.0);

  for (int m = 0; m < 4; ++m) {
    CAPTURE(r.rows[m].method);
    CHECK(r.rows[m].n == 6);
    CHECK(r.rows[m].failures == 0);
    CHECK(r.rows[m].mean_et_m < 1e-9);
    // Noise hurts: the top tier is clearly worse than the exact tier.
    CHECK(r.rows[8 + m].mean_et_m > r.rows[m].mean_et_m);
    CHECK(r.rows[8 + m].mean_et_m > 1e-5);
  }
  for (const ClassicalSweepRow& row : r.rows) {
    CHECK(row.n + row.failures == cfg.scenarios_per_tier);
    CHECK(std::isfinite(row.mean_et_m));
    CHECK(row.std_et_m >= 0);
  }

  // Byte-identical CSV across a rerun at a different thread count.
  cfg.threads = 1;
  CHECK(classical_sweep_to_csv(sweep_classical_noise(cfg)) == classical_sweep_to_csv(r));
}

TEST_CASE("pnp sweep: pinned shape, near-exact zero tier, noise sensitivity") {
  PnpSweepConfig cfg;
  cfg.tiers = 2;
  cfg.tier_step_px = 3.0;
  cfg.poses = 6;
  cfg.seed = 41;
  cfg.threads = 2;
  const PnpSweepReport r = sweep_pnp_noise(cfg);

  REQUIRE(r.rows.size() == 2 * 2);
  CHECK(r.rows[0].config == "InFrame70");
  CHECK(r.rows[1].config == "InFrame100");
  CHECK(r.rows[0].tier_px == 0.0);
  CHECK(r.rows[2].tier_px == 3.0);

  for (int c = 0; c < 2; ++c) {
    CAPTURE(r.rows[c].config);
    CHECK(r.rows[c].n == 6);
    CHECK(r.rows[c].failures == 0);
    CHECK(r.rows[c].mean_et_m < 1e-6);
    CHECK(r.rows[2 + c].mean_et_m > r.rows[c].mean_et_m);
  }
  for (const PnpSweepRow& row : r.rows) {
    CHECK(row.n + row.failures == cfg.poses);
    CHECK(std::isfinite(row.mean_et_m));
  }

  cfg.threads = 1;
  CHECK(pnp_sweep_to_csv(sweep_pnp_noise(cfg)) == pnp_sweep_to_csv(r));
}

TEST_CASE("configuration validation rejects out-of-range settings") {
  const NoisyOracleEstimator oracle(NoiseSpec{});
  SimProtocolConfig sim;
  sim.n_extrinsics = 0;
  CHECK_THROWS_AS(run_sim_protocol(sim, {&oracle}), InvalidInput);
  sim.n_extrinsics = 1;
  sim.scenario.samples = 1;
  CHECK_THROWS_AS(run_sim_protocol(sim, {&oracle}), InvalidInput);
  sim.scenario.samples = 5;
  sim.noise.tag_trans_mag = -1;
  CHECK_THROWS_AS(run_sim_protocol(sim, {&oracle}), InvalidInput);

  RealProtocolConfig real;
  real.samples = real.bank + 1;
  CHECK_THROWS_AS(run_real_protocol(real, {&oracle}), InvalidInput);
  CHECK_THROWS_AS(sample_dataset_indices(5, 6, 1, 0), InvalidInput);
  CHECK_THROWS_AS(sample_dataset_indices(5, 3, 0, 0), InvalidInput);

  ClassicalSweepConfig cs;
  cs.tiers = 0;
  CHECK_THROWS_AS(sweep_classical_noise(cs), InvalidInput);

  PnpSweepConfig ps;
  ps.rim_margin = 0.6;
  CHECK_THROWS_AS(sweep_pnp_noise(ps), InvalidInput);
  ps.rim_margin = 0.01;
  ps.poses = 0;
  CHECK_THROWS_AS(sweep_pnp_noise(ps), InvalidInput);
}
