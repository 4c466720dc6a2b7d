// hec: batch CLI over the hand-eye calibration library.
//
// Every command resolves its settings as defaults < --config JSON < flags,
// writes its outputs under --out-dir, and drops a run manifest next to each
// output.  Units at this boundary are millimeters/degrees; everything behind
// it is meters/radians.  Exit codes: 0 success, 2 invalid input or config,
// 3 numerical or geometric failure.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "hec/bench.hpp"
#include "hec/errors.hpp"
#include "hec/fusion.hpp"
#include "hec/handeye.hpp"
#include "hec/io.hpp"
#include "hec/metrics.hpp"
#include "hec/synth.hpp"

namespace {

namespace fs = std::filesystem;
using hec::Json;

constexpr double kDegPerRad = 180.0 / std::numbers::pi;

[[noreturn]] void bad(const std::string& msg) { throw hec::InvalidInput(msg); }

// Flags shared by every command.  Optionals distinguish "not given" from a
// default so that config-file values are only overridden when the flag is set.
struct Common {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON config file; flags override its keys");
  cmd->add_option("--out-dir", c.out_dir, "directory for outputs and run manifests");
  cmd->add_option("--seed", c.seed, "RNG seed");
  cmd->add_option("--threads", c.threads, "worker threads (0 = all cores)");
}

// Loads the config file (if any) and rejects keys the command does not know;
// a typo'd key silently falling back to a default would poison the manifest.
Json load_config(const Common& c, std::initializer_list<const char*> known) {
  Json cfg = Json::object();
  if (!c.config_path.empty()) {
    cfg = hec::parse_json(hec::read_text_file(c.config_path));
    if (!cfg.is_object()) bad("config root must be a JSON object");
  }
  for (const auto& item : cfg.items()) {
    const bool ok = std::any_of(known.begin(), known.end(),
                                [&](const char* k) { return item.key() == k; });
    if (!ok) bad("unknown config key \"" + item.key() + "\"");
  }
  return cfg;
}

double num_or(const Json& cfg, const char* key, double def) {
  if (!cfg.contains(key)) return def;
  if (!cfg.at(key).is_number()) bad(std::string("config key \"") + key + "\" must be a number");
  return cfg.at(key).get<double>();
}

int int_or(const Json& cfg, const char* key, int def) {
  if (!cfg.contains(key)) return def;
  if (!cfg.at(key).is_number_integer()) {
    bad(std::string("config key \"") + key + "\" must be an integer");
  }
  return cfg.at(key).get<int>();
}

std::uint64_t u64_or(const Json& cfg, const char* key, std::uint64_t def) {
  if (!cfg.contains(key)) return def;
  const Json& v = cfg.at(key);
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    bad(std::string("config key \"") + key + "\" must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::string str_or(const Json& cfg, const char* key, const std::string& def) {
  if (!cfg.contains(key)) return def;
  if (!cfg.at(key).is_string()) bad(std::string("config key \"") + key + "\" must be a string");
  return cfg.at(key).get<std::string>();
}

std::uint64_t resolve_seed(const Common& c, const Json& cfg) {
  return c.seed ? *c.seed : u64_or(cfg, "seed", 0);
}

int resolve_threads(const Common& c, const Json& cfg) {
  return c.threads ? *c.threads : int_or(cfg, "threads", 0);
}

// Flag wins over config; empty string means "not given" for path flags.
std::string resolve_path(const std::string& flag, const Json& cfg, const char* key,
                         const char* what) {
  std::string value = flag.empty() ? str_or(cfg, key, "") : flag;
  if (value.empty()) {
    bad(std::string(what) + " required: pass --" + key + " or config key \"" + key + "\"");
  }
  return value;
}

hec::HandEyeMethod parse_method(std::string name) {
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (name == "tsai") return hec::HandEyeMethod::Tsai;
  if (name == "park") return hec::HandEyeMethod::Park;
  if (name == "horaud") return hec::HandEyeMethod::Horaud;
  if (name == "daniilidis") return hec::HandEyeMethod::Daniilidis;
  bad("unknown method \"" + name + "\" (expected tsai|park|horaud|daniilidis)");
}

hec::PairStrategy parse_strategy(const std::string& name) {
  if (name == "all_pairs") return hec::PairStrategy::AllPairs;
  if (name == "consecutive") return hec::PairStrategy::Consecutive;
  bad("unknown strategy \"" + name + "\" (expected all_pairs|consecutive)");
}

// Writes the payload plus "<stem>.manifest.json" under out_dir.  The manifest
// stores the fully resolved config, so re-running the same command with that
// config (and no flags) reproduces the payload byte-identically.
void emit(const Common& c, const std::string& command, Json resolved, std::uint64_t seed,
          std::vector<std::pair<std::string, std::string>> inputs, const std::string& out_name,
          const std::string& payload, const std::string& started) {
  fs::create_directories(c.out_dir);
  const fs::path out = fs::path(c.out_dir) / out_name;
  hec::write_text_file(out.string(), payload);

  hec::RunManifest m;
  m.command = command;
  m.config = std::move(resolved);
  m.seed = seed;
  m.input_digests = std::move(inputs);
  m.started_utc = started;
  m.finished_utc = hec::utc_timestamp_now();
  const fs::path mpath = fs::path(c.out_dir) / (fs::path(out_name).stem().string() +
                                                ".manifest.json");
  hec::write_text_file(mpath.string(), hec::manifest_to_json(m).dump(2) + "\n");
  std::cerr << "wrote " << out.string() << "\n";
}

std::pair<std::string, std::string> digest_of(const std::string& path, const std::string& text) {
  return {path, hec::hex_digest(hec::fnv1a64(text))};
}

// --- calibrate ---------------------------------------------------------------

struct CalibrateFlags {
  std::string dataset;
  std::string method;
  std::string strategy;
};

int run_calibrate(const Common& c, const CalibrateFlags& f) {
  const std::string started = hec::utc_timestamp_now();
  const Json cfg = load_config(c, {"dataset", "method", "strategy", "seed", "threads"});
  const std::string dataset_path = resolve_path(f.dataset, cfg, "dataset", "dataset file");
  const std::string method_str =
      f.method.empty() ? str_or(cfg, "method", "tsai") : f.method;
  const std::string strategy_str =
      f.strategy.empty() ? str_or(cfg, "strategy", "all_pairs") : f.strategy;
  const hec::HandEyeMethod method = parse_method(method_str);
  const hec::PairStrategy strategy = parse_strategy(strategy_str);

  const std::string text = hec::read_text_file(dataset_path);
  const std::vector<hec::CalibrationSample> samples =
      hec::samples_from_json(hec::parse_json(text));

  const hec::RigidTransform x = hec::calibrate(samples, method, strategy);
  const std::vector<hec::MotionPair> pairs = hec::build_motion_pairs(samples, strategy);
  const hec::MotionResiduals res = hec::motion_residuals(pairs, x);

  Json doc;
  doc["extrinsic"] = hec::transform_to_json(x);
  doc["method"] = hec::method_name(method);
  doc["strategy"] = strategy_str;
  doc["samples"] = samples.size();
  doc["pairs"] = pairs.size();
  Json r;
  r["mean_rotation_deg"] = res.mean_rotation * kDegPerRad;
  r["max_rotation_deg"] = res.max_rotation * kDegPerRad;
  r["mean_translation_mm"] = res.mean_translation * 1000.0;
  r["max_translation_mm"] = res.max_translation * 1000.0;
  doc["residuals"] = r;

  Json resolved;
  resolved["dataset"] = dataset_path;
  resolved["method"] = hec::method_name(method);
  resolved["strategy"] = strategy_str;
  const std::string payload = doc.dump(2) + "\n";
  emit(c, "calibrate", resolved, resolve_seed(c, cfg), {digest_of(dataset_path, text)},
       "extrinsic.json", payload, started);
  std::cout << payload;
  return 0;
}

// --- fuse --------------------------------------------------------------------

struct FuseFlags {
  std::string estimates;
};

int run_fuse(const Common& c, const FuseFlags& f) {
  const std::string started = hec::utc_timestamp_now();
  const Json cfg = load_config(c, {"estimates", "discard_fraction", "seed", "threads"});
  const std::string estimates_path =
      resolve_path(f.estimates, cfg, "estimates", "estimates file");
  const double discard = num_or(cfg, "discard_fraction", 0.20);

  const std::string text = hec::read_text_file(estimates_path);
  hec::EstimateBatch batch;
  batch.estimates = hec::transform_list_from_json(hec::parse_json(text));
  const hec::RigidTransform fused = hec::fuse_estimates(batch, discard);

  Json resolved;
  resolved["estimates"] = estimates_path;
  resolved["discard_fraction"] = discard;
  const std::string payload = hec::transform_to_json(fused).dump(2) + "\n";
  emit(c, "fuse", resolved, resolve_seed(c, cfg), {digest_of(estimates_path, text)},
       "fused.json", payload, started);
  std::cout << payload;
  return 0;
}

// --- simulate ----------------------------------------------------------------

struct SimulateFlags {
  std::optional<int> samples;
};

Eigen::Vector3d parse_extents_mm(const Json& cfg) {
  if (!cfg.contains("extents_mm")) return Eigen::Vector3d(15.0, 15.0, 15.0);
  const Json& e = cfg.at("extents_mm");
  if (e.is_number()) {
    const double v = e.get<double>();
    return Eigen::Vector3d(v, v, v);
  }
  if (e.is_array() && e.size() == 3 && e[0].is_number() && e[1].is_number() &&
      e[2].is_number()) {
    return Eigen::Vector3d(e[0].get<double>(), e[1].get<double>(), e[2].get<double>());
  }
  bad("config key \"extents_mm\" must be a number or an array of 3 numbers");
}

int run_simulate(const Common& c, const SimulateFlags& f) {
  const std::string started = hec::utc_timestamp_now();
  const Json cfg = load_config(
      c, {"samples", "extents_mm", "orientation_range_deg", "workspace_radius_mm",
          "tag_trans_noise_mm", "tag_rot_noise_deg", "seed", "threads"});
  const std::uint64_t seed = resolve_seed(c, cfg);

  hec::ScenarioConfig sc;
  sc.samples = f.samples ? *f.samples : int_or(cfg, "samples", 15);
  const Eigen::Vector3d extents_mm = parse_extents_mm(cfg);
  sc.extents = extents_mm / 1000.0;
  sc.orientation_range = num_or(cfg, "orientation_range_deg", 5.0) / kDegPerRad;
  sc.workspace_radius = num_or(cfg, "workspace_radius_mm", 300.0) / 1000.0;
  sc.seed = seed;
  const double tag_trans_mm = num_or(cfg, "tag_trans_noise_mm", 0.0);
  const double tag_rot_deg = num_or(cfg, "tag_rot_noise_deg", 0.0);
  if (tag_trans_mm < 0 || tag_rot_deg < 0) bad("noise magnitudes must be non-negative");

  hec::Rng rng(seed);
  const hec::RigidTransform truth = hec::sample_extrinsic(sc, rng);
  hec::Scenario scn = hec::generate_scenario(sc, truth, rng);
  if (tag_trans_mm > 0 || tag_rot_deg > 0) {
    for (hec::CalibrationSample& s : scn.samples) {
      s.t_co = hec::perturb_pose(s.t_co, tag_trans_mm / 1000.0, tag_rot_deg / kDegPerRad, rng);
    }
  }

  Json resolved;
  resolved["samples"] = sc.samples;
  resolved["extents_mm"] = {extents_mm.x(), extents_mm.y(), extents_mm.z()};
  resolved["orientation_range_deg"] = sc.orientation_range * kDegPerRad;
  resolved["workspace_radius_mm"] = sc.workspace_radius * 1000.0;
  resolved["tag_trans_noise_mm"] = tag_trans_mm;
  resolved["tag_rot_noise_deg"] = tag_rot_deg;
  resolved["seed"] = seed;
  emit(c, "simulate", resolved, seed, {}, "scenario.json",
       hec::scenario_to_json(scn).dump(2) + "\n", started);
  return 0;
}

// --- sweeps ------------------------------------------------------------------

int run_sweep_classical(const Common& c) {
  const std::string started = hec::utc_timestamp_now();
  const Json cfg = load_config(c, {"tiers", "tier_step_mm", "tier_step_deg",
                                   "scenarios_per_tier", "samples", "seed", "threads"});
  hec::ClassicalSweepConfig bc;
  bc.tiers = int_or(cfg, "tiers", 21);
  bc.tier_step_mm = num_or(cfg, "tier_step_mm", 0.5);
  bc.tier_step_deg = num_or(cfg, "tier_step_deg", 0.5);
  bc.scenarios_per_tier = int_or(cfg, "scenarios_per_tier", 100);
  bc.scenario.samples = int_or(cfg, "samples", 15);
  bc.seed = resolve_seed(c, cfg);
  bc.threads = resolve_threads(c, cfg);

  const hec::ClassicalSweepReport report = hec::sweep_classical_noise(bc);

  Json resolved;
  resolved["tiers"] = bc.tiers;
  resolved["tier_step_mm"] = bc.tier_step_mm;
  resolved["tier_step_deg"] = bc.tier_step_deg;
  resolved["scenarios_per_tier"] = bc.scenarios_per_tier;
  resolved["samples"] = bc.scenario.samples;
  resolved["seed"] = bc.seed;
  resolved["threads"] = bc.threads;
  emit(c, "sweep classical", resolved, bc.seed, {}, "sweep_classical.csv",
       hec::classical_sweep_to_csv(report), started);
  return 0;
}

int run_sweep_pnp(const Common& c) {
  const std::string started = hec::utc_timestamp_now();
  const Json cfg = load_config(
      c, {"tiers", "tier_step_px", "poses", "rim_margin", "seed", "threads"});
  hec::PnpSweepConfig pc;
  pc.tiers = int_or(cfg, "tiers", 10);
  pc.tier_step_px = num_or(cfg, "tier_step_px", 1.0);
  pc.poses = int_or(cfg, "poses", 200);
  pc.rim_margin = num_or(cfg, "rim_margin", 0.01);
  pc.seed = resolve_seed(c, cfg);
  pc.threads = resolve_threads(c, cfg);

  const hec::PnpSweepReport report = hec::sweep_pnp_noise(pc);

  Json resolved;
  resolved["tiers"] = pc.tiers;
  resolved["tier_step_px"] = pc.tier_step_px;
  resolved["poses"] = pc.poses;
  resolved["rim_margin"] = pc.rim_margin;
  resolved["seed"] = pc.seed;
  resolved["threads"] = pc.threads;
  emit(c, "sweep pnp", resolved, pc.seed, {}, "sweep_pnp.csv",
       hec::pnp_sweep_to_csv(report), started);
  return 0;
}

// --- protocols ---------------------------------------------------------------

// Shared noise keys: tag-pose corruption plus the noisy-oracle stand-in's
// estimator sigmas.
hec::NoiseSpec tag_noise_from(const Json& cfg) {
  hec::NoiseSpec n;
  n.tag_trans_mag = num_or(cfg, "tag_trans_noise_mm", 0.0) / 1000.0;
  n.tag_rot_mag = num_or(cfg, "tag_rot_noise_deg", 0.0) / kDegPerRad;
  return n;
}

hec::NoiseSpec oracle_noise_from(const Json& cfg) {
  hec::NoiseSpec n;
  n.estimator_trans_sigma = num_or(cfg, "oracle_trans_sigma_mm", 5.0) / 1000.0;
  n.estimator_rot_sigma = num_or(cfg, "oracle_rot_sigma_deg", 1.0) / kDegPerRad;
  return n;
}

void put_protocol_noise(Json& resolved, const hec::NoiseSpec& tag, const hec::NoiseSpec& est) {
  resolved["tag_trans_noise_mm"] = tag.tag_trans_mag * 1000.0;
  resolved["tag_rot_noise_deg"] = tag.tag_rot_mag * kDegPerRad;
  resolved["oracle_trans_sigma_mm"] = est.estimator_trans_sigma * 1000.0;
  resolved["oracle_rot_sigma_deg"] = est.estimator_rot_sigma * kDegPerRad;
}

int run_protocol_sim(const Common& c) {
  const std::string started = hec::utc_timestamp_now();
  const Json cfg = load_config(
      c, {"n_extrinsics", "samples", "tag_trans_noise_mm", "tag_rot_noise_deg",
          "oracle_trans_sigma_mm", "oracle_rot_sigma_deg", "seed", "threads"});
  hec::SimProtocolConfig pc;
  pc.n_extrinsics = int_or(cfg, "n_extrinsics", 100);
  pc.scenario.samples = int_or(cfg, "samples", 15);
  pc.noise = tag_noise_from(cfg);
  pc.seed = resolve_seed(c, cfg);
  pc.threads = resolve_threads(c, cfg);
  const hec::NoisyOracleEstimator oracle(oracle_noise_from(cfg));

  const hec::ProtocolReport report = hec::run_sim_protocol(pc, {&oracle});

  Json resolved;
  resolved["n_extrinsics"] = pc.n_extrinsics;
  resolved["samples"] = pc.scenario.samples;
  put_protocol_noise(resolved, pc.noise, oracle_noise_from(cfg));
  resolved["seed"] = pc.seed;
  resolved["threads"] = pc.threads;
  emit(c, "protocol sim", resolved, pc.seed, {}, "protocol_sim.json",
       hec::protocol_report_to_json(report).dump(2) + "\n", started);
  return 0;
}

int run_protocol_real(const Common& c) {
  const std::string started = hec::utc_timestamp_now();
  const Json cfg = load_config(
      c, {"bank", "eval", "datasets", "samples", "tag_trans_noise_mm", "tag_rot_noise_deg",
          "oracle_trans_sigma_mm", "oracle_rot_sigma_deg", "seed", "threads"});
  hec::RealProtocolConfig pc;
  pc.bank = int_or(cfg, "bank", 40);
  pc.eval = int_or(cfg, "eval", 60);
  pc.datasets = int_or(cfg, "datasets", 40);
  pc.samples = int_or(cfg, "samples", 15);
  pc.noise = tag_noise_from(cfg);
  pc.seed = resolve_seed(c, cfg);
  pc.threads = resolve_threads(c, cfg);
  const hec::NoisyOracleEstimator oracle(oracle_noise_from(cfg));

  const hec::ProtocolReport report = hec::run_real_protocol(pc, {&oracle});

  Json resolved;
  resolved["bank"] = pc.bank;
  resolved["eval"] = pc.eval;
  resolved["datasets"] = pc.datasets;
  resolved["samples"] = pc.samples;
  put_protocol_noise(resolved, pc.noise, oracle_noise_from(cfg));
  resolved["seed"] = pc.seed;
  resolved["threads"] = pc.threads;
  emit(c, "protocol real", resolved, pc.seed, {}, "protocol_real.json",
       hec::protocol_report_to_json(report).dump(2) + "\n", started);
  return 0;
}

// --- eval --------------------------------------------------------------------

struct EvalFlags {
  std::string extrinsic;
  std::string dataset;
};

int run_eval(const Common& c, const EvalFlags& f) {
  const std::string started = hec::utc_timestamp_now();
  const Json cfg = load_config(c, {"extrinsic", "dataset", "seed", "threads"});
  const std::string extrinsic_path = resolve_path(f.extrinsic, cfg, "extrinsic", "extrinsic file");
  const std::string dataset_path = resolve_path(f.dataset, cfg, "dataset", "dataset file");

  const std::string ext_text = hec::read_text_file(extrinsic_path);
  const Json ext_json = hec::parse_json(ext_text);
  // Accepts either a bare 4x4 transform or a calibrate output document.
  const hec::RigidTransform x =
      ext_json.is_object() && ext_json.contains("extrinsic")
          ? hec::transform_from_json(ext_json.at("extrinsic"))
          : hec::transform_from_json(ext_json);

  const std::string data_text = hec::read_text_file(dataset_path);
  const std::vector<hec::CalibrationSample> samples =
      hec::samples_from_json(hec::parse_json(data_text));
  const double eps = hec::indirect_spread_error(x, samples);

  Json doc;
  doc["eps_std_mm"] = eps * 1000.0;
  doc["samples"] = samples.size();

  Json resolved;
  resolved["extrinsic"] = extrinsic_path;
  resolved["dataset"] = dataset_path;
  const std::string payload = doc.dump(2) + "\n";
  emit(c, "eval", resolved, resolve_seed(c, cfg),
       {digest_of(extrinsic_path, ext_text), digest_of(dataset_path, data_text)}, "eval.json",
       payload, started);
  std::cout << payload;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hand-eye (eye-in-hand) camera calibration toolkit"};
  app.require_subcommand(1);

  Common common;
  CalibrateFlags cal_flags;
  FuseFlags fuse_flags;
  SimulateFlags sim_flags;
  EvalFlags eval_flags;

  CLI::App* cal = app.add_subcommand("calibrate", "solve AX=XB from a dataset of robot/tag poses");
  add_common(cal, common);
  cal->add_option("--dataset", cal_flags.dataset, "dataset JSON (array of {t_be, t_co})");
  cal->add_option("--method", cal_flags.method, "tsai|park|horaud|daniilidis");
  cal->add_option("--strategy", cal_flags.strategy, "all_pairs|consecutive");

  CLI::App* fuse = app.add_subcommand("fuse", "aggregate a JSON array of 4x4 estimates");
  add_common(fuse, common);
  fuse->add_option("--estimates", fuse_flags.estimates, "JSON array of 4x4 transforms");

  CLI::App* sim = app.add_subcommand("simulate", "write a synthetic calibration scenario");
  add_common(sim, common);
  sim->add_option("--samples", sim_flags.samples, "trajectory length");

  CLI::App* sweep = app.add_subcommand("sweep", "noise-sensitivity sweeps");
  sweep->require_subcommand(1);
  CLI::App* sweep_classical =
      sweep->add_subcommand("classical", "tag-pose noise tiers x classical solvers -> CSV");
  add_common(sweep_classical, common);
  CLI::App* sweep_pnp =
      sweep->add_subcommand("pnp", "keypoint pixel-noise tiers x PnP configs -> CSV");
  add_common(sweep_pnp, common);

  CLI::App* protocol = app.add_subcommand("protocol", "end-to-end evaluation protocols");
  protocol->require_subcommand(1);
  CLI::App* protocol_sim =
      protocol->add_subcommand("sim", "ground-truth protocol: direct errors vs truth");
  add_common(protocol_sim, common);
  CLI::App* protocol_real =
      protocol->add_subcommand("real", "truth-free protocol: indirect spread errors");
  add_common(protocol_real, common);

  CLI::App* eval = app.add_subcommand("eval", "score an extrinsic on an evaluation dataset");
  add_common(eval, common);
  eval->add_option("--extrinsic", eval_flags.extrinsic,
                   "transform JSON (bare 4x4 or calibrate output)");
  eval->add_option("--dataset", eval_flags.dataset, "evaluation dataset JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (cal->parsed()) return run_calibrate(common, cal_flags);
    if (fuse->parsed()) return run_fuse(common, fuse_flags);
    if (sim->parsed()) return run_simulate(common, sim_flags);
    if (sweep_classical->parsed()) return run_sweep_classical(common);
    if (sweep_pnp->parsed()) return run_sweep_pnp(common);
    if (protocol_sim->parsed()) return run_protocol_sim(common);
    if (protocol_real->parsed()) return run_protocol_real(common);
    if (eval->parsed()) return run_eval(common, eval_flags);
  } catch (const hec::InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const hec::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
