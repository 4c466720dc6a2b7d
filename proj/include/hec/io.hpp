#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hec/bench.hpp"
#include "hec/icp.hpp"
#include "hec/synth.hpp"

namespace hec {

// Order-preserving JSON document type used for every file this toolkit reads
// or writes.  Serialization is deterministic: same document, same bytes.
using Json = nlohmann::ordered_json;

inline constexpr std::string_view kToolkitVersion = "1.0.0";

// 17-significant-digit decimal form; strtod of the result recovers the exact
// bit pattern.  All CSV output goes through this.
std::string format_double(double v);

// ---- files ------------------------------------------------------------------

// Throws InvalidInput when the file cannot be read / written.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// Parses text as JSON; malformed input throws InvalidInput.
Json parse_json(std::string_view text);

// ---- rigid transforms ---------------------------------------------------------

// 4x4 row-major nested array (homogeneous matrix).
Json transform_to_json(const RigidTransform& t);
// Accepts the nested form or a flat array of 16 numbers; validates rigidity.
RigidTransform transform_from_json(const Json& j);

Json transform_list_to_json(std::span<const RigidTransform> ts);
std::vector<RigidTransform> transform_list_from_json(const Json& j);

// ---- calibration datasets ------------------------------------------------------

// Array of {"t_be", "t_co"} objects.
Json dataset_to_json(std::span<const CalibrationSample> samples);
std::vector<CalibrationSample> dataset_from_json(const Json& j);

// {"truth_extrinsic", "tag_in_base", "seed", "samples"}.
Json scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const Json& j);

// Accepts a plain dataset array or a scenario object; returns the samples.
std::vector<CalibrationSample> samples_from_json(const Json& j);

// ---- keypoints -----------------------------------------------------------------

// {"model": [{"id", "xyz", "in_frame_100"}],
//  "observations": [{"id", "uv_norm", "visible"}]}.
Json keypoint_file_to_json(const KeypointModel& model, const KeypointObservations& obs);
std::pair<KeypointModel, KeypointObservations> keypoint_file_from_json(const Json& j);

// ---- depth maps, masks, point clouds --------------------------------------------

// One-line JSON header {"width", "height", "encoding": "csv"} followed by
// `height` comma-separated rows of `width` values each.
std::string depth_map_to_text(const DepthMap& d);
DepthMap depth_map_from_text(std::string_view text);
std::string mask_to_text(const SegmentationMask& m);
SegmentationMask mask_from_text(std::string_view text);

// Headerless CSV, one point per line: x,y,z or x,y,z,nx,ny,nz (all lines
// alike).
std::string cloud_to_csv(const PointCloud& c);
PointCloud cloud_from_csv(std::string_view text);

// ---- reports --------------------------------------------------------------------

std::string classical_sweep_to_csv(const ClassicalSweepReport& r);
std::string pnp_sweep_to_csv(const PnpSweepReport& r);

// Row-per-method summary with millimeter/degree values (keys carry the unit).
Json protocol_report_to_json(const ProtocolReport& r);

// ---- run manifests -----------------------------------------------------------------

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex_digest(std::uint64_t v);  // 16 lowercase hex characters

// ISO 8601 UTC, second resolution.
std::string utc_timestamp_now();

// Provenance record written alongside every command output: re-running the
// stored command with the stored config and seed reproduces the outputs.
struct RunManifest {
  std::string command;
  Json config;
  std::uint64_t seed = 0;
  std::string version{kToolkitVersion};
  std::vector<std::pair<std::string, std::string>> input_digests;  // path, hex digest
  std::string started_utc;
  std::string finished_utc;
};

Json manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const Json& j);

}  // namespace hec
