#include "hec/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <numbers>
#include <sstream>

#include "hec/errors.hpp"

namespace hec {
namespace {

[[noreturn]] void fail(const std::string& what) { throw InvalidInput(what); }

double as_double(const Json& j, const char* what) {
  if (!j.is_number()) fail(std::string(what) + ": expected a number");
  return j.get<double>();
}

std::uint64_t as_u64(const Json& j, const char* what) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  fail(std::string(what) + ": expected a non-negative integer");
}

int as_int(const Json& j, const char* what) {
  if (!j.is_number_integer() && !j.is_number_unsigned())
    fail(std::string(what) + ": expected an integer");
  return j.get<int>();
}

bool as_bool(const Json& j, const char* what) {
  if (!j.is_boolean()) fail(std::string(what) + ": expected a boolean");
  return j.get<bool>();
}

std::string as_string(const Json& j, const char* what) {
  if (!j.is_string()) fail(std::string(what) + ": expected a string");
  return j.get<std::string>();
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) fail(std::string("missing field \"") + key + "\"");
  return j.at(key);
}

Eigen::Vector3d as_vec3(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) fail(std::string(what) + ": expected 3 numbers");
  return {as_double(j[0], what), as_double(j[1], what), as_double(j[2], what)};
}

Eigen::Vector2d as_vec2(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 2) fail(std::string(what) + ": expected 2 numbers");
  return {as_double(j[0], what), as_double(j[1], what)};
}

// Splits on sep; the final field may be terminated by end-of-text.
std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(text.substr(start));
      break;
    }
    out.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_double_field(std::string_view f, const char* what) {
  const std::string buf(f);
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size() || buf.empty())
    fail(std::string(what) + ": bad numeric field \"" + buf + "\"");
  return v;
}

// Grid files share a one-line JSON header followed by CSV rows.
struct GridHeader {
  int width = 0;
  int height = 0;
  std::vector<std::string_view> rows;
};

GridHeader parse_grid(std::string_view text, const char* what) {
  const std::size_t nl = text.find('\n');
  if (nl == std::string_view::npos) fail(std::string(what) + ": missing header line");
  const Json header = parse_json(text.substr(0, nl));
  GridHeader g;
  g.width = as_int(field(header, "width"), "width");
  g.height = as_int(field(header, "height"), "height");
  if (as_string(field(header, "encoding"), "encoding") != "csv")
    fail(std::string(what) + ": unsupported encoding");
  if (g.width <= 0 || g.height <= 0) fail(std::string(what) + ": non-positive dimensions");
  for (std::string_view line : split(text.substr(nl + 1), '\n')) {
    if (!line.empty()) g.rows.push_back(line);
  }
  if (static_cast<int>(g.rows.size()) != g.height)
    fail(std::string(what) + ": row count does not match header height");
  return g;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot read file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail("error while reading: " + path.string());
  return std::move(ss).str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail("cannot write file: " + path.string());
}

Json parse_json(std::string_view text) {
  Json j = Json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) fail("malformed JSON");
  return j;
}

Json transform_to_json(const RigidTransform& t) {
  const Eigen::Matrix4d m = t.matrix();
  Json rows = Json::array();
  for (int r = 0; r < 4; ++r) {
    Json row = Json::array();
    for (int c = 0; c < 4; ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

RigidTransform transform_from_json(const Json& j) {
  if (!j.is_array()) fail("transform: expected an array");
  Eigen::Matrix4d m;
  if (j.size() == 4) {
    for (int r = 0; r < 4; ++r) {
      const Json& row = j[r];
      if (!row.is_array() || row.size() != 4) fail("transform: expected 4 rows of 4 numbers");
      for (int c = 0; c < 4; ++c) m(r, c) = as_double(row[c], "transform");
    }
  } else if (j.size() == 16) {
    for (int i = 0; i < 16; ++i) m(i / 4, i % 4) = as_double(j[i], "transform");
  } else {
    fail("transform: expected a 4x4 or flat 16-element array");
  }
  return RigidTransform::from_matrix(m);
}

Json transform_list_to_json(std::span<const RigidTransform> ts) {
  Json out = Json::array();
  for (const RigidTransform& t : ts) out.push_back(transform_to_json(t));
  return out;
}

std::vector<RigidTransform> transform_list_from_json(const Json& j) {
  if (!j.is_array()) fail("transform list: expected an array");
  std::vector<RigidTransform> out;
  out.reserve(j.size());
  for (const Json& e : j) out.push_back(transform_from_json(e));
  return out;
}

Json dataset_to_json(std::span<const CalibrationSample> samples) {
  Json out = Json::array();
  for (const CalibrationSample& s : samples) {
    Json e = Json::object();
    e["t_be"] = transform_to_json(s.t_be);
    e["t_co"] = transform_to_json(s.t_co);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<CalibrationSample> dataset_from_json(const Json& j) {
  if (!j.is_array()) fail("dataset: expected an array of samples");
  std::vector<CalibrationSample> out;
  out.reserve(j.size());
  for (const Json& e : j) {
    out.push_back({transform_from_json(field(e, "t_be")), transform_from_json(field(e, "t_co"))});
  }
  return out;
}

Json scenario_to_json(const Scenario& s) {
  Json out = Json::object();
  out["truth_extrinsic"] = transform_to_json(s.truth_extrinsic);
  out["tag_in_base"] = transform_to_json(s.tag_in_base);
  out["seed"] = s.seed;
  out["samples"] = dataset_to_json(s.samples);
  return out;
}

Scenario scenario_from_json(const Json& j) {
  Scenario s;
  s.truth_extrinsic = transform_from_json(field(j, "truth_extrinsic"));
  s.tag_in_base = transform_from_json(field(j, "tag_in_base"));
  s.seed = as_u64(field(j, "seed"), "seed");
  s.samples = dataset_from_json(field(j, "samples"));
  return s;
}

std::vector<CalibrationSample> samples_from_json(const Json& j) {
  if (j.is_array()) return dataset_from_json(j);
  if (j.is_object() && j.contains("samples")) return dataset_from_json(j.at("samples"));
  fail("expected a dataset array or a scenario object");
}

Json keypoint_file_to_json(const KeypointModel& model, const KeypointObservations& obs) {
  Json mj = Json::array();
  for (const Keypoint& p : model.points) {
    Json e = Json::object();
    e["id"] = p.id;
    e["xyz"] = Json::array({p.position.x(), p.position.y(), p.position.z()});
    e["in_frame_100"] = p.in_frame_100;
    mj.push_back(std::move(e));
  }
  Json oj = Json::array();
  for (const KeypointObservation& o : obs.points) {
    Json e = Json::object();
    e["id"] = o.id;
    e["uv_norm"] = Json::array({o.uv.x(), o.uv.y()});
    e["visible"] = o.visible;
    oj.push_back(std::move(e));
  }
  Json out = Json::object();
  out["model"] = std::move(mj);
  out["observations"] = std::move(oj);
  return out;
}

std::pair<KeypointModel, KeypointObservations> keypoint_file_from_json(const Json& j) {
  const Json& mj = field(j, "model");
  const Json& oj = field(j, "observations");
  if (!mj.is_array() || !oj.is_array()) fail("keypoint file: model/observations must be arrays");
  KeypointModel model;
  for (const Json& e : mj) {
    Keypoint p;
    p.id = as_int(field(e, "id"), "model id");
    p.position = as_vec3(field(e, "xyz"), "xyz");
    p.in_frame_100 = e.contains("in_frame_100") && as_bool(e.at("in_frame_100"), "in_frame_100");
    model.points.push_back(p);
  }
  KeypointObservations obs;
  for (const Json& e : oj) {
    KeypointObservation o;
    o.id = as_int(field(e, "id"), "observation id");
    o.uv = as_vec2(field(e, "uv_norm"), "uv_norm");
    o.visible = as_bool(field(e, "visible"), "visible");
    obs.points.push_back(o);
  }
  model.validate();
  obs.validate();
  return {std::move(model), std::move(obs)};
}

std::string depth_map_to_text(const DepthMap& d) {
  d.validate();
  Json header = Json::object();
  header["width"] = d.width;
  header["height"] = d.height;
  header["encoding"] = "csv";
  std::string out = header.dump();
  out.push_back('\n');
  for (int r = 0; r < d.height; ++r) {
    for (int c = 0; c < d.width; ++c) {
      if (c) out.push_back(',');
      out += format_double(d.at(r, c));
    }
    out.push_back('\n');
  }
  return out;
}

DepthMap depth_map_from_text(std::string_view text) {
  const GridHeader g = parse_grid(text, "depth map");
  DepthMap d;
  d.width = g.width;
  d.height = g.height;
  d.values.reserve(static_cast<std::size_t>(g.width) * g.height);
  for (std::string_view row : g.rows) {
    const auto fields = split(row, ',');
    if (static_cast<int>(fields.size()) != g.width)
      fail("depth map: row width does not match header");
    for (std::string_view f : fields) d.values.push_back(parse_double_field(f, "depth map"));
  }
  d.validate();
  return d;
}

std::string mask_to_text(const SegmentationMask& m) {
  m.validate();
  Json header = Json::object();
  header["width"] = m.width;
  header["height"] = m.height;
  header["encoding"] = "csv";
  std::string out = header.dump();
  out.push_back('\n');
  for (int r = 0; r < m.height; ++r) {
    for (int c = 0; c < m.width; ++c) {
      if (c) out.push_back(',');
      out += std::to_string(static_cast<unsigned>(m.at(r, c)));
    }
    out.push_back('\n');
  }
  return out;
}

SegmentationMask mask_from_text(std::string_view text) {
  const GridHeader g = parse_grid(text, "mask");
  SegmentationMask m;
  m.width = g.width;
  m.height = g.height;
  m.values.reserve(static_cast<std::size_t>(g.width) * g.height);
  for (std::string_view row : g.rows) {
    const auto fields = split(row, ',');
    if (static_cast<int>(fields.size()) != g.width) fail("mask: row width does not match header");
    for (std::string_view f : fields) {
      const double v = parse_double_field(f, "mask");
      if (v < 0 || v > 255 || v != static_cast<double>(static_cast<std::uint8_t>(v)))
        fail("mask: values must be integers in [0, 255]");
      m.values.push_back(static_cast<std::uint8_t>(v));
    }
  }
  m.validate();
  return m;
}

std::string cloud_to_csv(const PointCloud& c) {
  c.validate();
  std::string out;
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    const Eigen::Vector3d& p = c.points[i];
    out += format_double(p.x());
    out.push_back(',');
    out += format_double(p.y());
    out.push_back(',');
    out += format_double(p.z());
    if (c.has_normals()) {
      const Eigen::Vector3d& n = c.normals[i];
      for (int k = 0; k < 3; ++k) {
        out.push_back(',');
        out += format_double(n(k));
      }
    }
    out.push_back('\n');
  }
  return out;
}

PointCloud cloud_from_csv(std::string_view text) {
  PointCloud c;
  std::size_t arity = 0;
  for (std::string_view line : split(text, '\n')) {
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 3 && fields.size() != 6) fail("cloud: lines must have 3 or 6 fields");
    if (arity == 0) arity = fields.size();
    if (fields.size() != arity) fail("cloud: inconsistent field count across lines");
    Eigen::Vector3d p(parse_double_field(fields[0], "cloud"),
                      parse_double_field(fields[1], "cloud"),
                      parse_double_field(fields[2], "cloud"));
    c.points.push_back(p);
    if (arity == 6) {
      c.normals.emplace_back(parse_double_field(fields[3], "cloud"),
                             parse_double_field(fields[4], "cloud"),
                             parse_double_field(fields[5], "cloud"));
    }
  }
  c.validate();
  return c;
}

std::string classical_sweep_to_csv(const ClassicalSweepReport& r) {
  std::string out = "tier_trans_mm,tier_rot_deg,method,mean_et_m,std_et_m,mean_er_rad,std_er_rad,n,failures\n";
  for (const ClassicalSweepRow& row : r.rows) {
    out += format_double(row.tier_trans_mm);
    out.push_back(',');
    out += format_double(row.tier_rot_deg);
    out.push_back(',');
    out += row.method;
    out.push_back(',');
    out += format_double(row.mean_et_m);
    out.push_back(',');
    out += format_double(row.std_et_m);
    out.push_back(',');
    out += format_double(row.mean_er_rad);
    out.push_back(',');
    out += format_double(row.std_er_rad);
    out.push_back(',');
    out += std::to_string(row.n);
    out.push_back(',');
    out += std::to_string(row.failures);
    out.push_back('\n');
  }
  return out;
}

std::string pnp_sweep_to_csv(const PnpSweepReport& r) {
  std::string out = "tier_px,config,mean_et_m,std_et_m,mean_er_rad,std_er_rad,n,failures\n";
  for (const PnpSweepRow& row : r.rows) {
    out += format_double(row.tier_px);
    out.push_back(',');
    out += row.config;
    out.push_back(',');
    out += format_double(row.mean_et_m);
    out.push_back(',');
    out += format_double(row.std_et_m);
    out.push_back(',');
    out += format_double(row.mean_er_rad);
    out.push_back(',');
    out += format_double(row.std_er_rad);
    out.push_back(',');
    out += std::to_string(row.n);
    out.push_back(',');
    out += std::to_string(row.failures);
    out.push_back('\n');
  }
  return out;
}

Json protocol_report_to_json(const ProtocolReport& r) {
  constexpr double kDegPerRad = 180.0 / std::numbers::pi;
  Json methods = Json::array();
  for (const ProtocolRow& row : r.rows) {
    Json m = Json::object();
    m["method"] = row.method;
    if (r.protocol == "real") {
      Json eps = Json::object();
      eps["mean"] = row.mean_eps_m * 1000.0;
      eps["std"] = row.std_eps_m * 1000.0;
      m["eps_std_mm"] = std::move(eps);
    } else {
      Json et = Json::object();
      et["mean"] = row.mean_et_m * 1000.0;
      et["std"] = row.std_et_m * 1000.0;
      m["et_mm"] = std::move(et);
      Json er = Json::object();
      er["mean"] = row.mean_er_rad * kDegPerRad;
      er["std"] = row.std_er_rad * kDegPerRad;
      m["er_deg"] = std::move(er);
    }
    m["n"] = row.n;
    m["failures"] = row.failures;
    methods.push_back(std::move(m));
  }
  Json out = Json::object();
  out["protocol"] = r.protocol;
  out["seed"] = r.seed;
  out["methods"] = std::move(methods);
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex_digest(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::string utc_timestamp_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[24];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json manifest_to_json(const RunManifest& m) {
  Json inputs = Json::object();
  for (const auto& [path, digest] : m.input_digests) inputs[path] = digest;
  Json out = Json::object();
  out["command"] = m.command;
  out["config"] = m.config;
  out["seed"] = m.seed;
  out["version"] = m.version;
  out["inputs"] = std::move(inputs);
  out["started_utc"] = m.started_utc;
  out["finished_utc"] = m.finished_utc;
  return out;
}

RunManifest manifest_from_json(const Json& j) {
  RunManifest m;
  m.command = as_string(field(j, "command"), "command");
  m.config = field(j, "config");
  m.seed = as_u64(field(j, "seed"), "seed");
  m.version = as_string(field(j, "version"), "version");
  const Json& inputs = field(j, "inputs");
  if (!inputs.is_object()) fail("manifest: inputs must be an object");
  for (const auto& [path, digest] : inputs.items())
    m.input_digests.emplace_back(path, as_string(digest, "input digest"));
  m.started_utc = as_string(field(j, "started_utc"), "started_utc");
  m.finished_utc = as_string(field(j, "finished_utc"), "finished_utc");
  return m;
}

}  // namespace hec
