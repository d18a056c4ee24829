#include "advpose/service/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <toml.hpp>

#include "advpose/classifier/echo_server.hpp"
#include "advpose/classifier/protocol.hpp"
#include "advpose/classifier/remote.hpp"
#include "advpose/classifier/synthetic.hpp"
#include "advpose/common/error.hpp"
#include "advpose/geometry/obj_loader.hpp"
#include "advpose/image/image_io.hpp"

namespace advpose {

using nlohmann::json;
namespace fs = std::filesystem;

json load_config_file(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("config file not found", path.string());
  if (path.extension() == ".toml") {
    try {
      const toml::table tbl = toml::parse_file(path.string());
      std::ostringstream os;
      os << toml::json_formatter{tbl};
      return json::parse(os.str());
    } catch (const toml::parse_error& e) {
      throw FormatError(path.string() + ": " + std::string(e.description()),
                        static_cast<int>(e.source().begin.line));
    }
  }
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file", path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("override must look like section.key=value: " + assignment);
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &config;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object()) throw UsageError("cannot override '" + key + "': '" + parts[i] + "' is not a section");
    node = &(*node)[parts[i]];
    if (node->is_null()) *node = json::object();
  }
  if (!node->is_object()) throw UsageError("cannot override '" + key + "'");
  (*node)[parts.back()] = value;
}

void require_keys(const json& object, const std::vector<std::string>& valid, const std::string& section) {
  if (!object.is_object()) throw UsageError("'" + section + "' must be a table/object");
  for (const auto& [key, _] : object.items())
    if (std::find(valid.begin(), valid.end(), key) == valid.end()) {
      std::string list;
      for (const auto& k : valid) list += (list.empty() ? "" : ", ") + k;
      throw UsageError("unknown key '" + key + "' in " + section + "; valid keys: " + list);
    }
}

namespace {

const std::vector<std::string> kTopKeys = {"seed",        "threads",   "scene",    "backend",   "backend_b",
                                           "search",      "census",    "landscape", "sensitivity", "transfer",
                                           "yaw_sweep",   "neighbors", "render",   "output"};
const std::vector<std::string> kSceneKeys = {"mesh",       "mesh_id",  "lighting",       "background", "width",
                                             "height",     "half_angle_deg", "camera_z", "depth_range", "sampling",
                                             "true_class", "view_yaw"};
const std::vector<std::string> kLightingKeys = {"preset", "directional", "ambient", "direction", "color",
                                                "ambient_color"};
const std::vector<std::string> kBackendKeys = {"kind",     "endpoint",  "pool_size", "max_attempts", "timeout_ms",
                                               "synthetic", "probs",    "labels",    "embedding_dim"};
const std::vector<std::string> kSearchKeys = {"mode", "budget", "seed", "fd_step", "fd_step_overrides",
                                              "learning_rate", "zrs_levels", "zrs_samples_per_level", "views",
                                              "threads", "target_class", "true_class", "depth_range", "init"};
const std::vector<std::string> kCensusKeys = {"n", "lighting"};
const std::vector<std::string> kLandscapeKeys = {"fixed", "row_param", "col_param", "rows", "cols", "cell_px"};
const std::vector<std::string> kSensitivityKeys = {"n_starts", "n_resamples", "max_start_attempts", "starts"};
const std::vector<std::string> kTransferKeys = {"records", "confidence_floor", "mapping"};
const std::vector<std::string> kYawKeys = {"distances", "first_yaw_deg", "step_deg", "count"};
const std::vector<std::string> kNeighborKeys = {"queries", "corpus", "corpus_random", "k"};
const std::vector<std::string> kRenderKeys = {"pose"};
const std::vector<std::string> kOutputKeys = {"dir"};

}  // namespace

void validate_config(const json& c) {
  require_keys(c, kTopKeys, "config");
  auto section = [&](const char* name, const std::vector<std::string>& keys) {
    if (c.contains(name) && !c[name].is_null()) require_keys(c[name], keys, name);
  };
  section("scene", kSceneKeys);
  if (c.contains("scene") && c["scene"].contains("lighting") && c["scene"]["lighting"].is_object())
    require_keys(c["scene"]["lighting"], kLightingKeys, "scene.lighting");
  section("backend", kBackendKeys);
  section("backend_b", kBackendKeys);
  section("search", kSearchKeys);
  section("census", kCensusKeys);
  section("landscape", kLandscapeKeys);
  section("sensitivity", kSensitivityKeys);
  section("transfer", kTransferKeys);
  section("yaw_sweep", kYawKeys);
  section("neighbors", kNeighborKeys);
  section("render", kRenderKeys);
  section("output", kOutputKeys);
}

json resolve_paths(json c, const fs::path& base_dir) {
  auto fix = [&](json& node, const char* key) {
    if (!node.is_object() || !node.contains(key) || !node[key].is_string()) return;
    const std::string v = node[key].get<std::string>();
    if (v.empty() || v.rfind("builtin:", 0) == 0) return;
    const fs::path p(v);
    if (p.is_relative()) node[key] = (base_dir / p).lexically_normal().string();
  };
  if (c.contains("scene")) {
    fix(c["scene"], "mesh");
    fix(c["scene"], "background");
  }
  if (c.contains("transfer")) {
    fix(c["transfer"], "records");
    fix(c["transfer"], "mapping");
  }
  return c;
}

LightingConfig lighting_from_json(const json& j) {
  if (j.is_null()) return LightingConfig::preset(LightingPreset::kMedium);
  if (j.is_string()) return LightingConfig::preset(parse_preset(j.get<std::string>()));
  require_keys(j, kLightingKeys, "lighting");
  LightingConfig l = LightingConfig::preset(parse_preset(j.value("preset", std::string("medium"))));
  try {
    l.directional_intensity = j.value("directional", l.directional_intensity);
    l.ambient_intensity = j.value("ambient", l.ambient_intensity);
    if (j.contains("direction")) {
      const auto d = j["direction"].get<std::vector<double>>();
      if (d.size() != 3) throw UsageError("lighting.direction needs 3 numbers");
      l.light_direction = {d[0], d[1], d[2]};
    }
    if (j.contains("color")) l.light_color = j["color"].get<std::array<double, 3>>();
    if (j.contains("ambient_color")) l.ambient_color = j["ambient_color"].get<std::array<double, 3>>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("invalid lighting: ") + e.what());
  }
  l.validate();
  return l;
}

SceneConfig build_scene(const json& s) {
  const json section = s.is_null() ? json::object() : s;
  require_keys(section, kSceneKeys, "scene");
  SceneConfig scene;
  try {
    const std::string mesh = section.value("mesh", std::string("builtin:sphere"));
    if (mesh == "builtin:sphere") {
      scene.mesh = std::make_shared<const Mesh>(make_sphere_mesh(12, 24));
    } else if (mesh == "builtin:quad") {
      scene.mesh = std::make_shared<const Mesh>(make_quad_mesh());
    } else {
      if (!fs::exists(mesh)) throw IoError("mesh file not found", mesh);
      scene.mesh = std::make_shared<const Mesh>(load_obj(mesh));
    }
    scene.mesh_id = section.value("mesh_id", fs::path(mesh).stem().string());
    scene.lights = lighting_from_json(section.value("lighting", json()));
    if (section.contains("background")) {
      const json& b = section["background"];
      if (b.is_string()) {
        const std::string path = b.get<std::string>();
        if (!fs::exists(path)) throw IoError("background image not found", path);
        scene.background.image = std::make_shared<const Image>(read_image(path));
        scene.background.image_ref = path;
      } else {
        const auto c = b.get<std::array<float, 3>>();
        scene.background.color = c;
      }
    }
    scene.width = section.value("width", scene.width);
    scene.height = section.value("height", scene.height);
    if (section.contains("half_angle_deg")) scene.camera.half_angle_v = deg_to_rad(section["half_angle_deg"].get<double>());
    scene.camera.camera_z = section.value("camera_z", scene.camera.camera_z);
    if (section.contains("depth_range")) {
      const auto r = section["depth_range"].get<std::vector<double>>();
      if (r.size() != 2) throw UsageError("scene.depth_range needs [min, max]");
      scene.camera.z_min = r[0];
      scene.camera.z_max = r[1];
    }
    const std::string sampling = section.value("sampling", std::string("nearest"));
    if (sampling == "nearest")
      scene.sampling = TextureSampling::kNearest;
    else if (sampling == "bilinear")
      scene.sampling = TextureSampling::kBilinear;
    else
      throw UsageError("scene.sampling must be nearest or bilinear");
    scene.view_yaw = section.value("view_yaw", 0.0);
  } catch (const json::exception& e) {
    throw UsageError(std::string("invalid scene: ") + e.what());
  }
  scene.validate();
  return scene;
}

std::optional<int> scene_true_class(const json& s) {
  if (!s.is_object() || !s.contains("true_class") || s["true_class"].is_null()) return std::nullopt;
  if (!s["true_class"].is_number_integer()) throw UsageError("scene.true_class must be an integer");
  return s["true_class"].get<int>();
}

json scene_params_json(const SceneConfig& scene) {
  const auto& l = scene.lights;
  return {{"lights",
           {{"directional", l.directional_intensity},
            {"ambient", l.ambient_intensity},
            {"direction", {l.light_direction.x, l.light_direction.y, l.light_direction.z}},
            {"color", l.light_color},
            {"ambient_color", l.ambient_color}}},
          {"camera",
           {{"half_angle_v", scene.camera.half_angle_v},
            {"camera_z", scene.camera.camera_z},
            {"depth_range", {scene.camera.z_min, scene.camera.z_max}}}},
          {"view_yaw", scene.view_yaw},
          {"background", {{"color", scene.background.color}, {"image", scene.background.image != nullptr}}},
          {"height", scene.height},
          {"width", scene.width},
          {"sampling", scene.sampling == TextureSampling::kNearest ? "nearest" : "bilinear"}};
}

BackendHandle build_backend(const json& b, bool allow_env_override) {
  json section = b.is_null() ? json::object() : b;
  require_keys(section, kBackendKeys, "backend");
  if (allow_env_override)
    if (const char* env = std::getenv(kBackendEndpointEnv); env && *env) {
      section["kind"] = "external";
      section["endpoint"] = env;
    }
  BackendHandle h;
  h.kind = section.value("kind", std::string("synthetic"));
  try {
    if (h.kind == "synthetic") {
      h.classifier = std::make_shared<SyntheticClassifier>(
          synthetic_config_from_json(section.value("synthetic", json::object())));
    } else if (h.kind == "echo") {
      h.classifier = std::make_shared<EchoClassifier>(section.value("probs", std::vector<double>{0.7, 0.3}),
                                                      section.value("embedding_dim", 4096),
                                                      section.value("labels", std::vector<std::string>{}));
    } else if (h.kind == "external") {
      RemoteOptions opt;
      opt.endpoint = section.value("endpoint", std::string());
      if (opt.endpoint.empty()) throw UsageError("backend.endpoint is required for an external backend");
      opt.pool_size = section.value("pool_size", 1);
      opt.max_attempts = section.value("max_attempts", 3);
      opt.timeout = std::chrono::milliseconds(section.value("timeout_ms", 30000));
      h.endpoint = opt.endpoint;
      auto remote = std::make_shared<RemoteClassifier>(opt);
      h.handshake = remote->handshake();
      h.classifier = remote;
    } else {
      throw UsageError("backend.kind must be synthetic, echo or external (got '" + h.kind + "')");
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("invalid backend: ") + e.what());
  }
  if (h.handshake.is_null()) h.handshake = json::parse(protocol::encode_handshake(h.classifier->info()));
  return h;
}

}  // namespace advpose
