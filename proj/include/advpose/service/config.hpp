#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "advpose/classifier/classifier.hpp"
#include "advpose/render/scene.hpp"

namespace advpose {

// Environment variable that replaces the configured backend with an
// external one at this endpoint.
inline constexpr const char* kBackendEndpointEnv = "ADVPOSE_BACKEND_ENDPOINT";

// Reads a TOML (.toml) or JSON (any other extension) experiment file into
// JSON. IoError if missing, FormatError if unparsable.
nlohmann::json load_config_file(const std::filesystem::path& path);

// "a.b.c=value": value is parsed as JSON when possible, else taken as a
// string. UsageError on malformed input.
void apply_override(nlohmann::json& config, const std::string& assignment);

// Rejects unknown keys at the top level and in every known section.
void validate_config(const nlohmann::json& config);

// Throws UsageError naming the unknown key and listing the valid ones.
void require_keys(const nlohmann::json& object, const std::vector<std::string>& valid, const std::string& section);

// Rewrites relative file paths (scene mesh, background) against base_dir so
// the result can be replayed from anywhere.
nlohmann::json resolve_paths(nlohmann::json config, const std::filesystem::path& base_dir);

LightingConfig lighting_from_json(const nlohmann::json& j);

// Scene section -> renderer scene. Mesh "builtin:sphere" and "builtin:quad"
// need no file. Missing files raise IoError naming the path.
SceneConfig build_scene(const nlohmann::json& scene_section);
std::optional<int> scene_true_class(const nlohmann::json& scene_section);

// Canonical JSON of the scene parameters (everything but mesh content).
nlohmann::json scene_params_json(const SceneConfig& scene);

struct BackendHandle {
  std::shared_ptr<Classifier> classifier;
  std::string kind;
  std::string endpoint;
  nlohmann::json handshake;
};

// Backend section -> classifier. kind is synthetic, echo or external. The
// endpoint environment variable, when set, forces an external backend.
BackendHandle build_backend(const nlohmann::json& backend_section, bool allow_env_override = true);

}  // namespace advpose
