#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "advpose/render/scene.hpp"

namespace advpose {

struct RunManifest {
  std::string run_id;
  std::string command;
  // Full experiment config with file paths made absolute.
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::string scene_hash;
  nlohmann::json backend_handshake;
  std::string started_at;  // UTC, ISO 8601
  std::string finished_at;
  std::vector<std::string> outputs;  // file names relative to the run directory
  std::string status = "ok";
  std::string error;
};

// SHA-256 (hex) of mesh geometry, texture pixels, background pixels and the
// canonical scene parameters.
std::string scene_hash(const SceneConfig& scene);

std::string make_run_id();
std::string utc_timestamp();

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

void write_manifest(const std::filesystem::path& path, const RunManifest& m);
RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace advpose
