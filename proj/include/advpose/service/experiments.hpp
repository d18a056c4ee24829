#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "advpose/classifier/classifier.hpp"
#include "advpose/search/search.hpp"
#include "advpose/service/manifest.hpp"

namespace advpose {

// census, landscape, sensitivity, attack, transfer, yaw-sweep, neighbors
const std::vector<std::string>& experiment_commands();

struct ExperimentOptions {
  // Receives every record in order, as written to records.jsonl.
  RecordSink sink;
  // Used instead of building the configured backend.
  std::shared_ptr<Classifier> backend;
  nlohmann::json backend_handshake;
  // Fixed run id; generated when empty.
  std::string run_id;
};

struct ExperimentResult {
  RunManifest manifest;
  nlohmann::json summary;
};

// Runs one experiment from a validated config whose paths are absolute and
// writes records.jsonl (when the experiment produces records), summary.json,
// the experiment's CSV/PNG artifacts and manifest.json into out_dir.
// Everything random derives from the config's seed.
ExperimentResult run_experiment(const std::string& command, const nlohmann::json& config,
                                const std::filesystem::path& out_dir, const ExperimentOptions& options = {});

}  // namespace advpose
