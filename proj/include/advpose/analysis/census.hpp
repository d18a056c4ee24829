#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "advpose/search/search.hpp"

namespace advpose {

struct LightingSetting {
  std::string name;
  LightingConfig lights;
};

// bright (1.2, 1.6), medium (0.4, 1.0), dark (0.2, 0.5) as (directional, ambient).
std::vector<LightingSetting> standard_lighting();

using LabelHistogram = std::map<int, long long>;

struct CensusStats {
  std::string name;
  long long samples = 0;
  long long correct = 0;
  // Percent correct; absent when there are no samples.
  std::optional<double> accuracy;
  LabelHistogram histogram;
  int distinct_labels = 0;
  std::optional<double> median_confidence_correct;
  std::optional<double> median_confidence_incorrect;
};

struct CensusReport {
  std::vector<CensusStats> settings;
  CensusStats pooled;
  // Largest |accuracy(a) - accuracy(b)| over pairs of settings.
  std::optional<double> max_accuracy_difference;
  std::vector<TrialRecord> records;
  bool aborted = false;
  std::string error;
};

// Summarizes classified samples against the ground truth.
CensusStats summarize_census(const std::string& name, const std::vector<TrialRecord>& records, int true_class);

// n random-search samples per lighting setting. Setting i draws its poses
// from a substream named after the setting, so adding a setting does not
// change the others.
CensusReport census(const SceneConfig& scene, Classifier& backend, int n, const std::vector<LightingSetting>& settings,
                    int true_class, std::uint64_t seed, int threads = 1, const RecordSink& sink = nullptr);

nlohmann::json to_json(const CensusStats& stats);
nlohmann::json to_json(const CensusReport& report);
// One row per setting plus the pooled row.
std::string census_csv(const CensusReport& report);

}  // namespace advpose
