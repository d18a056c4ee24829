#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "advpose/classifier/classifier.hpp"
#include "advpose/search/search.hpp"

namespace advpose {

// Source class index -> class index of the other backend.
struct ClassMapping {
  std::map<int, int> source_to_target;

  std::optional<int> map(int source) const;
  // {"source_index": target_index, ...} or [[source, target], ...].
  static ClassMapping from_json(const nlohmann::json& j);
  static ClassMapping load(const std::filesystem::path& path);
};

struct TransferItem {
  long long record_index = 0;
  PoseParams pose;
  int source_label = 0;
  int target_label = 0;  // top-1 of the other backend, in its own indices
  bool misclassified = false;
  bool agrees = false;
};

struct TransferReport {
  long long eligible = 0;
  long long misclassified = 0;
  long long agreements = 0;
  // Percentages; absent when no record passes the filter.
  std::optional<double> misclassification_rate;
  std::optional<double> agreement_rate;
  std::vector<TransferItem> items;
};

// Keeps records the source got wrong (top_label != true_class) with
// confidence >= floor, re-renders each pose, classifies it with backend_b
// and counts misclassifications and top-1 agreement with the source. When
// the class tables differ a mapping is required (UsageError otherwise).
TransferReport transfer(const std::vector<TrialRecord>& records, const SceneConfig& scene,
                        const ClassifierInfo& source_info, Classifier& backend_b, int true_class,
                        double confidence_floor = 0.9, const std::optional<ClassMapping>& mapping = std::nullopt,
                        int threads = 1);

nlohmann::json to_json(const TransferReport& report);

}  // namespace advpose
