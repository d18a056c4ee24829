#pragma once

#include <cstdio>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "advpose/search/search.hpp"

namespace advpose {

nlohmann::json pose_to_json(const PoseParams& pose);
// Accepts {"x_delta", "y_delta", "z_delta", "yaw", "pitch", "roll"} (missing
// fields are zero) or a 6-element array. Unknown keys raise UsageError.
PoseParams pose_from_json(const nlohmann::json& j);
// "x,y,z,yaw,pitch,roll"
PoseParams parse_pose_csv(const std::string& text);

// wall_time is left out so that replays produce identical bytes.
nlohmann::json to_json(const TrialRecord& record);
TrialRecord record_from_json(const nlohmann::json& j);

std::string to_jsonl_line(const TrialRecord& record);
void write_jsonl(const std::filesystem::path& path, const std::vector<TrialRecord>& records);
std::vector<TrialRecord> read_jsonl(const std::filesystem::path& path);

// Appends each record to a JSONL file as it arrives and flushes, so a run
// that dies midway leaves its finished records on disk.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::filesystem::path& path);
  ~JsonlWriter();
  void write(const TrialRecord& record);
  RecordSink sink();

 private:
  std::FILE* file_;
  std::filesystem::path path_;
};

nlohmann::json to_json(const SearchConfig& cfg);
// Unknown keys raise UsageError listing the valid ones.
SearchConfig search_config_from_json(const nlohmann::json& j);

// Summary of a run without its records.
nlohmann::json summary_json(const SearchResult& result);

}  // namespace advpose
