#include "advpose/search/records.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "advpose/common/error.hpp"

namespace advpose {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::vector<std::string>& valid, const std::string& what) {
  if (!j.is_object()) throw UsageError(what + " must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (std::find(valid.begin(), valid.end(), key) == valid.end()) {
      std::string list;
      for (const auto& k : valid) list += (list.empty() ? "" : ", ") + k;
      throw UsageError("unknown " + what + " key '" + key + "'; valid keys: " + list);
    }
}

double number_field(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw UsageError(std::string("field '") + key + "' must be a number");
  return j[key].get<double>();
}

}  // namespace

json pose_to_json(const PoseParams& p) {
  return {{"x_delta", p.x_delta}, {"y_delta", p.y_delta}, {"z_delta", p.z_delta},
          {"yaw", p.yaw},         {"pitch", p.pitch},     {"roll", p.roll}};
}

PoseParams pose_from_json(const json& j) {
  PoseParams p;
  if (j.is_array()) {
    if (j.size() != 6) throw UsageError("pose array must have 6 numbers (x, y, z, yaw, pitch, roll)");
    for (std::size_t i = 0; i < 6; ++i) {
      if (!j[i].is_number()) throw UsageError("pose array entries must be numbers");
      set(p, kAllPoseParams[i], j[i].get<double>());
    }
    return p;
  }
  reject_unknown(j, {"x_delta", "y_delta", "z_delta", "yaw", "pitch", "roll"}, "pose");
  p.x_delta = number_field(j, "x_delta", 0.0);
  p.y_delta = number_field(j, "y_delta", 0.0);
  p.z_delta = number_field(j, "z_delta", 0.0);
  p.yaw = number_field(j, "yaw", 0.0);
  p.pitch = number_field(j, "pitch", 0.0);
  p.roll = number_field(j, "roll", 0.0);
  return p;
}

PoseParams parse_pose_csv(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("pose must be 6 comma-separated numbers, got '" + text + "'");
    }
  }
  if (v.size() != 6) throw UsageError("pose must be 6 comma-separated numbers (x,y,z,yaw,pitch,roll)");
  PoseParams p;
  for (std::size_t i = 0; i < 6; ++i) set(p, kAllPoseParams[i], v[i]);
  return p;
}

json to_json(const TrialRecord& r) {
  json j{{"index", r.index},         {"step", r.step},           {"phase", r.phase},
         {"view", r.view},           {"pose", pose_to_json(r.pose)}, {"top_label", r.top_label},
         {"confidence", r.confidence}};
  if (r.target_prob) j["target_prob"] = *r.target_prob;
  if (r.loss) j["loss"] = *r.loss;
  if (r.correct) j["correct"] = *r.correct;
  return j;
}

TrialRecord record_from_json(const json& j) {
  TrialRecord r;
  r.index = j.at("index").get<long long>();
  r.step = j.at("step").get<int>();
  r.phase = j.at("phase").get<std::string>();
  r.view = j.value("view", 0);
  r.pose = pose_from_json(j.at("pose"));
  r.top_label = j.at("top_label").get<int>();
  r.confidence = j.at("confidence").get<double>();
  if (j.contains("target_prob")) r.target_prob = j["target_prob"].get<double>();
  if (j.contains("loss")) r.loss = j["loss"].get<double>();
  if (j.contains("correct")) r.correct = j["correct"].get<bool>();
  return r;
}

std::string to_jsonl_line(const TrialRecord& r) { return to_json(r).dump() + "\n"; }

void write_jsonl(const std::filesystem::path& path, const std::vector<TrialRecord>& records) {
  JsonlWriter w(path);
  for (const auto& r : records) w.write(r);
}

std::vector<TrialRecord> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open records file", path.string());
  std::vector<TrialRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ": invalid record: " + e.what(), lineno);
    }
  }
  return out;
}

JsonlWriter::JsonlWriter(const std::filesystem::path& path) : path_(path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  file_ = std::fopen(path.c_str(), "wb");
  if (!file_) throw IoError("cannot open for writing", path.string());
}

JsonlWriter::~JsonlWriter() {
  if (file_) std::fclose(file_);
}

void JsonlWriter::write(const TrialRecord& record) {
  const std::string line = to_jsonl_line(record);
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0)
    throw IoError("write failed", path_.string());
}

RecordSink JsonlWriter::sink() {
  return [this](const TrialRecord& r) { write(r); };
}

json to_json(const SearchConfig& c) {
  json overrides = json::object();
  for (std::size_t i = 0; i < c.fd_step_overrides.size(); ++i)
    if (c.fd_step_overrides[i]) overrides[std::string(kTrigNames[i])] = *c.fd_step_overrides[i];
  json j{{"mode", mode_name(c.mode)},
         {"budget", c.budget},
         {"seed", c.seed},
         {"fd_step", c.fd_step},
         {"fd_step_overrides", overrides},
         {"learning_rate", c.learning_rate},
         {"zrs_levels", c.zrs_levels},
         {"zrs_samples_per_level", c.zrs_samples_per_level},
         {"views", c.views},
         {"threads", c.threads}};
  j["target_class"] = c.target_class ? json(*c.target_class) : json(nullptr);
  j["true_class"] = c.true_class ? json(*c.true_class) : json(nullptr);
  j["depth_range"] = c.depth_range ? json::array({c.depth_range->first, c.depth_range->second}) : json(nullptr);
  return j;
}

SearchConfig search_config_from_json(const json& j) {
  reject_unknown(j,
                 {"mode", "budget", "seed", "fd_step", "fd_step_overrides", "learning_rate", "zrs_levels",
                  "zrs_samples_per_level", "views", "threads", "target_class", "true_class", "depth_range"},
                 "search");
  SearchConfig c;
  try {
    if (j.contains("mode")) c.mode = parse_mode(j["mode"].get<std::string>());
    c.budget = j.value("budget", c.budget);
    c.seed = j.value("seed", c.seed);
    c.fd_step = j.value("fd_step", c.fd_step);
    if (j.contains("fd_step_overrides"))
      for (const auto& [name, v] : j["fd_step_overrides"].items()) {
        const auto it = std::find(kTrigNames.begin(), kTrigNames.end(), name);
        if (it == kTrigNames.end()) throw UsageError("unknown fd_step_overrides key '" + name + "'");
        c.fd_step_overrides[static_cast<std::size_t>(it - kTrigNames.begin())] = v.get<double>();
      }
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.zrs_levels = j.value("zrs_levels", c.zrs_levels);
    c.zrs_samples_per_level = j.value("zrs_samples_per_level", c.zrs_samples_per_level);
    c.views = j.value("views", c.views);
    c.threads = j.value("threads", c.threads);
    if (j.contains("target_class") && !j["target_class"].is_null()) c.target_class = j["target_class"].get<int>();
    if (j.contains("true_class") && !j["true_class"].is_null()) c.true_class = j["true_class"].get<int>();
    if (j.contains("depth_range") && !j["depth_range"].is_null())
      c.depth_range = {j["depth_range"].at(0).get<double>(), j["depth_range"].at(1).get<double>()};
  } catch (const json::exception& e) {
    throw UsageError(std::string("invalid search config: ") + e.what());
  }
  return c;
}

json summary_json(const SearchResult& r) {
  json j{{"records", r.records.size()}, {"evaluations", r.evaluations}, {"hit", r.hit},
         {"max_target_prob", r.max_target_prob}, {"aborted", r.aborted}};
  if (r.best_pose) j["best_pose"] = pose_to_json(*r.best_pose);
  if (r.init_pose) {
    j["init_pose"] = pose_to_json(*r.init_pose);
    j["init_target_prob"] = r.init_target_prob;
  }
  if (!r.levels.empty()) {
    j["levels"] = r.levels;
    j["level_max_target_prob"] = r.level_max_target_prob;
  }
  if (r.refined_z_range) j["refined_z_range"] = {r.refined_z_range->first, r.refined_z_range->second};
  if (r.aborted) j["error"] = r.error;
  return j;
}

}  // namespace advpose
