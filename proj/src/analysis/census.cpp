#include "advpose/analysis/census.hpp"

#include <cmath>
#include <sstream>

#include "advpose/common/error.hpp"
#include "advpose/common/stats.hpp"

namespace advpose {

std::vector<LightingSetting> standard_lighting() {
  std::vector<LightingSetting> out;
  for (LightingPreset p : {LightingPreset::kBright, LightingPreset::kMedium, LightingPreset::kDark})
    out.push_back({std::string(preset_name(p)), LightingConfig::preset(p)});
  return out;
}

CensusStats summarize_census(const std::string& name, const std::vector<TrialRecord>& records, int true_class) {
  CensusStats s;
  s.name = name;
  std::vector<double> conf_ok, conf_bad;
  for (const auto& r : records) {
    ++s.samples;
    ++s.histogram[r.top_label];
    if (r.top_label == true_class) {
      ++s.correct;
      conf_ok.push_back(r.confidence);
    } else {
      conf_bad.push_back(r.confidence);
    }
  }
  if (s.samples > 0) s.accuracy = 100.0 * static_cast<double>(s.correct) / static_cast<double>(s.samples);
  s.distinct_labels = static_cast<int>(s.histogram.size());
  s.median_confidence_correct = median(conf_ok);
  s.median_confidence_incorrect = median(conf_bad);
  return s;
}

CensusReport census(const SceneConfig& scene, Classifier& backend, int n, const std::vector<LightingSetting>& settings,
                    int true_class, std::uint64_t seed, int threads, const RecordSink& sink) {
  if (n < 0) throw UsageError("census sample count must be >= 0");
  if (true_class < 0 || true_class >= backend.info().num_classes) throw UsageError("true_class outside the class table");
  CensusReport report;
  std::vector<TrialRecord> all;
  for (const auto& setting : settings) {
    std::vector<TrialRecord> recs;
    if (n > 0 && !report.aborted) {
      SceneConfig lit = scene;
      lit.lights = setting.lights;
      SearchConfig cfg;
      cfg.mode = SearchMode::kRS;
      cfg.budget = n;
      cfg.true_class = true_class;
      cfg.seed = Rng::substream(seed, "census-" + setting.name).next_u64();
      cfg.threads = threads;
      RecordSink tagged;
      if (sink)
        tagged = [&, base = static_cast<long long>(all.size()), name = setting.name](const TrialRecord& r) {
          TrialRecord copy = r;
          copy.index += base;
          copy.phase = "census:" + name;
          sink(copy);
        };
      SearchResult res = run_random_search(lit, backend, cfg, tagged);
      if (res.aborted) {
        report.aborted = true;
        report.error = res.error;
      }
      recs = std::move(res.records);
      for (auto& r : recs) {
        r.index += static_cast<long long>(all.size());
        r.phase = "census:" + setting.name;
      }
    }
    report.settings.push_back(summarize_census(setting.name, recs, true_class));
    all.insert(all.end(), recs.begin(), recs.end());
  }
  report.pooled = summarize_census("pooled", all, true_class);
  for (std::size_t a = 0; a < report.settings.size(); ++a)
    for (std::size_t b = a + 1; b < report.settings.size(); ++b)
      if (report.settings[a].accuracy && report.settings[b].accuracy) {
        const double d = std::abs(*report.settings[a].accuracy - *report.settings[b].accuracy);
        if (!report.max_accuracy_difference || d > *report.max_accuracy_difference) report.max_accuracy_difference = d;
      }
  report.records = std::move(all);
  return report;
}

namespace {

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::string csv_opt(const std::optional<double>& v) {
  if (!v) return "undefined";
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << *v;
  return os.str();
}

}  // namespace

nlohmann::json to_json(const CensusStats& s) {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [label, count] : s.histogram) hist[std::to_string(label)] = count;
  return {{"name", s.name},
          {"samples", s.samples},
          {"correct", s.correct},
          {"accuracy", opt(s.accuracy)},
          {"distinct_labels", s.distinct_labels},
          {"median_confidence_correct", opt(s.median_confidence_correct)},
          {"median_confidence_incorrect", opt(s.median_confidence_incorrect)},
          {"histogram", hist}};
}

nlohmann::json to_json(const CensusReport& r) {
  nlohmann::json settings = nlohmann::json::array();
  for (const auto& s : r.settings) settings.push_back(to_json(s));
  nlohmann::json j{{"settings", settings},
                   {"pooled", to_json(r.pooled)},
                   {"max_accuracy_difference", opt(r.max_accuracy_difference)},
                   {"aborted", r.aborted}};
  if (r.aborted) j["error"] = r.error;
  return j;
}

std::string census_csv(const CensusReport& r) {
  std::ostringstream os;
  os << "setting,samples,correct,accuracy_pct,distinct_labels,median_conf_correct,median_conf_incorrect\n";
  auto row = [&](const CensusStats& s) {
    os << s.name << ',' << s.samples << ',' << s.correct << ',' << csv_opt(s.accuracy) << ',' << s.distinct_labels
       << ',' << csv_opt(s.median_confidence_correct) << ',' << csv_opt(s.median_confidence_incorrect) << '\n';
  };
  for (const auto& s : r.settings) row(s);
  row(r.pooled);
  return os.str();
}

}  // namespace advpose
