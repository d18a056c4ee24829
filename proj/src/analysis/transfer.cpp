#include "advpose/analysis/transfer.hpp"

#include <fstream>

#include "advpose/common/error.hpp"
#include "advpose/common/parallel.hpp"
#include "advpose/search/records.hpp"

namespace advpose {

std::optional<int> ClassMapping::map(int source) const {
  const auto it = source_to_target.find(source);
  if (it == source_to_target.end()) return std::nullopt;
  return it->second;
}

ClassMapping ClassMapping::from_json(const nlohmann::json& j) {
  ClassMapping m;
  try {
    if (j.is_object()) {
      for (const auto& [k, v] : j.items()) m.source_to_target[std::stoi(k)] = v.get<int>();
    } else if (j.is_array()) {
      for (const auto& pair : j) m.source_to_target[pair.at(0).get<int>()] = pair.at(1).get<int>();
    } else {
      throw UsageError("class mapping must be an object or an array of pairs");
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("invalid class mapping: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw UsageError("class mapping keys must be integer class indices");
  }
  return m;
}

ClassMapping ClassMapping::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open class mapping", path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw FormatError("class mapping is not valid JSON: " + path.string());
  return from_json(j);
}

TransferReport transfer(const std::vector<TrialRecord>& records, const SceneConfig& scene,
                        const ClassifierInfo& source_info, Classifier& backend_b, int true_class,
                        double confidence_floor, const std::optional<ClassMapping>& mapping, int threads) {
  const ClassifierInfo& info_b = backend_b.info();
  const bool same_table = source_info.labels == info_b.labels;
  if (!same_table && !mapping)
    throw UsageError("class tables differ between the source and the transfer backend; supply a class mapping file");
  auto to_b = [&](int source) -> std::optional<int> { return same_table && !mapping ? source : mapping->map(source); };
  const std::optional<int> truth_b = to_b(true_class);
  if (!truth_b) throw UsageError("class mapping has no entry for the true class " + std::to_string(true_class));

  TransferReport report;
  for (const auto& r : records)
    if (r.top_label != true_class && r.confidence >= confidence_floor)
      report.items.push_back({r.index, r.pose, r.top_label, 0, false, false});
  report.eligible = static_cast<long long>(report.items.size());

  parallel_for(report.items.size(), threads, [&](std::size_t i) {
    auto& item = report.items[i];
    const ClassifierResponse resp = evaluate_pose(scene, backend_b, item.pose);
    item.target_label = resp.top_label;
    item.misclassified = resp.top_label != *truth_b;
    const std::optional<int> source_in_b = to_b(item.source_label);
    item.agrees = source_in_b && *source_in_b == resp.top_label;
  });
  for (const auto& item : report.items) {
    report.misclassified += item.misclassified;
    report.agreements += item.agrees;
  }
  if (report.eligible > 0) {
    report.misclassification_rate = 100.0 * static_cast<double>(report.misclassified) / report.eligible;
    report.agreement_rate = 100.0 * static_cast<double>(report.agreements) / report.eligible;
  }
  return report;
}

nlohmann::json to_json(const TransferReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json items = nlohmann::json::array();
  for (const auto& it : r.items)
    items.push_back({{"record_index", it.record_index},
                     {"pose", pose_to_json(it.pose)},
                     {"source_label", it.source_label},
                     {"target_label", it.target_label},
                     {"misclassified", it.misclassified},
                     {"agrees", it.agrees}});
  return {{"eligible", r.eligible},
          {"misclassified", r.misclassified},
          {"agreements", r.agreements},
          {"misclassification_rate", opt(r.misclassification_rate)},
          {"agreement_rate", opt(r.agreement_rate)},
          {"items", items}};
}

}  // namespace advpose
