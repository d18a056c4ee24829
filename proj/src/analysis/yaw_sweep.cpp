#include "advpose/analysis/yaw_sweep.hpp"

#include <algorithm>
#include <sstream>

#include "advpose/common/error.hpp"
#include "advpose/common/parallel.hpp"
#include "advpose/search/search.hpp"

namespace advpose {

YawSweepReport yaw_sweep_eval(const SceneConfig& scene, Classifier& backend, int true_class,
                              const std::vector<double>& distances, double first_yaw_deg, double step_deg, int count,
                              int threads) {
  if (distances.empty() || count < 1) throw UsageError("yaw sweep needs at least one distance and one yaw");
  YawSweepReport report;
  report.distances = distances;
  for (double d : distances)
    for (int k = 0; k < count; ++k) report.views.push_back({d, first_yaw_deg + k * step_deg});

  parallel_for(report.views.size(), threads, [&](std::size_t i) {
    auto& v = report.views[i];
    PoseParams pose;
    pose.z_delta = scene.camera.camera_z - v.distance;
    pose.yaw = wrap_angle(deg_to_rad(v.yaw_deg));
    const ClassifierResponse r = evaluate_pose(scene, backend, pose);
    v.top_label = r.top_label;
    v.confidence = r.confidence();
    v.top1 = r.top_label == true_class;
    const auto top = r.top_k(5);
    v.top5 = std::find(top.begin(), top.end(), true_class) != top.end();
  });

  auto summarize = [](const std::vector<const YawSweepView*>& vs) {
    YawSweepSummary s;
    for (const auto* v : vs) {
      s.top1_accuracy += v->top1;
      s.top5_accuracy += v->top5;
      s.mean_confidence += v->confidence;
    }
    const double n = static_cast<double>(vs.size());
    s.top1_accuracy *= 100.0 / n;
    s.top5_accuracy *= 100.0 / n;
    s.mean_confidence /= n;
    return s;
  };
  for (double d : distances) {
    std::vector<const YawSweepView*> vs;
    for (const auto& v : report.views)
      if (v.distance == d) vs.push_back(&v);
    report.per_distance.push_back(summarize(vs));
  }
  for (const auto& s : report.per_distance) {
    report.average.top1_accuracy += s.top1_accuracy / report.per_distance.size();
    report.average.top5_accuracy += s.top5_accuracy / report.per_distance.size();
    report.average.mean_confidence += s.mean_confidence / report.per_distance.size();
  }
  return report;
}

nlohmann::json to_json(const YawSweepReport& r) {
  auto summary = [](const YawSweepSummary& s) {
    return nlohmann::json{{"top1_accuracy", s.top1_accuracy},
                          {"top5_accuracy", s.top5_accuracy},
                          {"mean_confidence", s.mean_confidence}};
  };
  nlohmann::json views = nlohmann::json::array();
  for (const auto& v : r.views)
    views.push_back({{"distance", v.distance},
                     {"yaw_deg", v.yaw_deg},
                     {"top_label", v.top_label},
                     {"confidence", v.confidence},
                     {"top1", v.top1},
                     {"top5", v.top5}});
  nlohmann::json per = nlohmann::json::array();
  for (std::size_t i = 0; i < r.per_distance.size(); ++i) {
    nlohmann::json s = summary(r.per_distance[i]);
    s["distance"] = r.distances[i];
    per.push_back(s);
  }
  return {{"views", views}, {"per_distance", per}, {"average", summary(r.average)}};
}

std::string yaw_sweep_csv(const YawSweepReport& r) {
  std::ostringstream os;
  os.precision(4);
  os << std::fixed << "metric";
  for (double d : r.distances) os << ",d=" << d;
  os << ",average\n";
  auto row = [&](const char* name, double YawSweepSummary::*field) {
    os << name;
    for (const auto& s : r.per_distance) os << ',' << s.*field;
    os << ',' << r.average.*field << '\n';
  };
  row("top1_accuracy_pct", &YawSweepSummary::top1_accuracy);
  row("top5_accuracy_pct", &YawSweepSummary::top5_accuracy);
  row("top1_mean_confidence", &YawSweepSummary::mean_confidence);
  return os.str();
}

}  // namespace advpose
