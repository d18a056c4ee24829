#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "advpose/classifier/classifier.hpp"
#include "advpose/render/scene.hpp"

namespace advpose {

struct YawSweepView {
  double distance = 0.0;
  double yaw_deg = 0.0;
  int top_label = 0;
  double confidence = 0.0;
  bool top1 = false;
  bool top5 = false;
};

struct YawSweepSummary {
  double top1_accuracy = 0.0;  // percent
  double top5_accuracy = 0.0;  // percent
  double mean_confidence = 0.0;  // of the top-1 prediction
};

struct YawSweepReport {
  std::vector<double> distances;
  std::vector<YawSweepView> views;
  std::vector<YawSweepSummary> per_distance;
  YawSweepSummary average;  // over distances
};

// Object at (0, 0, -d) for each distance d, yaw = first + k * step for k in
// [0, count), other angles zero. Defaults: d in {4, 6, 8}, yaw 10 deg + k*30
// deg, 12 yaws: 36 views.
YawSweepReport yaw_sweep_eval(const SceneConfig& scene, Classifier& backend, int true_class,
                              const std::vector<double>& distances = {4.0, 6.0, 8.0}, double first_yaw_deg = 10.0,
                              double step_deg = 30.0, int count = 12, int threads = 1);

nlohmann::json to_json(const YawSweepReport& report);
// Distance columns plus the average, rows top-1 accuracy, top-5 accuracy,
// top-1 mean confidence.
std::string yaw_sweep_csv(const YawSweepReport& report);

}  // namespace advpose
