#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "advpose/classifier/classifier.hpp"
#include "advpose/common/rng.hpp"
#include "advpose/render/scene.hpp"

namespace advpose {

// One resampled value of a single parameter at a correctly classified start.
struct ResampleOutcome {
  double value = 0.0;
  // |change| from the start value; circular distance for angles.
  double delta = 0.0;
  bool misclassified = false;
  // Change in interpretable units (pixels, % bbox area, degrees); only
  // needed for the outcome that realizes the minimum.
  std::optional<double> interpretable;
};

struct ParamOutcomes {
  PoseParam param = PoseParam::kX;
  std::vector<ResampleOutcome> outcomes;
};

struct ParamSensitivity {
  PoseParam param = PoseParam::kX;
  // Percent of resamples misclassified.
  double failure_rate = 0.0;
  // Smallest delta among misclassified resamples; absent if none failed.
  std::optional<double> min_delta;
  std::optional<double> interpretable_delta;
};

struct StartSensitivity {
  PoseParams start;
  std::array<ParamSensitivity, 6> params;
};

struct ObjectSensitivity {
  std::string object_id;
  std::vector<StartSensitivity> starts;
  int skipped_starts = 0;
  std::vector<std::string> warnings;
  // Medians over starts; min-delta medians skip starts without a failure.
  std::array<std::optional<double>, 6> median_failure_rate{};
  std::array<std::optional<double>, 6> median_min_delta{};
  std::array<std::optional<double>, 6> median_interpretable_delta{};
};

struct SensitivityReport {
  std::vector<ObjectSensitivity> objects;
  // Medians over objects of the per-object medians.
  std::array<std::optional<double>, 6> failure_rate{};
  std::array<std::optional<double>, 6> min_delta{};
  std::array<std::optional<double>, 6> interpretable_delta{};
};

struct SensitivityOptions {
  int n_starts = 100;
  int n_resamples = 100;
  std::uint64_t seed = 0;
  // Random-search draws allowed while looking for correctly classified
  // starts; 0 means 1000 per requested start.
  long long max_start_attempts = 0;
  int threads = 1;
};

// |a - b|, or circular distance for angles.
double parameter_delta(PoseParam p, double a, double b);

// Failure rate and min delta; ties on delta go to the earlier outcome.
ParamSensitivity summarize_param(const ParamOutcomes& outcomes);
// Fills the per-object medians from its starts.
void aggregate_starts(ObjectSensitivity& object);
SensitivityReport aggregate_objects(std::vector<ObjectSensitivity> objects);

// Resample ranges follow random search: angles on (0, 2pi), x and y on
// [-s, s] at the start depth, z on the part of the depth range where the
// start's x and y remain inside the frustum.
double resample_value(Rng& rng, PoseParam p, const PoseParams& start, const FrustumSpec& frustum);

// Interpretable size of changing `param` from start to changed: pixel shift
// of the projected object centre (x, y), percent change of the coverage
// bounding-box area (z), degrees (angles). Absent when undefined.
std::optional<double> interpretable_delta(const SceneConfig& scene, PoseParam param, const PoseParams& start,
                                          const PoseParams& changed);

// Per-start analysis for one object. Starts that the backend does not
// classify as true_class are skipped with a warning.
ObjectSensitivity sensitivity_from_starts(const SceneConfig& scene, Classifier& backend, int true_class,
                                          const std::vector<PoseParams>& starts, const SensitivityOptions& options,
                                          const std::string& object_id = "object");

// Draws starts from random-search hits, then analyses them.
ObjectSensitivity sensitivity(const SceneConfig& scene, Classifier& backend, int true_class,
                              const SensitivityOptions& options, const std::string& object_id = "object");

nlohmann::json to_json(const SensitivityReport& report);
// Rows per parameter: median failure rate, median min delta in native and
// interpretable units.
std::string sensitivity_csv(const SensitivityReport& report);

}  // namespace advpose
