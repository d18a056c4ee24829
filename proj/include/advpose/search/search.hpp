#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "advpose/classifier/classifier.hpp"
#include "advpose/common/rng.hpp"
#include "advpose/geometry/pose.hpp"
#include "advpose/render/scene.hpp"

namespace advpose {

enum class SearchMode { kRS, kZRSInit, kZRSAttack, kFDG, kMultiView };

std::string_view mode_name(SearchMode m);
// Accepts rs, zrs_init, zrs_attack, fdg, multiview (and zrs for zrs_attack).
SearchMode parse_mode(std::string_view name);

struct SearchConfig {
  SearchMode mode = SearchMode::kRS;
  // RS / ZRS_attack: evaluations. FDG / multi-view: descent steps.
  int budget = 100;
  std::optional<int> target_class;
  // Ground truth of the scene; when set, records carry a correct flag.
  std::optional<int> true_class;
  std::uint64_t seed = 0;
  // Central-difference step, uniform unless overridden per trig parameter.
  double fd_step = 1e-3;
  std::array<std::optional<double>, 9> fd_step_overrides{};
  double learning_rate = 1e-3;
  // Overrides the scene camera's depth range when set.
  std::optional<std::pair<double, double>> depth_range;
  int zrs_levels = 30;
  int zrs_samples_per_level = 10;
  // Number of camera views for multi-view descent.
  int views = 6;
  // Worker threads for independent evaluations. Results do not depend on it.
  int threads = 1;

  // Throws UsageError naming the offending field.
  void validate() const;
  std::array<double, 9> fd_steps() const;
};

struct TrialRecord {
  long long index = 0;  // position in the run's record sequence
  int step = 0;         // sample index, or descent step
  std::string phase;    // rs, zrs_init, zrs_attack, fdg, multiview
  int view = 0;
  PoseParams pose;
  int top_label = 0;
  double confidence = 0.0;
  std::optional<double> target_prob;
  std::optional<double> loss;
  std::optional<bool> correct;
  double wall_time = 0.0;  // seconds since run start; not persisted
};

// Receives records in index order as they become final.
using RecordSink = std::function<void(const TrialRecord&)>;

struct SearchResult {
  std::vector<TrialRecord> records;
  // Backend calls (classify) made by the run.
  long long evaluations = 0;
  // Best pose by target probability (targeted runs) and whether the target
  // was ever top-1.
  std::optional<PoseParams> best_pose;
  double max_target_prob = 0.0;
  bool hit = false;
  // ZRS: per-level maximum target probability and the refined depth range.
  std::vector<double> level_max_target_prob;
  std::vector<double> levels;
  std::optional<std::pair<double, double>> refined_z_range;
  // ZRS: best pose of the level sweep (the FDG starting point).
  std::optional<PoseParams> init_pose;
  double init_target_prob = 0.0;
  // Set when the backend failed; records hold everything finished before.
  bool aborted = false;
  std::string error;
};

FrustumSpec effective_frustum(const SceneConfig& scene, const SearchConfig& cfg);

// Angles uniform on (0, 2pi), z uniform on the depth range, x and y uniform
// on [-s, s] at the drawn depth.
PoseParams sample_random_pose(Rng& rng, const FrustumSpec& spec);
// Same, with z fixed.
PoseParams sample_pose_at_depth(Rng& rng, const FrustumSpec& spec, double z);

// One render plus one classification.
ClassifierResponse evaluate_pose(const SceneConfig& scene, Classifier& backend, const PoseParams& pose);

// Pose actually rendered for a trig-encoded point: decoded, then clamped
// into the frustum.
PoseParams render_pose(const TrigPose& tp, const FrustumSpec& spec);

using TrigObjective = std::function<double(const TrigPose&)>;

// Central differences [f(w + h_i/2 e_i) - f(w - h_i/2 e_i)] / h_i; exactly 18
// objective calls, made in parameter order (plus before minus) when
// threads == 1.
std::array<double, 9> fd_gradient(const TrigObjective& f, const TrigPose& tp, const std::array<double, 9>& h,
                                  int threads = 1);

// Cross-entropy of the target class at the rendered pose.
std::array<double, 9> fd_gradient(const SceneConfig& scene, Classifier& backend, const TrigPose& tp, int target,
                                  const std::array<double, 9>& h, int threads = 1);

SearchResult run_random_search(const SceneConfig& scene, Classifier& backend, const SearchConfig& cfg,
                               const RecordSink& sink = nullptr);

// ZRS_init: the level sweep only; best_pose is the initialization.
// ZRS_attack: the sweep followed by cfg.budget random evaluations with z in
// the closed interval between the two best levels.
SearchResult run_zrs(const SceneConfig& scene, Classifier& backend, const SearchConfig& cfg,
                     const RecordSink& sink = nullptr);

// Vanilla gradient descent on the trig encoding; cfg.budget steps, each one
// objective evaluation (recorded) and one 18-call gradient. No early stop.
SearchResult run_fdg(const SceneConfig& scene, Classifier& backend, const SearchConfig& cfg, const PoseParams& init,
                     const RecordSink& sink = nullptr);

// The scene seen from k cameras spaced evenly in yaw around the object.
std::vector<SceneConfig> make_views(const SceneConfig& scene, int k);

// Per step: the loss in every view, the gradient in every view, and the
// update from the view whose loss is lowest (ties to the lower view index).
// Hit and maximum target probability refer to view 0.
SearchResult run_multiview_fdg(const std::vector<SceneConfig>& views, Classifier& backend, const SearchConfig& cfg,
                               const PoseParams& init, const RecordSink& sink = nullptr);

}  // namespace advpose
