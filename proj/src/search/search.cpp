#include "advpose/search/search.hpp"

#include <chrono>
#include <cmath>

#include "advpose/common/error.hpp"
#include "advpose/common/parallel.hpp"
#include "advpose/common/stats.hpp"
#include "advpose/render/renderer.hpp"

namespace advpose {

std::string_view mode_name(SearchMode m) {
  switch (m) {
    case SearchMode::kRS:
      return "rs";
    case SearchMode::kZRSInit:
      return "zrs_init";
    case SearchMode::kZRSAttack:
      return "zrs_attack";
    case SearchMode::kFDG:
      return "fdg";
    case SearchMode::kMultiView:
      return "multiview";
  }
  return "?";
}

SearchMode parse_mode(std::string_view name) {
  if (name == "rs") return SearchMode::kRS;
  if (name == "zrs_init") return SearchMode::kZRSInit;
  if (name == "zrs_attack" || name == "zrs") return SearchMode::kZRSAttack;
  if (name == "fdg") return SearchMode::kFDG;
  if (name == "multiview") return SearchMode::kMultiView;
  throw UsageError("unknown search mode '" + std::string(name) + "' (expected rs, zrs_init, zrs_attack, fdg, multiview)");
}

void SearchConfig::validate() const {
  if (budget < 1) throw UsageError("budget must be >= 1");
  if (!(fd_step > 0.0)) throw UsageError("fd_step (h) must be > 0");
  for (std::size_t i = 0; i < fd_step_overrides.size(); ++i)
    if (fd_step_overrides[i] && !(*fd_step_overrides[i] > 0.0))
      throw UsageError("fd_step override for " + std::string(kTrigNames[i]) + " must be > 0");
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be > 0");
  if (zrs_levels < 2) throw UsageError("zrs_levels must be >= 2");
  if (zrs_samples_per_level < 1) throw UsageError("zrs_samples_per_level must be >= 1");
  if (views < 1) throw UsageError("views must be >= 1");
  if (threads < 1) throw UsageError("threads must be >= 1");
  if (depth_range && !(depth_range->first <= depth_range->second))
    throw UsageError("depth_range must satisfy min <= max");
  if (target_class && *target_class < 0) throw UsageError("target_class must be >= 0");
}

std::array<double, 9> SearchConfig::fd_steps() const {
  std::array<double, 9> h;
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = fd_step_overrides[i].value_or(fd_step);
  return h;
}

FrustumSpec effective_frustum(const SceneConfig& scene, const SearchConfig& cfg) {
  FrustumSpec spec = scene.camera;
  if (cfg.depth_range) {
    spec.z_min = cfg.depth_range->first;
    spec.z_max = cfg.depth_range->second;
  }
  spec.validate();
  return spec;
}

namespace {

double uniform_angle(Rng& rng) { return kTwoPi * rng.uniform_open01(); }

}  // namespace

PoseParams sample_pose_at_depth(Rng& rng, const FrustumSpec& spec, double z) {
  const double s = frustum_bound(spec, z);
  PoseParams p;
  p.z_delta = z;
  p.x_delta = rng.uniform(-s, s);
  p.y_delta = rng.uniform(-s, s);
  p.yaw = uniform_angle(rng);
  p.pitch = uniform_angle(rng);
  p.roll = uniform_angle(rng);
  return p;
}

PoseParams sample_random_pose(Rng& rng, const FrustumSpec& spec) {
  const double z = rng.uniform(spec.z_min, spec.z_max);
  return sample_pose_at_depth(rng, spec, z);
}

ClassifierResponse evaluate_pose(const SceneConfig& scene, Classifier& backend, const PoseParams& pose) {
  return backend.classify(render(scene, pose));
}

PoseParams render_pose(const TrigPose& tp, const FrustumSpec& spec) { return clamp_to_frustum(decode_trig(tp), spec); }

std::array<double, 9> fd_gradient(const TrigObjective& f, const TrigPose& tp, const std::array<double, 9>& h,
                                  int threads) {
  std::array<double, 18> values{};
  parallel_for(18, threads, [&](std::size_t k) {
    const std::size_t i = k / 2;
    TrigPose probe = tp;
    probe.values[i] += (k % 2 == 0 ? 0.5 : -0.5) * h[i];
    values[k] = f(probe);
  });
  std::array<double, 9> g{};
  for (std::size_t i = 0; i < 9; ++i) g[i] = (values[2 * i] - values[2 * i + 1]) / h[i];
  return g;
}

std::array<double, 9> fd_gradient(const SceneConfig& scene, Classifier& backend, const TrigPose& tp, int target,
                                  const std::array<double, 9>& h, int threads) {
  const FrustumSpec spec = scene.camera;
  return fd_gradient(
      [&](const TrigPose& probe) {
        return cross_entropy(evaluate_pose(scene, backend, render_pose(probe, spec)), target);
      },
      tp, h, threads);
}

namespace {

class RunState {
 public:
  RunState(SearchResult& result, const SearchConfig& cfg, const RecordSink& sink)
      : result_(result), cfg_(cfg), sink_(sink), start_(std::chrono::steady_clock::now()) {}

  TrialRecord make(int step, std::string_view phase, int view, const PoseParams& pose,
                   const ClassifierResponse& resp) const {
    TrialRecord r;
    r.index = static_cast<long long>(result_.records.size());
    r.step = step;
    r.phase = std::string(phase);
    r.view = view;
    r.pose = pose;
    r.top_label = resp.top_label;
    r.confidence = resp.confidence();
    if (cfg_.target_class) {
      r.target_prob = resp.probs.at(*cfg_.target_class);
      r.loss = cross_entropy(resp, *cfg_.target_class);
    }
    if (cfg_.true_class) r.correct = resp.top_label == *cfg_.true_class;
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    return r;
  }

  // Appends and, for view 0, folds the record into best/hit tracking.
  void add(TrialRecord r) {
    if (cfg_.target_class && r.view == 0) {
      if (!result_.best_pose || *r.target_prob > result_.max_target_prob) {
        result_.best_pose = r.pose;
        result_.max_target_prob = *r.target_prob;
      }
      if (r.top_label == *cfg_.target_class) result_.hit = true;
    }
    result_.records.push_back(std::move(r));
    if (sink_) sink_(result_.records.back());
  }

  // Evaluates poses (possibly in parallel) and adds records in order. `step0`
  // is the step index of the first pose.
  void evaluate_batch(const SceneConfig& scene, Classifier& backend, const std::vector<PoseParams>& poses,
                      std::string_view phase, int step0) {
    const std::size_t chunk = static_cast<std::size_t>(std::max(1, cfg_.threads * 8));
    for (std::size_t begin = 0; begin < poses.size(); begin += chunk) {
      const std::size_t end = std::min(poses.size(), begin + chunk);
      std::vector<std::optional<ClassifierResponse>> out(end - begin);
      std::exception_ptr error;
      try {
        parallel_for(end - begin, cfg_.threads, [&](std::size_t i) {
          out[i] = evaluate_pose(scene, backend, poses[begin + i]);
        });
      } catch (...) {
        error = std::current_exception();
      }
      // Keep the finished prefix so partial results stay in order.
      for (std::size_t i = 0; i < out.size() && out[i]; ++i) {
        ++result_.evaluations;
        add(make(step0 + static_cast<int>(begin + i), phase, 0, poses[begin + i], *out[i]));
      }
      if (error) std::rethrow_exception(error);
    }
  }

  void count(long long calls) { result_.evaluations += calls; }
  SearchResult& result() { return result_; }

 private:
  SearchResult& result_;
  const SearchConfig& cfg_;
  const RecordSink& sink_;
  std::chrono::steady_clock::time_point start_;
};

// Backend and transport failures end the run with the records so far.
template <typename Body>
SearchResult guarded(Body&& body) {
  SearchResult result;
  try {
    body(result);
  } catch (const TransportError& e) {
    result.aborted = true;
    result.error = e.what();
  } catch (const ProtocolError& e) {
    result.aborted = true;
    result.error = e.what();
  } catch (const CapabilityError& e) {
    result.aborted = true;
    result.error = e.what();
  }
  return result;
}

void require_target(const SearchConfig& cfg, const Classifier& backend) {
  if (!cfg.target_class) throw UsageError("this search mode needs a target class");
  if (*cfg.target_class >= backend.info().num_classes)
    throw UsageError("target class " + std::to_string(*cfg.target_class) + " is outside the backend's " +
                     std::to_string(backend.info().num_classes) + " classes");
}

}  // namespace

SearchResult run_random_search(const SceneConfig& scene, Classifier& backend, const SearchConfig& cfg,
                               const RecordSink& sink) {
  cfg.validate();
  if (cfg.target_class) require_target(cfg, backend);
  const FrustumSpec spec = effective_frustum(scene, cfg);
  std::vector<PoseParams> poses(static_cast<std::size_t>(cfg.budget));
  for (int i = 0; i < cfg.budget; ++i) {
    Rng rng = Rng::substream(cfg.seed, "rs", static_cast<std::uint64_t>(i));
    poses[i] = sample_random_pose(rng, spec);
  }
  return guarded([&](SearchResult& result) {
    RunState state(result, cfg, sink);
    state.evaluate_batch(scene, backend, poses, "rs", 0);
  });
}

SearchResult run_zrs(const SceneConfig& scene, Classifier& backend, const SearchConfig& cfg, const RecordSink& sink) {
  cfg.validate();
  require_target(cfg, backend);
  const FrustumSpec spec = effective_frustum(scene, cfg);
  const std::vector<double> levels = linspace(spec.z_min, spec.z_max, cfg.zrs_levels);
  const int per_level = cfg.zrs_samples_per_level;

  std::vector<PoseParams> sweep;
  sweep.reserve(levels.size() * per_level);
  for (std::size_t l = 0; l < levels.size(); ++l)
    for (int s = 0; s < per_level; ++s) {
      Rng rng = Rng::substream(cfg.seed, "zrs-init", l * per_level + s);
      sweep.push_back(sample_pose_at_depth(rng, spec, levels[l]));
    }

  return guarded([&](SearchResult& result) {
    result.levels = levels;
    RunState state(result, cfg, sink);
    state.evaluate_batch(scene, backend, sweep, "zrs_init", 0);
    result.init_pose = result.best_pose;
    result.init_target_prob = result.max_target_prob;

    result.level_max_target_prob.assign(levels.size(), 0.0);
    for (const auto& r : result.records) {
      const std::size_t l = static_cast<std::size_t>(r.step / per_level);
      result.level_max_target_prob[l] = std::max(result.level_max_target_prob[l], *r.target_prob);
    }
    if (cfg.mode != SearchMode::kZRSAttack) return;

    // Best two levels by maximum target probability, ties to the lower index.
    std::size_t first = 0, second = 1;
    if (result.level_max_target_prob[second] > result.level_max_target_prob[first]) std::swap(first, second);
    for (std::size_t l = 2; l < levels.size(); ++l) {
      const double p = result.level_max_target_prob[l];
      if (p > result.level_max_target_prob[first]) {
        second = first;
        first = l;
      } else if (p > result.level_max_target_prob[second]) {
        second = l;
      }
    }
    const double lo = std::min(levels[first], levels[second]);
    const double hi = std::max(levels[first], levels[second]);
    result.refined_z_range = {lo, hi};
    FrustumSpec refined = spec;
    refined.z_min = lo;
    refined.z_max = hi;

    std::vector<PoseParams> attack(static_cast<std::size_t>(cfg.budget));
    for (int i = 0; i < cfg.budget; ++i) {
      Rng rng = Rng::substream(cfg.seed, "zrs-attack", static_cast<std::uint64_t>(i));
      attack[i] = sample_random_pose(rng, refined);
    }
    state.evaluate_batch(scene, backend, attack, "zrs_attack", 0);
  });
}

SearchResult run_fdg(const SceneConfig& scene, Classifier& backend, const SearchConfig& cfg, const PoseParams& init,
                     const RecordSink& sink) {
  return run_multiview_fdg({scene}, backend, cfg, init, sink);
}

std::vector<SceneConfig> make_views(const SceneConfig& scene, int k) {
  if (k < 1) throw PreconditionError("need at least one view");
  std::vector<SceneConfig> views;
  for (int i = 0; i < k; ++i) {
    SceneConfig v = scene;
    v.view_yaw = wrap_angle(scene.view_yaw + kTwoPi * i / k);
    views.push_back(std::move(v));
  }
  return views;
}

SearchResult run_multiview_fdg(const std::vector<SceneConfig>& views, Classifier& backend, const SearchConfig& cfg,
                               const PoseParams& init, const RecordSink& sink) {
  cfg.validate();
  require_target(cfg, backend);
  if (views.empty()) throw PreconditionError("multi-view descent needs at least one view");
  const int target = *cfg.target_class;
  const std::array<double, 9> h = cfg.fd_steps();
  const std::string_view phase = views.size() == 1 ? "fdg" : "multiview";
  std::vector<SceneConfig> scenes = views;
  for (auto& s : scenes) s.camera = effective_frustum(s, cfg);
  const FrustumSpec spec = scenes[0].camera;

  return guarded([&](SearchResult& result) {
    RunState state(result, cfg, sink);
    TrigPose w = encode_trig(clamp_to_frustum(init, spec));
    const std::size_t k = scenes.size();
    for (int step = 0; step < cfg.budget; ++step) {
      const PoseParams pose = render_pose(w, spec);
      std::vector<ClassifierResponse> responses(k);
      parallel_for(k, cfg.threads, [&](std::size_t v) { responses[v] = evaluate_pose(scenes[v], backend, pose); });
      state.count(static_cast<long long>(k));
      std::size_t best_view = 0;
      double best_loss = 0.0;
      for (std::size_t v = 0; v < k; ++v) {
        TrialRecord r = state.make(step, phase, static_cast<int>(v), pose, responses[v]);
        if (v == 0 || *r.loss < best_loss) {
          best_loss = *r.loss;
          best_view = v;
        }
        state.add(std::move(r));
      }
      std::array<double, 9> grad{};
      for (std::size_t v = 0; v < k; ++v) {
        const auto g = fd_gradient(scenes[v], backend, w, target, h, cfg.threads);
        state.count(18);
        if (v == best_view) grad = g;
      }
      for (std::size_t i = 0; i < 9; ++i) w.values[i] -= cfg.learning_rate * grad[i];
    }
  });
}

}  // namespace advpose
