#include "advpose/analysis/sensitivity.hpp"

#include <cmath>
#include <sstream>

#include "advpose/common/error.hpp"
#include "advpose/common/parallel.hpp"
#include "advpose/common/rng.hpp"
#include "advpose/common/stats.hpp"
#include "advpose/geometry/transform.hpp"
#include "advpose/render/renderer.hpp"
#include "advpose/search/records.hpp"
#include "advpose/search/search.hpp"

namespace advpose {

double parameter_delta(PoseParam p, double a, double b) {
  return is_angle(p) ? circular_distance(a, b) : std::abs(a - b);
}

ParamSensitivity summarize_param(const ParamOutcomes& po) {
  if (po.outcomes.empty()) throw PreconditionError("no resamples for parameter " + std::string(param_name(po.param)));
  ParamSensitivity s;
  s.param = po.param;
  long long failures = 0;
  const ResampleOutcome* best = nullptr;
  for (const auto& o : po.outcomes) {
    if (!o.misclassified) continue;
    ++failures;
    if (!best || o.delta < best->delta) best = &o;
  }
  s.failure_rate = 100.0 * static_cast<double>(failures) / static_cast<double>(po.outcomes.size());
  if (best) {
    s.min_delta = best->delta;
    s.interpretable_delta = best->interpretable;
  }
  return s;
}

void aggregate_starts(ObjectSensitivity& obj) {
  for (std::size_t p = 0; p < 6; ++p) {
    std::vector<double> rates, deltas, interp;
    for (const auto& st : obj.starts) {
      rates.push_back(st.params[p].failure_rate);
      if (st.params[p].min_delta) deltas.push_back(*st.params[p].min_delta);
      if (st.params[p].interpretable_delta) interp.push_back(*st.params[p].interpretable_delta);
    }
    obj.median_failure_rate[p] = median(rates);
    obj.median_min_delta[p] = median(deltas);
    obj.median_interpretable_delta[p] = median(interp);
  }
}

SensitivityReport aggregate_objects(std::vector<ObjectSensitivity> objects) {
  SensitivityReport r;
  for (auto& o : objects) aggregate_starts(o);
  for (std::size_t p = 0; p < 6; ++p) {
    std::vector<double> rates, deltas, interp;
    for (const auto& o : objects) {
      if (o.median_failure_rate[p]) rates.push_back(*o.median_failure_rate[p]);
      if (o.median_min_delta[p]) deltas.push_back(*o.median_min_delta[p]);
      if (o.median_interpretable_delta[p]) interp.push_back(*o.median_interpretable_delta[p]);
    }
    r.failure_rate[p] = median(rates);
    r.min_delta[p] = median(deltas);
    r.interpretable_delta[p] = median(interp);
  }
  r.objects = std::move(objects);
  return r;
}

double resample_value(Rng& rng, PoseParam p, const PoseParams& start, const FrustumSpec& frustum) {
  switch (p) {
    case PoseParam::kX:
    case PoseParam::kY: {
      const double s = frustum_bound(frustum, start.z_delta);
      return rng.uniform(-s, s);
    }
    case PoseParam::kZ: {
      // Depths at which |x|, |y| <= |camera_z - z| * tan(half_angle).
      const double need = std::max(std::abs(start.x_delta), std::abs(start.y_delta)) / std::tan(frustum.half_angle_v);
      double lo = frustum.z_min, hi = frustum.z_max;
      if (frustum.camera_z >= start.z_delta)
        hi = std::min(hi, frustum.camera_z - need);
      else
        lo = std::max(lo, frustum.camera_z + need);
      if (hi < lo) lo = hi = start.z_delta;
      return rng.uniform(lo, hi);
    }
    default:
      return kTwoPi * rng.uniform_open01();
  }
}

std::optional<double> interpretable_delta(const SceneConfig& scene, PoseParam param, const PoseParams& start,
                                          const PoseParams& changed) {
  if (is_angle(param)) return rad_to_deg(circular_distance(get(start, param), get(changed, param)));
  if (param == PoseParam::kZ) {
    const double a0 = bbox_area(render(scene, start));
    if (a0 <= 0.0) return std::nullopt;
    const double a1 = bbox_area(render(scene, changed));
    return 100.0 * std::abs(a1 - a0) / a0;
  }
  if (!scene.mesh) return std::nullopt;
  try {
    const Projection p0 = project_point(scene, object_center(*scene.mesh, start));
    const Projection p1 = project_point(scene, object_center(*scene.mesh, changed));
    return std::hypot(p1.u - p0.u, p1.v - p0.v);
  } catch (const ProjectionError&) {
    return std::nullopt;
  }
}

namespace {

StartSensitivity analyse_start(const SceneConfig& scene, Classifier& backend, int true_class, const PoseParams& start,
                               std::size_t start_index, const SensitivityOptions& opt) {
  StartSensitivity st;
  st.start = start;
  for (std::size_t pi = 0; pi < 6; ++pi) {
    const PoseParam p = kAllPoseParams[pi];
    Rng rng = Rng::substream(opt.seed, "sensitivity-" + std::string(param_name(p)), start_index);
    ParamOutcomes po;
    po.param = p;
    po.outcomes.resize(static_cast<std::size_t>(opt.n_resamples));
    std::vector<PoseParams> poses(po.outcomes.size());
    for (std::size_t i = 0; i < poses.size(); ++i) {
      poses[i] = start;
      const double v = resample_value(rng, p, start, scene.camera);
      set(poses[i], p, v);
      po.outcomes[i].value = v;
      po.outcomes[i].delta = parameter_delta(p, get(start, p), v);
    }
    parallel_for(poses.size(), opt.threads, [&](std::size_t i) {
      po.outcomes[i].misclassified = evaluate_pose(scene, backend, poses[i]).top_label != true_class;
    });
    // Interpretable units only for the outcome that sets the minimum.
    ParamSensitivity s = summarize_param(po);
    if (s.min_delta)
      for (std::size_t i = 0; i < po.outcomes.size(); ++i)
        if (po.outcomes[i].misclassified && po.outcomes[i].delta == *s.min_delta) {
          s.interpretable_delta = interpretable_delta(scene, p, start, poses[i]);
          break;
        }
    st.params[pi] = s;
  }
  return st;
}

}  // namespace

ObjectSensitivity sensitivity_from_starts(const SceneConfig& scene, Classifier& backend, int true_class,
                                          const std::vector<PoseParams>& starts, const SensitivityOptions& opt,
                                          const std::string& object_id) {
  if (opt.n_resamples < 1) throw UsageError("n_resamples must be >= 1");
  ObjectSensitivity obj;
  obj.object_id = object_id;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const ClassifierResponse r = evaluate_pose(scene, backend, starts[i]);
    if (r.top_label != true_class) {
      ++obj.skipped_starts;
      obj.warnings.push_back("start " + std::to_string(i) + " is classified as " + std::to_string(r.top_label) +
                             ", not " + std::to_string(true_class) + "; skipped");
      continue;
    }
    obj.starts.push_back(analyse_start(scene, backend, true_class, starts[i], i, opt));
  }
  aggregate_starts(obj);
  return obj;
}

ObjectSensitivity sensitivity(const SceneConfig& scene, Classifier& backend, int true_class,
                              const SensitivityOptions& opt, const std::string& object_id) {
  if (opt.n_starts < 1) throw UsageError("n_starts must be >= 1");
  const long long cap = opt.max_start_attempts > 0 ? opt.max_start_attempts : 1000LL * opt.n_starts;
  std::vector<PoseParams> starts;
  long long attempt = 0;
  for (; attempt < cap && static_cast<int>(starts.size()) < opt.n_starts; ++attempt) {
    Rng rng = Rng::substream(opt.seed, "sensitivity-start", static_cast<std::uint64_t>(attempt));
    const PoseParams p = sample_random_pose(rng, scene.camera);
    if (evaluate_pose(scene, backend, p).top_label == true_class) starts.push_back(p);
  }
  ObjectSensitivity obj = sensitivity_from_starts(scene, backend, true_class, starts, opt, object_id);
  if (static_cast<int>(starts.size()) < opt.n_starts)
    obj.warnings.push_back("found only " + std::to_string(starts.size()) + " correctly classified starts in " +
                           std::to_string(attempt) + " random draws");
  return obj;
}

namespace {

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

const char* interpretable_unit(PoseParam p) {
  if (is_angle(p)) return "deg";
  return p == PoseParam::kZ ? "pct_bbox_area" : "px";
}

}  // namespace

nlohmann::json to_json(const SensitivityReport& r) {
  nlohmann::json params = nlohmann::json::object();
  for (std::size_t p = 0; p < 6; ++p)
    params[std::string(param_name(kAllPoseParams[p]))] = {{"failure_rate", opt_json(r.failure_rate[p])},
                                                          {"min_delta", opt_json(r.min_delta[p])},
                                                          {"interpretable_delta", opt_json(r.interpretable_delta[p])},
                                                          {"interpretable_unit", interpretable_unit(kAllPoseParams[p])}};
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& o : r.objects) {
    nlohmann::json per = nlohmann::json::object();
    for (std::size_t p = 0; p < 6; ++p)
      per[std::string(param_name(kAllPoseParams[p]))] = {{"failure_rate", opt_json(o.median_failure_rate[p])},
                                                         {"min_delta", opt_json(o.median_min_delta[p])},
                                                         {"interpretable_delta",
                                                          opt_json(o.median_interpretable_delta[p])}};
    objects.push_back({{"object_id", o.object_id},
                       {"starts", o.starts.size()},
                       {"skipped_starts", o.skipped_starts},
                       {"warnings", o.warnings},
                       {"parameters", per}});
  }
  return {{"parameters", params}, {"objects", objects}};
}

std::string sensitivity_csv(const SensitivityReport& r) {
  std::ostringstream os;
  os.precision(6);
  os << "parameter,failure_rate_pct,min_delta,min_delta_unit,interpretable_delta,interpretable_unit\n";
  auto cell = [&](const std::optional<double>& v) {
    if (v)
      os << *v;
    else
      os << "none";
  };
  for (std::size_t p = 0; p < 6; ++p) {
    const PoseParam param = kAllPoseParams[p];
    os << param_name(param) << ',';
    cell(r.failure_rate[p]);
    os << ',';
    cell(r.min_delta[p]);
    os << ',' << (is_angle(param) ? "rad" : "world") << ',';
    cell(r.interpretable_delta[p]);
    os << ',' << interpretable_unit(param) << '\n';
  }
  return os.str();
}

}  // namespace advpose
