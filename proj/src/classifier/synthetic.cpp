#include "advpose/classifier/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "advpose/common/error.hpp"
#include "advpose/common/rng.hpp"
#include "advpose/simd/kernels.hpp"

namespace advpose {

double PlantedRegion::normalized_radius(const PoseParams& pose) const {
  double acc = 0.0;
  for (PoseParam p : kAllPoseParams) {
    const double hw = half_widths[static_cast<int>(p)];
    if (!std::isfinite(hw) || hw <= 0.0) continue;
    const double off = is_angle(p) ? circular_distance(get(pose, p), get(center, p)) : std::abs(get(pose, p) - get(center, p));
    const double q = off / hw;
    if (shape == RegionShape::kBox)
      acc = std::max(acc, q);
    else
      acc += q * q;
  }
  return shape == RegionShape::kBox ? acc : std::sqrt(acc);
}

double PlantedRegion::bonus(const PoseParams& pose) const {
  const double r = normalized_radius(pose);
  if (shape == RegionShape::kParaboloid) return amplitude * (1.0 - r * r);
  if (r <= core) return amplitude;
  if (r >= 1.0) return 0.0;
  const double t = (r - core) / (1.0 - core);
  return amplitude * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

bool PlantedRegion::in_core(const PoseParams& pose) const { return normalized_radius(pose) <= core; }

SyntheticClassifier::SyntheticClassifier(SyntheticConfig config) : config_(std::move(config)) {
  if (config_.num_classes < 2) throw PreconditionError("synthetic backend needs at least 2 classes");
  if (config_.grid < 1) throw PreconditionError("synthetic pooling grid must be >= 1");
  if (!config_.bias.empty() && static_cast<int>(config_.bias.size()) != config_.num_classes)
    throw PreconditionError("bias length must equal num_classes");
  if (config_.labels.empty())
    for (int i = 0; i < config_.num_classes; ++i) config_.labels.push_back("class_" + std::to_string(i));
  if (static_cast<int>(config_.labels.size()) != config_.num_classes)
    throw PreconditionError("labels length must equal num_classes");
  for (const auto& r : config_.regions)
    if (r.class_index < 0 || r.class_index >= config_.num_classes)
      throw PreconditionError("planted region class out of range");

  info_.num_classes = config_.num_classes;
  info_.labels = config_.labels;
  info_.supports_embedding = config_.embedding != SyntheticEmbedding::kNone;
  info_.input_height = config_.input_height;
  info_.input_width = config_.input_width;
  info_.metadata = {{"kind", "synthetic"}, {"seed", config_.seed}};
  if (config_.input_height > 0 && config_.input_width > 0)
    info_.metadata["input_size"] = {config_.input_height, config_.input_width};

  feature_count_ = 3 * config_.grid * config_.grid;
  weights_.resize(static_cast<std::size_t>(config_.num_classes) * feature_count_);
  Rng rng = Rng::substream(config_.seed, "synthetic-weights");
  for (double& w : weights_) w = rng.uniform(-1.0, 1.0);
}

std::vector<double> SyntheticClassifier::pooled_features(const Image& image, int grid) {
  const auto& k = simd::active();
  const int h = image.height(), w = image.width();
  std::vector<double> out;
  out.reserve(3 * grid * grid);
  for (int c = 0; c < 3; ++c) {
    const float* plane = image.plane(c).data();
    for (int gy = 0; gy < grid; ++gy) {
      const int y0 = gy * h / grid, y1 = (gy + 1) * h / grid;
      for (int gx = 0; gx < grid; ++gx) {
        const int x0 = gx * w / grid, x1 = (gx + 1) * w / grid;
        double total = 0.0;
        for (int y = y0; y < y1; ++y)
          total += k.sum_f32(plane + static_cast<std::size_t>(y) * w + x0, static_cast<std::size_t>(x1 - x0));
        const double count = static_cast<double>(y1 - y0) * (x1 - x0);
        out.push_back(count > 0 ? total / count : 0.0);
      }
    }
  }
  return out;
}

std::vector<double> SyntheticClassifier::channel_means(const Image& image) {
  const auto& k = simd::active();
  std::vector<double> out(3);
  for (int c = 0; c < 3; ++c) out[c] = k.sum_f32(image.plane(c).data(), image.pixel_count()) / image.pixel_count();
  return out;
}

std::vector<double> SyntheticClassifier::logits(const RenderOutput& image) const {
  std::vector<double> z(config_.num_classes, 0.0);
  if (!config_.bias.empty()) z = config_.bias;
  if (config_.pixel_weight != 0.0) {
    const Image input = fit_to_input(image.pixels, info_);
    std::vector<double> f = pooled_features(input, config_.grid);
    for (double& v : f) v -= 0.5;
    const auto& k = simd::active();
    for (int c = 0; c < config_.num_classes; ++c)
      z[c] += config_.pixel_weight *
              k.dot_f64(weights_.data() + static_cast<std::size_t>(c) * feature_count_, f.data(), f.size());
  }
  for (const auto& r : config_.regions) z[r.class_index] += r.bonus(image.pose);
  return z;
}

ClassifierResponse SyntheticClassifier::classify(const RenderOutput& image) {
  const auto start = std::chrono::steady_clock::now();
  ClassifierResponse r = make_response(softmax(logits(image)));
  r.latency = std::chrono::steady_clock::now() - start;
  return r;
}

std::vector<double> SyntheticClassifier::embed(const RenderOutput& image) {
  const Image input = fit_to_input(image.pixels, info_);
  switch (config_.embedding) {
    case SyntheticEmbedding::kPooled:
      return pooled_features(input, config_.grid);
    case SyntheticEmbedding::kChannelMean:
      return channel_means(input);
    case SyntheticEmbedding::kNone:
      break;
  }
  throw CapabilityError("synthetic backend configured without embeddings");
}

namespace {

std::string_view shape_name(RegionShape s) {
  switch (s) {
    case RegionShape::kBox:
      return "box";
    case RegionShape::kEllipsoid:
      return "ellipsoid";
    case RegionShape::kParaboloid:
      return "paraboloid";
  }
  return "?";
}

RegionShape parse_shape(const std::string& s) {
  if (s == "box") return RegionShape::kBox;
  if (s == "ellipsoid") return RegionShape::kEllipsoid;
  if (s == "paraboloid") return RegionShape::kParaboloid;
  throw UsageError("unknown region shape '" + s + "' (expected box, ellipsoid or paraboloid)");
}

std::string_view embedding_name(SyntheticEmbedding e) {
  switch (e) {
    case SyntheticEmbedding::kNone:
      return "none";
    case SyntheticEmbedding::kPooled:
      return "pooled";
    case SyntheticEmbedding::kChannelMean:
      return "channel_mean";
  }
  return "?";
}

SyntheticEmbedding parse_embedding(const std::string& s) {
  if (s == "none") return SyntheticEmbedding::kNone;
  if (s == "pooled") return SyntheticEmbedding::kPooled;
  if (s == "channel_mean") return SyntheticEmbedding::kChannelMean;
  throw UsageError("unknown embedding mode '" + s + "' (expected none, pooled or channel_mean)");
}

}  // namespace

nlohmann::json to_json(const SyntheticConfig& c) {
  nlohmann::json regions = nlohmann::json::array();
  for (const auto& r : c.regions) {
    nlohmann::json hw = nlohmann::json::object();
    for (PoseParam p : kAllPoseParams) {
      const double v = r.half_widths[static_cast<int>(p)];
      if (std::isfinite(v)) hw[std::string(param_name(p))] = v;
    }
    regions.push_back({{"class", r.class_index},
                       {"amplitude", r.amplitude},
                       {"shape", shape_name(r.shape)},
                       {"center",
                        {r.center.x_delta, r.center.y_delta, r.center.z_delta, r.center.yaw, r.center.pitch,
                         r.center.roll}},
                       {"half_widths", hw},
                       {"core", r.core}});
  }
  return {{"seed", c.seed},         {"num_classes", c.num_classes}, {"labels", c.labels},
          {"grid", c.grid},         {"pixel_weight", c.pixel_weight}, {"bias", c.bias},
          {"regions", regions},     {"embedding", embedding_name(c.embedding)},
          {"input_size", {c.input_height, c.input_width}}};
}

SyntheticConfig synthetic_config_from_json(const nlohmann::json& j) {
  static const std::vector<std::string> kKeys = {"kind",  "seed", "num_classes", "labels", "grid",
                                                 "pixel_weight", "bias", "regions", "embedding", "input_size"};
  for (const auto& [key, _] : j.items())
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      std::string valid;
      for (const auto& k : kKeys) valid += (valid.empty() ? "" : ", ") + k;
      throw UsageError("unknown synthetic backend key '" + key + "'; valid keys: " + valid);
    }
  SyntheticConfig c;
  c.seed = j.value("seed", std::uint64_t{0});
  c.num_classes = j.value("num_classes", 10);
  c.labels = j.value("labels", std::vector<std::string>{});
  c.grid = j.value("grid", 4);
  c.pixel_weight = j.value("pixel_weight", 0.0);
  c.bias = j.value("bias", std::vector<double>{});
  c.embedding = parse_embedding(j.value("embedding", std::string("pooled")));
  if (j.contains("input_size")) {
    c.input_height = j["input_size"].at(0).get<int>();
    c.input_width = j["input_size"].at(1).get<int>();
  }
  for (const auto& rj : j.value("regions", nlohmann::json::array())) {
    static const std::vector<std::string> kRegionKeys = {"class", "amplitude", "shape", "center", "half_widths", "core"};
    for (const auto& [key, _] : rj.items())
      if (std::find(kRegionKeys.begin(), kRegionKeys.end(), key) == kRegionKeys.end())
        throw UsageError("unknown planted region key '" + key + "'; valid keys: class, amplitude, shape, center, half_widths, core");
    PlantedRegion r;
    r.class_index = rj.at("class").get<int>();
    r.amplitude = rj.value("amplitude", 10.0);
    r.shape = parse_shape(rj.value("shape", std::string("ellipsoid")));
    if (rj.contains("center")) {
      const auto& cj = rj["center"];
      r.center = {cj.at(0).get<double>(), cj.at(1).get<double>(), cj.at(2).get<double>(),
                  cj.at(3).get<double>(), cj.at(4).get<double>(), cj.at(5).get<double>()};
    }
    const nlohmann::json half_widths = rj.value("half_widths", nlohmann::json::object());
    for (const auto& [name, value] : half_widths.items())
      r.half_widths[static_cast<int>(parse_param(name))] = value.get<double>();
    r.core = rj.value("core", 0.0);
    c.regions.push_back(r);
  }
  return c;
}

}  // namespace advpose
