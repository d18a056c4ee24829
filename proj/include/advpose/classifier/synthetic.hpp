#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include <nlohmann/json.hpp>

#include "advpose/classifier/classifier.hpp"

namespace advpose {

// How a planted region measures the distance of a pose from its centre.
// Per-dimension offsets are normalized by the half-widths (angles use
// circular distance); unconstrained dimensions are skipped.
//   kBox:        r = max of normalized offsets
//   kEllipsoid:  r = Euclidean norm of normalized offsets
//   kParaboloid: no taper; the logit bonus is amplitude * (1 - r^2) with the
//                ellipsoid r, a concave bump with a convex loss around it.
enum class RegionShape { kBox, kEllipsoid, kParaboloid };

// A pose-space region that raises one class's logit. For kBox and
// kEllipsoid the bonus is amplitude for r <= core and falls to zero at r = 1
// along a raised cosine, so it is continuous and differentiable.
struct PlantedRegion {
  int class_index = 0;
  double amplitude = 10.0;
  RegionShape shape = RegionShape::kEllipsoid;
  PoseParams center;
  // Per parameter (x, y, z, yaw, pitch, roll); infinite means unconstrained.
  std::array<double, 6> half_widths{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                                    std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                                    std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  double core = 0.0;

  // Logit bonus at a pose.
  double bonus(const PoseParams& pose) const;
  // True where the bonus is at full amplitude (r <= core).
  bool in_core(const PoseParams& pose) const;
  double normalized_radius(const PoseParams& pose) const;
};

enum class SyntheticEmbedding { kNone, kPooled, kChannelMean };

struct SyntheticConfig {
  std::uint64_t seed = 0;
  int num_classes = 10;
  std::vector<std::string> labels;  // defaults to "class_<i>"
  // Pooling grid per side for the pixel features.
  int grid = 4;
  // Scale of the seeded projection from pixel features to logits.
  double pixel_weight = 0.0;
  // Per-class constant logit offset; empty means all zero.
  std::vector<double> bias;
  std::vector<PlantedRegion> regions;
  SyntheticEmbedding embedding = SyntheticEmbedding::kPooled;
  int input_height = 0;
  int input_width = 0;
};

// Deterministic stand-in for a real image classifier. Logits are
//   bias + pixel_weight * W * (pooled pixel means - 0.5) + planted bonuses
// where W is drawn from the seed, and the bonuses depend on the pose
// recorded in the render. Softmax gives the probabilities. Pure and
// thread-safe.
class SyntheticClassifier final : public Classifier {
 public:
  explicit SyntheticClassifier(SyntheticConfig config);

  const ClassifierInfo& info() const override { return info_; }
  ClassifierResponse classify(const RenderOutput& image) override;
  std::vector<double> embed(const RenderOutput& image) override;

  std::vector<double> logits(const RenderOutput& image) const;
  const SyntheticConfig& config() const { return config_; }

  // Block means of each channel over a grid x grid partition, channel-major.
  static std::vector<double> pooled_features(const Image& image, int grid);
  static std::vector<double> channel_means(const Image& image);

 private:
  SyntheticConfig config_;
  ClassifierInfo info_;
  std::vector<double> weights_;  // num_classes x feature_count, row-major
  int feature_count_;
};

// JSON round trip for configs and manifests.
nlohmann::json to_json(const SyntheticConfig& config);
SyntheticConfig synthetic_config_from_json(const nlohmann::json& j);

}  // namespace advpose
