#pragma once

#include <array>
#include <memory>
#include <string>

#include "advpose/common/vec.hpp"
#include "advpose/geometry/mesh.hpp"
#include "advpose/geometry/pose.hpp"
#include "advpose/image/image.hpp"

namespace advpose {

enum class LightingPreset { kBright, kMedium, kDark };

std::string_view preset_name(LightingPreset p);
LightingPreset parse_preset(std::string_view name);

struct LightingConfig {
  double directional_intensity = 0.4;
  double ambient_intensity = 1.0;
  Vec3 light_direction{0, -1, 0};
  std::array<double, 3> light_color{1, 1, 1};
  std::array<double, 3> ambient_color{1, 1, 1};

  // (directional, ambient): bright (1.2, 1.6), medium (0.4, 1.0), dark (0.2, 0.5).
  static LightingConfig preset(LightingPreset p);

  void validate() const;
};

// ImageNet mean pixel.
inline constexpr std::array<float, 3> kDefaultBackground{0.485f, 0.456f, 0.406f};

struct Background {
  std::array<float, 3> color = kDefaultBackground;
  // When set, used instead of the solid colour. Resized to the render size
  // with a centre crop if dimensions differ.
  std::shared_ptr<const Image> image;
  std::string image_ref;
};

enum class TextureSampling { kNearest, kBilinear };

// Everything the renderer needs besides the pose. The camera sits at
// (0, 0, camera_z) looking down -z with +y up.
struct SceneConfig {
  std::string mesh_id;
  std::shared_ptr<const Mesh> mesh;
  LightingConfig lights;
  FrustumSpec camera;
  // Orbits the camera about the object centre by this yaw; used to build the
  // extra views of multi-view optimization. Zero for the canonical view.
  double view_yaw = 0.0;
  Background background;
  int height = 299;
  int width = 299;
  TextureSampling sampling = TextureSampling::kNearest;

  void validate() const;
};

}  // namespace advpose
