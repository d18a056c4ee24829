#include "advpose/render/scene.hpp"

#include <cmath>

#include "advpose/common/error.hpp"

namespace advpose {

std::string_view preset_name(LightingPreset p) {
  switch (p) {
    case LightingPreset::kBright:
      return "bright";
    case LightingPreset::kMedium:
      return "medium";
    case LightingPreset::kDark:
      return "dark";
  }
  return "?";
}

LightingPreset parse_preset(std::string_view name) {
  if (name == "bright") return LightingPreset::kBright;
  if (name == "medium") return LightingPreset::kMedium;
  if (name == "dark") return LightingPreset::kDark;
  throw UsageError("unknown lighting preset '" + std::string(name) + "' (expected bright, medium or dark)");
}

LightingConfig LightingConfig::preset(LightingPreset p) {
  LightingConfig l;
  switch (p) {
    case LightingPreset::kBright:
      l.directional_intensity = 1.2;
      l.ambient_intensity = 1.6;
      break;
    case LightingPreset::kMedium:
      l.directional_intensity = 0.4;
      l.ambient_intensity = 1.0;
      break;
    case LightingPreset::kDark:
      l.directional_intensity = 0.2;
      l.ambient_intensity = 0.5;
      break;
  }
  return l;
}

void LightingConfig::validate() const {
  if (!(directional_intensity >= 0.0) || !(ambient_intensity >= 0.0))
    throw PreconditionError("light intensities must be non-negative");
  if (std::abs(norm(light_direction) - 1.0) > 1e-9) throw PreconditionError("light direction must be unit length");
}

void SceneConfig::validate() const {
  if (height < 1 || width < 1) throw PreconditionError("image size must be positive");
  if (!mesh) throw PreconditionError("scene has no mesh");
  mesh->validate();
  lights.validate();
  camera.validate();
}

}  // namespace advpose
