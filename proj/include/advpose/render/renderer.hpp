#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "advpose/render/scene.hpp"

namespace advpose {

struct RenderOutput {
  Image pixels;
  // One byte per pixel, row-major: 1 where a mesh fragment won the depth test.
  std::vector<std::uint8_t> coverage_mask;
  PoseParams pose;
  std::string scene_id;

  int height() const { return pixels.height(); }
  int width() const { return pixels.width(); }
};

// Deterministic software rasterizer: perspective projection, near-plane
// clipping, z-buffered triangle fill without culling, perspective-correct
// UV and normal interpolation, ambient plus Lambertian directional shading.
RenderOutput render(const SceneConfig& scene, const PoseParams& pose);

struct Projection {
  double u = 0.0;
  double v = 0.0;
  bool in_frame = false;
};

// Pixel coordinates of a world point. The vertical field of view uses the
// camera half-angle; the horizontal one is scaled by the aspect ratio.
// Throws ProjectionError for points on the camera plane.
Projection project_point(const SceneConfig& scene, const Vec3& p);

struct PixelBox {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;  // inclusive
  bool empty() const { return x1 < x0 || y1 < y0; }
  long long area() const { return empty() ? 0 : static_cast<long long>(x1 - x0 + 1) * (y1 - y0 + 1); }
};

PixelBox coverage_bbox(const RenderOutput& out);

// Area in pixels of the tightest box around the coverage mask.
double bbox_area(const RenderOutput& out);

}  // namespace advpose
