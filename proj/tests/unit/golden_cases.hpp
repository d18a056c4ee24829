#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "advpose/geometry/mesh.hpp"
#include "advpose/render/scene.hpp"

namespace testing_support {

inline constexpr int kGoldenSize = 64;

advpose::Mesh triangle_mesh(const std::vector<advpose::Vec3>& verts, const std::vector<advpose::Face>& faces,
                            const std::vector<std::array<advpose::Vec2, 3>>& uvs,
                            std::shared_ptr<const advpose::Image> tex = nullptr);
// Unlit-looking scene: ambient 1, no directional light, black background.
advpose::SceneConfig flat_scene(advpose::Mesh mesh);
// 1x2 texture, red then green.
std::shared_ptr<const advpose::Image> two_texel_texture();
// Two overlapping triangles half a unit apart in depth; the front one
// samples the red texel, the back one the green texel.
advpose::Mesh occlusion_mesh(bool front_first);

struct GoldenCase {
  std::string name;
  advpose::SceneConfig scene;
  advpose::PoseParams pose;
};

// triangle_coverage, occlusion, shading_0_8, background_purity, textured_quad
std::vector<GoldenCase> golden_cases();
std::filesystem::path golden_path(const std::string& name);

}  // namespace testing_support
