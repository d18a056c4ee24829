#include <cstdlib>
#include <fstream>

#include <gtest/gtest.h>

#include "advpose/geometry/obj_loader.hpp"
#include "advpose/geometry/transform.hpp"
#include "advpose/image/image_io.hpp"
#include "advpose/render/renderer.hpp"
#include "golden_cases.hpp"
#include "test_support.hpp"

using namespace advpose;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

bool update_golden() {
  const char* v = std::getenv("UPDATE_GOLDEN");
  return v && std::string(v) == "1";
}

std::array<std::uint8_t, 3> pixel_u8(const Rgb8Image& img, int x, int y) {
  const std::size_t i = (static_cast<std::size_t>(y) * img.width + x) * 3;
  return {img.rgb[i], img.rgb[i + 1], img.rgb[i + 2]};
}

}  // namespace

class Golden : public ::testing::TestWithParam<int> {};

TEST_P(Golden, ByteIdentical) {
  const GoldenCase c = golden_cases()[static_cast<std::size_t>(GetParam())];
  const RenderOutput out = render(c.scene, c.pose);
  const auto bytes = encode_png(out.pixels);
  const fs::path path = golden_path(c.name);
  if (update_golden()) {
    write_file_bytes(path, bytes);
    GTEST_SKIP() << "regenerated " << path;
  }
  ASSERT_TRUE(fs::exists(path)) << "missing golden file " << path << " (run with UPDATE_GOLDEN=1)";
  const auto expected = read_file_bytes(path);
  // Pixels first, so a zlib difference is reported as such.
  EXPECT_TRUE(decode_png(expected) == quantize(out.pixels)) << c.name << ": pixels differ";
  EXPECT_TRUE(bytes == expected) << c.name << ": PNG bytes differ";
}

INSTANTIATE_TEST_SUITE_P(Renderer, Golden, ::testing::Range(0, 5), [](const auto& info) {
  return golden_cases()[static_cast<std::size_t>(info.param)].name;
});

TEST(Render, TriangleCoverageMatchesPixelCentreOracle) {
  const GoldenCase c = golden_cases()[0];
  const RenderOutput out = render(c.scene, c.pose);
  std::array<Projection, 3> p;
  const auto world = apply_pose(*c.scene.mesh, c.pose);
  for (int i = 0; i < 3; ++i) p[static_cast<std::size_t>(i)] = project_point(c.scene, world[static_cast<std::size_t>(i)]);
  auto edge = [](const Projection& a, const Projection& b, double x, double y) {
    return (b.u - a.u) * (y - a.v) - (b.v - a.v) * (x - a.u);
  };
  int checked = 0;
  for (int y = 0; y < kGoldenSize; ++y)
    for (int x = 0; x < kGoldenSize; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      const double e0 = edge(p[0], p[1], px, py), e1 = edge(p[1], p[2], px, py), e2 = edge(p[2], p[0], px, py);
      if (std::min({std::abs(e0), std::abs(e1), std::abs(e2)}) < 1e-6) continue;  // on an edge
      const bool inside = (e0 > 0 && e1 > 0 && e2 > 0) || (e0 < 0 && e1 < 0 && e2 < 0);
      EXPECT_EQ(out.coverage_mask[static_cast<std::size_t>(y) * kGoldenSize + x] != 0, inside) << x << ',' << y;
      ++checked;
    }
  EXPECT_GT(checked, kGoldenSize * kGoldenSize - 10);
}

TEST(Render, NearerTriangleWinsRegardlessOfFaceOrder) {
  SceneConfig a = flat_scene(occlusion_mesh(true));
  SceneConfig b = flat_scene(occlusion_mesh(false));
  const PoseParams pose{0, 0, -10, 0, 0, 0};
  const RenderOutput ra = render(a, pose), rb = render(b, pose);
  EXPECT_TRUE(ra.pixels == rb.pixels);
  // Centre pixel lies in both triangles: red.
  const Rgb8Image q = quantize(ra.pixels);
  EXPECT_EQ(pixel_u8(q, 32, 32), (std::array<std::uint8_t, 3>{255, 0, 0}));
}

TEST(Render, ShadingValueIsAmbientPlusDiffuse) {
  const GoldenCase c = golden_cases()[2];
  const RenderOutput out = render(c.scene, c.pose);
  EXPECT_NEAR(out.pixels.at(0, 32, 32), 0.8f, 1e-6);
  EXPECT_EQ(pixel_u8(quantize(out.pixels), 32, 32), (std::array<std::uint8_t, 3>{204, 204, 204}));
}

TEST(Render, UncoveredPixelsAreExactlyBackground) {
  const GoldenCase c = golden_cases()[3];
  const RenderOutput out = render(c.scene, c.pose);
  long long covered = 0;
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) {
      if (out.coverage_mask[static_cast<std::size_t>(y) * out.width() + x]) {
        ++covered;
        continue;
      }
      for (int ch = 0; ch < 3; ++ch) EXPECT_EQ(out.pixels.at(ch, y, x), kDefaultBackground[static_cast<std::size_t>(ch)]);
    }
  EXPECT_GT(covered, 0);
  EXPECT_LT(covered, out.height() * out.width());
}

TEST(Render, FrontalTexturedQuadShowsTexels) {
  auto tex = std::make_shared<const Image>(read_image(testing_support::fixture("checker.png")));
  SceneConfig s = flat_scene(make_quad_mesh(tex));
  const RenderOutput out = render(s, {0, 0, -8, 0, 0, 0});
  const Rgb8Image q = quantize(out.pixels);
  const Rgb8Image t = quantize(*tex);
  // Quad spans +-1 at depth 8; the frame spans +-8 tan(half angle).
  const double half = 8 * std::tan(s.camera.half_angle_v);
  for (double wx : {-0.6, -0.2, 0.2, 0.6})
    for (double wy : {-0.6, -0.2, 0.2, 0.6}) {
      const int px = static_cast<int>(0.5 * kGoldenSize * (1 + wx / half));
      const int py = static_cast<int>(0.5 * kGoldenSize * (1 - wy / half));
      const int tx = static_cast<int>((wx + 1) / 2 * 4);
      const int ty = static_cast<int>((1 - (wy + 1) / 2) * 4);
      EXPECT_EQ(pixel_u8(q, px, py), pixel_u8(t, tx, ty)) << wx << ',' << wy;
    }
}

TEST(Render, NoBackfaceCulling) {
  SceneConfig s = flat_scene(make_quad_mesh());
  const RenderOutput front = render(s, {0, 0, -10, 0, 0, 0});
  const RenderOutput back = render(s, {0, 0, -10, std::numbers::pi, 0, 0});
  EXPECT_EQ(coverage_bbox(front).area(), coverage_bbox(back).area());
  EXPECT_GT(coverage_bbox(back).area(), 0);
}

TEST(Render, DeterministicAndStateless) {
  SceneConfig s = testing_support::small_scene(40);
  testing_support::Gen g(21);
  const PoseParams p1 = g.pose(s.camera), p2 = g.pose(s.camera);
  const RenderOutput a = render(s, p1);
  render(s, p2);
  const RenderOutput b = render(s, p1);
  EXPECT_TRUE(a.pixels == b.pixels);
  EXPECT_EQ(a.coverage_mask, b.coverage_mask);
}

TEST(Render, ObjectStraddlingCameraPlaneIsClipped) {
  SceneConfig s = testing_support::small_scene(32);
  const RenderOutput out = render(s, {0, 0, 0.0, 0, 0, 0});
  EXPECT_EQ(out.height(), 32);
  for (float v : out.pixels.data()) EXPECT_TRUE(std::isfinite(v));
}

TEST(Render, CoverageShrinksWithDistance) {
  SceneConfig s = testing_support::small_scene(64);
  double prev = 1e18;
  for (double z : {-6.0, -10.0, -16.0, -27.0}) {
    const double a = bbox_area(render(s, {0, 0, z, 0, 0, 0}));
    EXPECT_LT(a, prev);
    prev = a;
  }
}

TEST(Lighting, PresetsMatchTable) {
  const auto b = LightingConfig::preset(LightingPreset::kBright);
  const auto m = LightingConfig::preset(LightingPreset::kMedium);
  const auto d = LightingConfig::preset(LightingPreset::kDark);
  EXPECT_DOUBLE_EQ(b.directional_intensity, 1.2);
  EXPECT_DOUBLE_EQ(b.ambient_intensity, 1.6);
  EXPECT_DOUBLE_EQ(m.directional_intensity, 0.4);
  EXPECT_DOUBLE_EQ(m.ambient_intensity, 1.0);
  EXPECT_DOUBLE_EQ(d.directional_intensity, 0.2);
  EXPECT_DOUBLE_EQ(d.ambient_intensity, 0.5);
}

TEST(ImageIo, PngRoundTrip) {
  testing_support::Gen g(22);
  Image img(7, 5);
  for (int c = 0; c < 3; ++c)
    for (auto& v : img.plane(c)) v = static_cast<float>(g.uniform(0, 1));
  const Rgb8Image q = quantize(img);
  EXPECT_TRUE(decode_png(encode_png(q)) == q);
  EXPECT_TRUE(encode_png(q) == encode_png(q));
}
