#include "advpose/render/renderer.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "advpose/common/error.hpp"
#include "advpose/geometry/transform.hpp"
#include "advpose/simd/kernels.hpp"

namespace advpose {
namespace {

// Fragments closer than this to the camera plane are clipped.
constexpr double kNearPlane = 1e-2;

struct ClipVertex {
  Vec3 pos;  // world space; depth is camera_z - z
  Vec3 normal;
  Vec2 uv;
};

struct ScreenVertex {
  double u, v;
  double inv_depth;
  Vec3 normal_over_depth;
  Vec2 uv_over_depth;
};

struct Camera {
  double camera_z;
  double tan_v;
  double tan_h;
  int width;
  int height;

  double depth(const Vec3& p) const { return camera_z - p.z; }

  // Pixel coordinates; v grows downward.
  std::pair<double, double> to_screen(const Vec3& p, double d) const {
    const double nx = p.x / (d * tan_h);
    const double ny = p.y / (d * tan_v);
    return {0.5 * width * (1.0 + nx), 0.5 * height * (1.0 - ny)};
  }
};

Camera make_camera(const SceneConfig& scene) {
  const double tan_v = std::tan(scene.camera.half_angle_v);
  return {scene.camera.camera_z, tan_v, tan_v * scene.width / scene.height, scene.width, scene.height};
}

ClipVertex lerp(const ClipVertex& a, const ClipVertex& b, double t) {
  return {a.pos + (b.pos - a.pos) * t, a.normal + (b.normal - a.normal) * t,
          {a.uv.u + (b.uv.u - a.uv.u) * t, a.uv.v + (b.uv.v - a.uv.v) * t}};
}

// Sutherland-Hodgman against depth >= near. Returns up to 4 vertices.
int clip_near(const Camera& cam, const std::array<ClipVertex, 3>& in, std::array<ClipVertex, 4>& out) {
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    const ClipVertex& a = in[i];
    const ClipVertex& b = in[(i + 1) % 3];
    const double da = cam.depth(a.pos) - kNearPlane;
    const double db = cam.depth(b.pos) - kNearPlane;
    if (da >= 0) out[n++] = a;
    if ((da >= 0) != (db >= 0)) out[n++] = lerp(a, b, da / (da - db));
  }
  return n;
}

// Edge ownership for pixels exactly on an edge; antisymmetric so a shared
// edge belongs to exactly one of its two triangles.
bool owns_edge(double dx, double dy) { return dy < 0 || (dy == 0 && dx > 0); }

struct GBuffer {
  int width, height;
  std::vector<double> inv_depth;
  std::vector<std::uint8_t> mask;
  std::vector<float> albedo;  // 3 planes
  std::vector<float> normal;  // 3 planes

  GBuffer(int w, int h)
      : width(w),
        height(h),
        inv_depth(static_cast<std::size_t>(w) * h, 0.0),
        mask(static_cast<std::size_t>(w) * h, 0),
        albedo(3 * static_cast<std::size_t>(w) * h, 0.0f),
        normal(3 * static_cast<std::size_t>(w) * h, 0.0f) {}
};

std::array<float, 3> fetch_nearest(const Image& tex, double u, double v) {
  u -= std::floor(u);
  v -= std::floor(v);
  const int x = std::min(static_cast<int>(u * tex.width()), tex.width() - 1);
  const int y = std::min(static_cast<int>((1.0 - v) * tex.height()), tex.height() - 1);
  return {tex.at(0, y, x), tex.at(1, y, x), tex.at(2, y, x)};
}

std::array<float, 3> fetch_bilinear(const Image& tex, double u, double v) {
  u -= std::floor(u);
  v -= std::floor(v);
  const double fx = std::clamp(u * tex.width() - 0.5, 0.0, tex.width() - 1.0);
  const double fy = std::clamp((1.0 - v) * tex.height() - 0.5, 0.0, tex.height() - 1.0);
  const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
  const int x1 = std::min(x0 + 1, tex.width() - 1), y1 = std::min(y0 + 1, tex.height() - 1);
  const double tx = fx - x0, ty = fy - y0;
  std::array<float, 3> out{};
  for (int c = 0; c < 3; ++c) {
    const double top = tex.at(c, y0, x0) * (1 - tx) + tex.at(c, y0, x1) * tx;
    const double bot = tex.at(c, y1, x0) * (1 - tx) + tex.at(c, y1, x1) * tx;
    out[c] = static_cast<float>(top * (1 - ty) + bot * ty);
  }
  return out;
}

void rasterize(const std::array<ScreenVertex, 3>& tri_in, const Vec3& face_normal, const Mesh& mesh,
               TextureSampling sampling, GBuffer& g) {
  std::array<ScreenVertex, 3> t = tri_in;
  auto edge = [](const ScreenVertex& a, const ScreenVertex& b, double pu, double pv) {
    return (b.u - a.u) * (pv - a.v) - (b.v - a.v) * (pu - a.u);
  };
  double area = edge(t[0], t[1], t[2].u, t[2].v);
  if (area == 0.0 || !std::isfinite(area)) return;
  if (area < 0) {
    std::swap(t[1], t[2]);
    area = -area;
  }
  const double min_u = std::min({t[0].u, t[1].u, t[2].u});
  const double max_u = std::max({t[0].u, t[1].u, t[2].u});
  const double min_v = std::min({t[0].v, t[1].v, t[2].v});
  const double max_v = std::max({t[0].v, t[1].v, t[2].v});
  const int x0 = std::max(0, static_cast<int>(std::floor(min_u - 0.5)));
  const int x1 = std::min(g.width - 1, static_cast<int>(std::ceil(max_u - 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::floor(min_v - 0.5)));
  const int y1 = std::min(g.height - 1, static_cast<int>(std::ceil(max_v - 0.5)));
  if (x0 > x1 || y0 > y1) return;

  const bool own[3] = {owns_edge(t[2].u - t[1].u, t[2].v - t[1].v), owns_edge(t[0].u - t[2].u, t[0].v - t[2].v),
                       owns_edge(t[1].u - t[0].u, t[1].v - t[0].v)};
  const std::size_t plane = static_cast<std::size_t>(g.width) * g.height;
  const Image* tex = mesh.texture.get();

  for (int y = y0; y <= y1; ++y) {
    const double pv = y + 0.5;
    for (int x = x0; x <= x1; ++x) {
      const double pu = x + 0.5;
      const double w0 = edge(t[1], t[2], pu, pv);
      const double w1 = edge(t[2], t[0], pu, pv);
      const double w2 = edge(t[0], t[1], pu, pv);
      if (w0 < 0 || w1 < 0 || w2 < 0) continue;
      if ((w0 == 0 && !own[0]) || (w1 == 0 && !own[1]) || (w2 == 0 && !own[2])) continue;
      const double l0 = w0 / area, l1 = w1 / area, l2 = w2 / area;
      const double inv_d = l0 * t[0].inv_depth + l1 * t[1].inv_depth + l2 * t[2].inv_depth;
      const std::size_t idx = static_cast<std::size_t>(y) * g.width + x;
      if (g.mask[idx] && !(inv_d > g.inv_depth[idx])) continue;

      const double d = 1.0 / inv_d;
      const double u = (l0 * t[0].uv_over_depth.u + l1 * t[1].uv_over_depth.u + l2 * t[2].uv_over_depth.u) * d;
      const double v = (l0 * t[0].uv_over_depth.v + l1 * t[1].uv_over_depth.v + l2 * t[2].uv_over_depth.v) * d;
      Vec3 n = (t[0].normal_over_depth * l0 + t[1].normal_over_depth * l1 + t[2].normal_over_depth * l2) * d;
      const double len = norm(n);
      n = len > 0 ? n * (1.0 / len) : face_normal;

      std::array<float, 3> texel{1.0f, 1.0f, 1.0f};
      if (tex != nullptr && !tex->empty())
        texel = sampling == TextureSampling::kNearest ? fetch_nearest(*tex, u, v) : fetch_bilinear(*tex, u, v);

      g.mask[idx] = 1;
      g.inv_depth[idx] = inv_d;
      g.albedo[idx] = texel[0];
      g.albedo[plane + idx] = texel[1];
      g.albedo[2 * plane + idx] = texel[2];
      g.normal[idx] = static_cast<float>(n.x);
      g.normal[plane + idx] = static_cast<float>(n.y);
      g.normal[2 * plane + idx] = static_cast<float>(n.z);
    }
  }
}

}  // namespace

RenderOutput render(const SceneConfig& scene, const PoseParams& pose) {
  if (scene.height < 1 || scene.width < 1) throw PreconditionError("image size must be positive");
  if (!scene.mesh) throw PreconditionError("scene has no mesh");
  const Mesh& mesh = *scene.mesh;
  const Camera cam = make_camera(scene);

  Mat3 rot = pose_rotation(pose);
  if (scene.view_yaw != 0.0) rot = rotation_matrix_axis_angle(kYawAxis, scene.view_yaw) * rot;
  const Vec3 translation{pose.x_delta, pose.y_delta, pose.z_delta};

  std::vector<Vec3> world(mesh.vertices.size());
  std::vector<Vec3> normals(mesh.normals.size());
  transform_points(mesh.vertices, rot, translation, world);
  transform_points(mesh.normals, rot, {}, normals);

  GBuffer g(scene.width, scene.height);
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Face& face = mesh.faces[f];
    std::array<ClipVertex, 3> tri;
    for (int k = 0; k < 3; ++k) tri[k] = {world[face[k]], normals[face[k]], mesh.uv_coords[f][k]};
    Vec3 fn = cross(tri[1].pos - tri[0].pos, tri[2].pos - tri[0].pos);
    const double fl = norm(fn);
    fn = fl > 0 ? fn * (1.0 / fl) : Vec3{0, 0, 1};

    std::array<ClipVertex, 4> poly;
    const int n = clip_near(cam, tri, poly);
    if (n < 3) continue;
    std::array<ScreenVertex, 4> sv;
    for (int k = 0; k < n; ++k) {
      const double d = cam.depth(poly[k].pos);
      const auto [u, v] = cam.to_screen(poly[k].pos, d);
      const double inv = 1.0 / d;
      sv[k] = {u, v, inv, poly[k].normal * inv, {poly[k].uv.u * inv, poly[k].uv.v * inv}};
    }
    for (int k = 1; k + 1 < n; ++k) rasterize({sv[0], sv[k], sv[k + 1]}, fn, mesh, scene.sampling, g);
  }

  RenderOutput out;
  out.pixels = Image(scene.height, scene.width);
  out.pose = pose;
  out.scene_id = scene.mesh_id;
  const std::size_t plane = static_cast<std::size_t>(scene.width) * scene.height;

  Image background;
  if (scene.background.image) {
    background = (scene.background.image->height() == scene.height && scene.background.image->width() == scene.width)
                     ? *scene.background.image
                     : center_crop_resize(*scene.background.image, scene.height, scene.width);
  } else {
    background = Image::solid(scene.height, scene.width, scene.background.color[0], scene.background.color[1],
                              scene.background.color[2]);
  }

  const auto& L = scene.lights;
  const Vec3 to_light = L.light_direction * (-1.0 / norm(L.light_direction));
  simd::ShadeArgs args{};
  for (int c = 0; c < 3; ++c) {
    args.albedo[c] = g.albedo.data() + c * plane;
    args.normal[c] = g.normal.data() + c * plane;
    args.background[c] = background.plane(c).data();
    args.out[c] = out.pixels.plane(c).data();
    args.ambient[c] = static_cast<float>(L.ambient_intensity * L.ambient_color[c]);
    args.diffuse[c] = static_cast<float>(L.directional_intensity * L.light_color[c]);
  }
  args.to_light[0] = static_cast<float>(to_light.x);
  args.to_light[1] = static_cast<float>(to_light.y);
  args.to_light[2] = static_cast<float>(to_light.z);
  args.mask = g.mask.data();
  args.count = plane;
  simd::active().shade(args);

  out.coverage_mask = std::move(g.mask);
  return out;
}

Projection project_point(const SceneConfig& scene, const Vec3& p) {
  const Camera cam = make_camera(scene);
  const double d = cam.depth(p);
  if (d == 0.0) throw ProjectionError("point lies on the camera plane");
  const auto [u, v] = cam.to_screen(p, d);
  const bool in_frame = d > 0 && u >= 0 && u < scene.width && v >= 0 && v < scene.height;
  return {u, v, in_frame};
}

PixelBox coverage_bbox(const RenderOutput& out) {
  PixelBox box{out.width(), out.height(), -1, -1};
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x)
      if (out.coverage_mask[static_cast<std::size_t>(y) * out.width() + x]) {
        box.x0 = std::min(box.x0, x);
        box.y0 = std::min(box.y0, y);
        box.x1 = std::max(box.x1, x);
        box.y1 = std::max(box.y1, y);
      }
  if (box.x1 < 0) return PixelBox{};
  return box;
}

double bbox_area(const RenderOutput& out) { return static_cast<double>(coverage_bbox(out).area()); }

}  // namespace advpose
