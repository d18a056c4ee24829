#include "advpose/geometry/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "advpose/common/error.hpp"

namespace advpose {

void Mesh::validate() const {
  if (faces.empty()) throw FormatError("mesh has no faces");
  if (uv_coords.size() != faces.size()) throw FormatError("mesh needs one UV triple per face");
  if (normals.size() != vertices.size()) throw FormatError("mesh needs one normal per vertex");
  for (const Face& f : faces)
    for (std::uint32_t idx : f)
      if (idx >= vertices.size()) throw FormatError("face index out of range: " + std::to_string(idx));
  for (const Vec3& n : normals)
    if (std::abs(norm(n) - 1.0) > 1e-6) throw FormatError("vertex normal is not unit length");
}

std::vector<Vec3> compute_vertex_normals(const std::vector<Vec3>& vertices, const std::vector<Face>& faces) {
  std::vector<Vec3> acc(vertices.size());
  for (const Face& f : faces) {
    // Unnormalized cross product has length 2*area, which gives the weighting.
    const Vec3 n = cross(vertices[f[1]] - vertices[f[0]], vertices[f[2]] - vertices[f[0]]);
    for (std::uint32_t idx : f) acc[idx] += n;
  }
  for (Vec3& n : acc) {
    const double len = norm(n);
    n = len > 0.0 ? n * (1.0 / len) : Vec3{0, 0, 1};
  }
  return acc;
}

Aabb bounding_box(const std::vector<Vec3>& points) {
  if (points.empty()) return {};
  Aabb box{points.front(), points.front()};
  for (const Vec3& p : points) {
    box.min = {std::min(box.min.x, p.x), std::min(box.min.y, p.y), std::min(box.min.z, p.z)};
    box.max = {std::max(box.max.x, p.x), std::max(box.max.y, p.y), std::max(box.max.z, p.z)};
  }
  return box;
}

void normalize_mesh(Mesh& mesh, double extent) {
  if (mesh.vertices.empty()) return;
  const Aabb box = bounding_box(mesh.vertices);
  const Vec3 c = box.center();
  const double largest = std::max({box.max.x - box.min.x, box.max.y - box.min.y, box.max.z - box.min.z});
  const double scale = largest > 0.0 ? extent / largest : 1.0;
  for (Vec3& v : mesh.vertices) v = (v - c) * scale;
}

Mesh make_quad_mesh(std::shared_ptr<const Image> texture) {
  Mesh m;
  m.vertices = {{-1, -1, 0}, {1, -1, 0}, {1, 1, 0}, {-1, 1, 0}};
  m.faces = {{0, 1, 2}, {0, 2, 3}};
  m.uv_coords = {{{{0, 0}, {1, 0}, {1, 1}}}, {{{0, 0}, {1, 1}, {0, 1}}}};
  m.normals.assign(4, {0, 0, 1});
  m.texture = std::move(texture);
  m.texture_ref = m.texture ? "inline" : "";
  return m;
}

Mesh make_sphere_mesh(int stacks, int slices, double radius) {
  if (stacks < 2 || slices < 3) throw PreconditionError("sphere needs stacks >= 2 and slices >= 3");
  Mesh m;
  const double pi = std::numbers::pi;
  for (int i = 0; i <= stacks; ++i) {
    const double phi = pi * i / stacks;
    for (int j = 0; j <= slices; ++j) {
      const double theta = 2 * pi * j / slices;
      const Vec3 n{std::sin(phi) * std::cos(theta), std::cos(phi), std::sin(phi) * std::sin(theta)};
      m.vertices.push_back(n * radius);
      m.normals.push_back(n * (1.0 / norm(n)));
    }
  }
  auto idx = [&](int i, int j) { return static_cast<std::uint32_t>(i * (slices + 1) + j); };
  for (int i = 0; i < stacks; ++i) {
    for (int j = 0; j < slices; ++j) {
      const Vec2 uv00{static_cast<double>(j) / slices, 1.0 - static_cast<double>(i) / stacks};
      const Vec2 uv10{static_cast<double>(j) / slices, 1.0 - static_cast<double>(i + 1) / stacks};
      const Vec2 uv01{static_cast<double>(j + 1) / slices, 1.0 - static_cast<double>(i) / stacks};
      const Vec2 uv11{static_cast<double>(j + 1) / slices, 1.0 - static_cast<double>(i + 1) / stacks};
      if (i != 0) {
        m.faces.push_back({idx(i, j), idx(i, j + 1), idx(i + 1, j)});
        m.uv_coords.push_back({uv00, uv01, uv10});
      }
      if (i != stacks - 1) {
        m.faces.push_back({idx(i, j + 1), idx(i + 1, j + 1), idx(i + 1, j)});
        m.uv_coords.push_back({uv01, uv11, uv10});
      }
    }
  }
  return m;
}

}  // namespace advpose
