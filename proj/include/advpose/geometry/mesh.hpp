#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "advpose/common/vec.hpp"
#include "advpose/image/image.hpp"

namespace advpose {

using Face = std::array<std::uint32_t, 3>;

// Triangle mesh with one diffuse texture.
//
// Texture coordinates are stored per face corner; normals per vertex. A mesh
// without a texture samples white.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<std::array<Vec2, 3>> uv_coords;  // one triple per face
  std::vector<Vec3> normals;                   // one per vertex
  std::string texture_ref;
  std::shared_ptr<const Image> texture;

  // Throws FormatError if any invariant is broken.
  void validate() const;
};

// Area-weighted average of adjacent face normals, normalized. Vertices not
// referenced by any non-degenerate face get (0, 0, 1).
std::vector<Vec3> compute_vertex_normals(const std::vector<Vec3>& vertices, const std::vector<Face>& faces);

// Recentres the mesh on its bounding-box centre and scales it uniformly so
// the largest bounding-box extent equals `extent`.
void normalize_mesh(Mesh& mesh, double extent = 2.0);

struct Aabb {
  Vec3 min;
  Vec3 max;
  Vec3 center() const { return (min + max) * 0.5; }
};

Aabb bounding_box(const std::vector<Vec3>& points);

// Two triangles covering [-1,1]^2 at z = 0, facing +z, with full-range UVs.
Mesh make_quad_mesh(std::shared_ptr<const Image> texture = nullptr);

// UV sphere of the given radius centred at the origin.
Mesh make_sphere_mesh(int stacks, int slices, double radius = 1.0);

}  // namespace advpose
