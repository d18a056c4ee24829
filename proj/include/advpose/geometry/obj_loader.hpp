#pragma once

#include <filesystem>

#include "advpose/geometry/mesh.hpp"

namespace advpose {

// Loads a Wavefront OBJ with an optional MTL diffuse texture (map_Kd).
//
// Quads are fan-triangulated; larger polygons are rejected. Missing normals
// are computed as area-weighted face-normal averages. The result is
// normalized: centred on its bounding box and scaled to a largest extent of
// 2 world units.
//
// Parse failures raise FormatError carrying the line number; a referenced
// MTL or texture file that cannot be opened raises IoError naming the path.
Mesh load_obj(const std::filesystem::path& path);

}  // namespace advpose
