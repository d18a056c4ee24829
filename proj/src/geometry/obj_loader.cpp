#include "advpose/geometry/obj_loader.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "advpose/common/error.hpp"
#include "advpose/image/image_io.hpp"

namespace advpose {
namespace {

struct Corner {
  long v = 0;
  long vt = -1;
  long vn = -1;
};

double parse_double(const std::string& tok, int line) {
  double value = 0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, value);
  if (ec != std::errc() || ptr != end) throw FormatError("invalid number '" + tok + "'", line);
  return value;
}

// OBJ indices are 1-based; negatives count back from the current end.
long resolve_index(const std::string& tok, std::size_t count, int line) {
  long raw = 0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, raw);
  if (ec != std::errc() || ptr != end || raw == 0) throw FormatError("invalid index '" + tok + "'", line);
  const long idx = raw > 0 ? raw - 1 : static_cast<long>(count) + raw;
  if (idx < 0 || idx >= static_cast<long>(count)) throw FormatError("index out of range '" + tok + "'", line);
  return idx;
}

Corner parse_corner(const std::string& tok, std::size_t nv, std::size_t nvt, std::size_t nvn, int line) {
  Corner c;
  const auto s1 = tok.find('/');
  if (s1 == std::string::npos) {
    c.v = resolve_index(tok, nv, line);
    return c;
  }
  c.v = resolve_index(tok.substr(0, s1), nv, line);
  const auto s2 = tok.find('/', s1 + 1);
  const std::string vt = tok.substr(s1 + 1, s2 == std::string::npos ? std::string::npos : s2 - s1 - 1);
  if (!vt.empty()) c.vt = resolve_index(vt, nvt, line);
  if (s2 != std::string::npos) {
    const std::string vn = tok.substr(s2 + 1);
    if (!vn.empty()) c.vn = resolve_index(vn, nvn, line);
  }
  return c;
}

// material name -> diffuse texture path
std::map<std::string, std::filesystem::path> load_mtl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("material library not found", path.string());
  std::map<std::string, std::filesystem::path> out;
  std::string line, current;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key) || key[0] == '#') continue;
    if (key == "newmtl") {
      if (!(ss >> current)) throw FormatError("newmtl without a name in " + path.string(), lineno);
    } else if (key == "map_Kd") {
      // Options such as "-s 1 1 1" may precede the file name, which is last.
      std::string tok, last;
      while (ss >> tok) last = tok;
      if (last.empty()) throw FormatError("map_Kd without a file in " + path.string(), lineno);
      if (current.empty()) throw FormatError("map_Kd before newmtl in " + path.string(), lineno);
      out[current] = path.parent_path() / last;
    }
  }
  return out;
}

}  // namespace

Mesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("mesh file not found", path.string());

  std::vector<Vec3> positions;
  std::vector<Vec2> texcoords;
  std::vector<Vec3> file_normals;
  std::vector<std::array<Corner, 3>> triangles;
  std::vector<std::string> triangle_material;
  std::map<std::string, std::filesystem::path> materials;
  std::string active_material;

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key) || key[0] == '#') continue;
    std::vector<std::string> toks;
    for (std::string t; ss >> t;) toks.push_back(t);

    if (key == "v") {
      if (toks.size() < 3) throw FormatError("vertex needs 3 coordinates", lineno);
      positions.push_back({parse_double(toks[0], lineno), parse_double(toks[1], lineno), parse_double(toks[2], lineno)});
    } else if (key == "vt") {
      if (toks.size() < 2) throw FormatError("texture coordinate needs 2 values", lineno);
      texcoords.push_back({parse_double(toks[0], lineno), parse_double(toks[1], lineno)});
    } else if (key == "vn") {
      if (toks.size() < 3) throw FormatError("normal needs 3 values", lineno);
      file_normals.push_back(
          {parse_double(toks[0], lineno), parse_double(toks[1], lineno), parse_double(toks[2], lineno)});
    } else if (key == "f") {
      if (toks.size() < 3) throw FormatError("face needs at least 3 vertices", lineno);
      if (toks.size() > 4) throw FormatError("polygons with more than 4 vertices are not supported", lineno);
      std::vector<Corner> corners;
      for (const auto& t : toks)
        corners.push_back(parse_corner(t, positions.size(), texcoords.size(), file_normals.size(), lineno));
      for (std::size_t k = 1; k + 1 < corners.size(); ++k) {
        triangles.push_back({corners[0], corners[k], corners[k + 1]});
        triangle_material.push_back(active_material);
      }
    } else if (key == "mtllib") {
      if (toks.empty()) throw FormatError("mtllib without a file", lineno);
      auto lib = load_mtl(path.parent_path() / toks.back());
      materials.insert(lib.begin(), lib.end());
    } else if (key == "usemtl") {
      if (toks.empty()) throw FormatError("usemtl without a name", lineno);
      active_material = toks[0];
    }
    // o, g, s, l and unknown statements are ignored.
  }
  if (triangles.empty()) throw FormatError("mesh has no faces: " + path.string());

  // One diffuse texture per mesh.
  std::filesystem::path texture_path;
  for (const auto& name : triangle_material) {
    auto it = materials.find(name);
    if (it == materials.end()) continue;
    if (texture_path.empty())
      texture_path = it->second;
    else if (texture_path != it->second)
      throw FormatError("multiple diffuse textures are not supported: " + path.string());
  }
  // No usemtl at all: a library with a single textured material applies to the whole mesh.
  if (texture_path.empty() && materials.size() == 1 &&
      std::all_of(triangle_material.begin(), triangle_material.end(), [](const std::string& m) { return m.empty(); }))
    texture_path = materials.begin()->second;

  bool all_have_normals = true;
  for (const auto& tri : triangles)
    for (const Corner& c : tri) all_have_normals = all_have_normals && c.vn >= 0;

  Mesh mesh;
  // Mesh vertices are distinct (position, normal) pairs.
  std::map<std::pair<long, long>, std::uint32_t> vertex_of;
  for (const auto& tri : triangles) {
    Face face{};
    std::array<Vec2, 3> uv{};
    for (int k = 0; k < 3; ++k) {
      const Corner& c = tri[k];
      const std::pair<long, long> key{c.v, all_have_normals ? c.vn : -1};
      auto [it, inserted] = vertex_of.try_emplace(key, static_cast<std::uint32_t>(mesh.vertices.size()));
      if (inserted) {
        mesh.vertices.push_back(positions[c.v]);
        if (all_have_normals) {
          const Vec3 n = file_normals[c.vn];
          const double len = norm(n);
          mesh.normals.push_back(len > 0 ? n * (1.0 / len) : Vec3{0, 0, 1});
        }
      }
      face[k] = it->second;
      if (c.vt >= 0) uv[k] = texcoords[c.vt];
    }
    mesh.faces.push_back(face);
    mesh.uv_coords.push_back(uv);
  }
  if (!all_have_normals) mesh.normals = compute_vertex_normals(mesh.vertices, mesh.faces);

  if (!texture_path.empty()) {
    if (!std::filesystem::exists(texture_path)) throw IoError("texture file not found", texture_path.string());
    mesh.texture = std::make_shared<const Image>(read_image(texture_path));
    mesh.texture_ref = texture_path.string();
  }

  normalize_mesh(mesh);
  mesh.validate();
  return mesh;
}

}  // namespace advpose
