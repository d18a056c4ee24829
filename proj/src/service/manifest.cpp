#include "advpose/service/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>

#include <sodium.h>

#include "advpose/common/error.hpp"
#include "advpose/service/config.hpp"

namespace advpose {

namespace {

template <typename T>
void absorb(crypto_hash_sha256_state& st, const std::vector<T>& v) {
  const std::uint64_t n = v.size();
  crypto_hash_sha256_update(&st, reinterpret_cast<const unsigned char*>(&n), sizeof n);
  if (!v.empty())
    crypto_hash_sha256_update(&st, reinterpret_cast<const unsigned char*>(v.data()), v.size() * sizeof(T));
}

void absorb_image(crypto_hash_sha256_state& st, const Image* img) {
  const std::int32_t dims[2] = {img ? img->height() : 0, img ? img->width() : 0};
  crypto_hash_sha256_update(&st, reinterpret_cast<const unsigned char*>(dims), sizeof dims);
  if (img) absorb(st, img->data());
}

void ensure_sodium() {
  if (sodium_init() < 0) throw Error("libsodium failed to initialize");
}

}  // namespace

std::string scene_hash(const SceneConfig& scene) {
  ensure_sodium();
  crypto_hash_sha256_state st;
  crypto_hash_sha256_init(&st);
  if (scene.mesh) {
    const Mesh& m = *scene.mesh;
    std::vector<double> coords;
    for (const auto& v : m.vertices) coords.insert(coords.end(), {v.x, v.y, v.z});
    absorb(st, coords);
    absorb(st, m.faces);
    std::vector<double> uvs;
    for (const auto& tri : m.uv_coords)
      for (const auto& uv : tri) uvs.insert(uvs.end(), {uv.u, uv.v});
    absorb(st, uvs);
    absorb_image(st, m.texture.get());
  }
  absorb_image(st, scene.background.image.get());
  const std::string params = scene_params_json(scene).dump();
  crypto_hash_sha256_update(&st, reinterpret_cast<const unsigned char*>(params.data()), params.size());
  unsigned char out[crypto_hash_sha256_BYTES];
  crypto_hash_sha256_final(&st, out);
  char hex[crypto_hash_sha256_BYTES * 2 + 1];
  sodium_bin2hex(hex, sizeof hex, out, sizeof out);
  return hex;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string make_run_id() {
  ensure_sodium();
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%S", &tm);
  unsigned char rnd[4];
  randombytes_buf(rnd, sizeof rnd);
  char hex[9];
  sodium_bin2hex(hex, sizeof hex, rnd, sizeof rnd);
  return std::string("run-") + stamp + "-" + hex;
}

nlohmann::json to_json(const RunManifest& m) {
  return {{"run_id", m.run_id},
          {"command", m.command},
          {"config", m.config},
          {"seed", m.seed},
          {"scene_hash", m.scene_hash},
          {"backend_handshake", m.backend_handshake},
          {"started_at", m.started_at},
          {"finished_at", m.finished_at},
          {"outputs", m.outputs},
          {"status", m.status},
          {"error", m.error}};
}

RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.run_id = j.at("run_id").get<std::string>();
    m.command = j.at("command").get<std::string>();
    m.config = j.at("config");
    m.seed = j.value("seed", std::uint64_t{0});
    m.scene_hash = j.value("scene_hash", std::string());
    m.backend_handshake = j.value("backend_handshake", nlohmann::json());
    m.started_at = j.value("started_at", std::string());
    m.finished_at = j.value("finished_at", std::string());
    m.outputs = j.value("outputs", std::vector<std::string>{});
    m.status = j.value("status", std::string("ok"));
    m.error = j.value("error", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid manifest: ") + e.what());
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest", path.string());
  out << to_json(m).dump(2) << '\n';
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("manifest not found", path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return manifest_from_json(j);
}

}  // namespace advpose
