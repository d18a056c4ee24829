#include "advpose/service/http_service.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include <httplib.h>

#include "advpose/classifier/protocol.hpp"
#include "advpose/common/error.hpp"
#include "advpose/image/image_io.hpp"
#include "advpose/render/renderer.hpp"
#include "advpose/search/records.hpp"
#include "advpose/service/experiments.hpp"

namespace advpose {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// A 400 response that names the offending request field.
struct FieldError {
  std::string field;
  std::string message;
};

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_field_error(httplib::Response& res, const FieldError& e) {
  send_json(res, 400, {{"error", e.message}, {"field", e.field}});
}

json parse_body(const httplib::Request& req) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) throw FieldError{"body", "request body must be a JSON object"};
  return body;
}

const char* const kPoseFields[] = {"x_delta", "y_delta", "z_delta", "yaw", "pitch", "roll"};

PoseParams request_pose(const json& body, const FrustumSpec& frustum) {
  if (!body.contains("pose")) throw FieldError{"pose", "missing pose"};
  const json& p = body["pose"];
  if (!p.is_object()) throw FieldError{"pose", "pose must be an object with x_delta, y_delta, z_delta, yaw, pitch, roll"};
  for (const auto& [key, value] : p.items()) {
    if (std::find(std::begin(kPoseFields), std::end(kPoseFields), key) == std::end(kPoseFields))
      throw FieldError{"pose." + key, "unknown pose field"};
    if (!value.is_number() || !std::isfinite(value.get<double>()))
      throw FieldError{"pose." + key, "must be a finite number"};
  }
  PoseParams pose = pose_from_json(p);
  pose.yaw = wrap_angle(pose.yaw);
  pose.pitch = wrap_angle(pose.pitch);
  pose.roll = wrap_angle(pose.roll);
  if (!(pose.z_delta >= frustum.z_min && pose.z_delta <= frustum.z_max))
    throw FieldError{"pose.z_delta", "outside depth range [" + std::to_string(frustum.z_min) + ", " +
                                         std::to_string(frustum.z_max) + "]"};
  const double s = frustum_bound(frustum, pose.z_delta);
  if (std::abs(pose.x_delta) > s) throw FieldError{"pose.x_delta", "outside frustum bound +/-" + std::to_string(s)};
  if (std::abs(pose.y_delta) > s) throw FieldError{"pose.y_delta", "outside frustum bound +/-" + std::to_string(s)};
  return pose;
}

SceneConfig request_scene(const SceneConfig& base, const json& body) {
  SceneConfig scene = base;
  if (body.contains("lighting") && !body["lighting"].is_null()) {
    try {
      scene.lights = lighting_from_json(body["lighting"]);
    } catch (const Error& e) {
      throw FieldError{"lighting", e.what()};
    }
  }
  return scene;
}

json bbox_json(const PixelBox& b) {
  if (b.empty()) return nullptr;
  return {b.x0, b.y0, b.x1, b.y1};
}

std::string bbox_header(const PixelBox& b) {
  if (b.empty()) return "empty";
  return std::to_string(b.x0) + "," + std::to_string(b.y0) + "," + std::to_string(b.x1) + "," + std::to_string(b.y1);
}

std::string sse_event(const char* event, const std::string& data, std::optional<std::size_t> id = std::nullopt) {
  std::string out;
  if (id) out += "id: " + std::to_string(*id) + "\n";
  out += std::string("event: ") + event + "\ndata: " + data + "\n\n";
  return out;
}

json status_json(const RunState& run) {
  std::lock_guard lock(run.mutex);
  json j{{"run_id", run.id},
         {"command", run.command},
         {"status", status_name(run.status)},
         {"records", run.records.size()}};
  if (!run.error.empty()) j["error"] = run.error;
  if (run.finished()) j["summary"] = run.summary;
  return j;
}

}  // namespace

HttpService::HttpService(json base_config, BackendHandle backend, ServiceOptions options)
    : base_config_(std::move(base_config)), backend_(std::move(backend)), options_(std::move(options)) {
  validate_config(base_config_);
  const json scene_sec = base_config_.contains("scene") ? base_config_["scene"] : json::object();
  scene_ = build_scene(scene_sec);
  true_class_ = scene_true_class(scene_sec);
  server_ = std::make_unique<httplib::Server>();
  registry_ = std::make_unique<RunRegistry>(options_.runs_dir, options_.workers, backend_.classifier,
                                            backend_.handshake);
  install_routes();
}

HttpService::~HttpService() { stop(); }

int HttpService::bind() {
  if (options_.port == 0)
    port_ = server_->bind_to_any_port(options_.host);
  else
    port_ = server_->bind_to_port(options_.host, options_.port) ? options_.port : -1;
  if (port_ < 0) throw IoError("cannot bind HTTP service", options_.host + ":" + std::to_string(options_.port));
  return port_;
}

int HttpService::start() {
  bind();
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void HttpService::run() {
  bind();
  server_->listen_after_bind();
}

void HttpService::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
  if (registry_) registry_->shutdown();
}

void HttpService::install_routes() {
  auto& srv = *server_;
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  srv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type, Last-Event-ID");
    res.status = 204;
  });
  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const FieldError& e) {
      send_field_error(res, e);
    } catch (const UsageError& e) {
      send_json(res, 400, {{"error", e.what()}});
    } catch (const DomainError& e) {
      send_json(res, 400, {{"error", e.what()}});
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", e.what()}});
    } catch (...) {
      send_json(res, 500, {{"error", "unknown error"}});
    }
  });

  srv.Get("/scene", [this](const httplib::Request&, httplib::Response& res) {
    const auto& cam = scene_.camera;
    const Mesh& mesh = *scene_.mesh;
    const ClassifierInfo& info = backend_.classifier->info();
    const double s_max = std::max(frustum_bound(cam, cam.z_min), frustum_bound(cam, cam.z_max));
    json presets = json::array();
    for (auto p : {LightingPreset::kBright, LightingPreset::kMedium, LightingPreset::kDark}) {
      const LightingConfig l = LightingConfig::preset(p);
      presets.push_back({{"name", preset_name(p)}, {"directional", l.directional_intensity}, {"ambient", l.ambient_intensity}});
    }
    send_json(res, 200,
              {{"mesh", {{"id", scene_.mesh_id},
                         {"vertices", mesh.vertices.size()},
                         {"faces", mesh.faces.size()},
                         {"textured", mesh.texture != nullptr}}},
               {"image", {{"height", scene_.height}, {"width", scene_.width}}},
               {"camera", {{"camera_z", cam.camera_z}, {"half_angle_deg", rad_to_deg(cam.half_angle_v)}}},
               {"limits",
                {{"z_delta", {{"min", cam.z_min}, {"max", cam.z_max}}},
                 {"x_delta", {{"min", -s_max}, {"max", s_max}}},
                 {"y_delta", {{"min", -s_max}, {"max", s_max}}},
                 {"yaw", {{"min", 0.0}, {"max", kTwoPi}}},
                 {"pitch", {{"min", 0.0}, {"max", kTwoPi}}},
                 {"roll", {{"min", 0.0}, {"max", kTwoPi}}},
                 {"lateral_bound", {{"camera_z", cam.camera_z}, {"tan_half_angle", std::tan(cam.half_angle_v)}}}}},
               {"lighting", {{"presets", presets}}},
               {"true_class", true_class_ ? json(*true_class_) : json(nullptr)},
               {"backend",
                {{"kind", backend_.kind},
                 {"num_classes", info.num_classes},
                 {"supports_embedding", info.supports_embedding},
                 {"labels", info.labels}}}});
  });

  srv.Post("/render", [this](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    const SceneConfig scene = request_scene(scene_, body);
    const PoseParams pose = request_pose(body, scene.camera);
    const RenderOutput out = render(scene, pose);
    const auto png = encode_png(out.pixels);
    res.set_header("X-Coverage-Bbox", bbox_header(coverage_bbox(out)));
    res.set_header("Access-Control-Expose-Headers", "X-Coverage-Bbox");
    res.set_content(std::string(png.begin(), png.end()), "image/png");
  });

  srv.Post("/classify", [this](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    const SceneConfig scene = request_scene(scene_, body);
    const PoseParams pose = request_pose(body, scene.camera);
    const RenderOutput out = render(scene, pose);
    ClassifierResponse r;
    try {
      r = backend_.classifier->classify(out);
    } catch (const TransportError& e) {
      send_json(res, 503, {{"error", e.what()}, {"handshake_status", "unreachable"}, {"endpoint", e.endpoint()}});
      return;
    } catch (const ProtocolError& e) {
      send_json(res, 503, {{"error", e.what()}, {"handshake_status", "protocol_error"}, {"endpoint", backend_.endpoint}});
      return;
    }
    const auto& labels = backend_.classifier->info().labels;
    json top5 = json::array();
    for (int k : r.top_k(5)) {
      json item{{"label", k}, {"prob", r.probs[static_cast<std::size_t>(k)]}};
      if (static_cast<std::size_t>(k) < labels.size()) item["name"] = labels[static_cast<std::size_t>(k)];
      top5.push_back(item);
    }
    const auto png = encode_png(out.pixels);
    json j{{"pose", pose_to_json(pose)},
           {"probs", r.probs},
           {"top_label", r.top_label},
           {"confidence", r.confidence()},
           {"top5", top5},
           {"coverage_bbox", bbox_json(coverage_bbox(out))},
           {"image_png_base64", protocol::base64_encode(png)}};
    if (true_class_) j["correct"] = r.top_label == *true_class_;
    send_json(res, 200, j);
  });

  srv.Post("/search", [this](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    for (const auto& [key, _] : body.items())
      if (key != "command" && key != "config") throw FieldError{key, "unknown field; expected command and config"};
    const std::string command = body.value("command", std::string("attack"));
    json config = base_config_;
    if (body.contains("config")) {
      if (!body["config"].is_object()) throw FieldError{"config", "config must be an object"};
      json patch = body["config"];
      for (const char* fixed : {"scene", "backend", "backend_b"})
        if (patch.contains(fixed)) throw FieldError{std::string("config.") + fixed, "fixed by the service"};
      config.merge_patch(patch);
    }
    const std::string id = registry_->submit(command, config);
    send_json(res, 202, {{"run_id", id}, {"events", "/runs/" + id}, {"artifacts", "/runs/" + id + "/artifacts"}});
  });

  srv.Get("/runs", [this](const httplib::Request&, httplib::Response& res) {
    json list = json::array();
    for (const auto& run : registry_->list()) list.push_back(status_json(*run));
    send_json(res, 200, list);
  });

  srv.Get(R"(/runs/([A-Za-z0-9_\-]+)/status)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto run = registry_->find(req.matches[1]);
    if (!run) return send_json(res, 404, {{"error", "unknown run"}});
    send_json(res, 200, status_json(*run));
  });

  srv.Get(R"(/runs/([A-Za-z0-9_\-]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const auto run = registry_->find(req.matches[1]);
    if (!run) return send_json(res, 404, {{"error", "unknown run"}});
    // Resume after the last event the client saw.
    std::size_t next = 0;
    if (req.has_header("Last-Event-ID")) next = std::stoull(req.get_header_value("Last-Event-ID")) + 1;
    if (req.has_param("from")) next = std::stoull(req.get_param_value("from"));
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider("text/event-stream", [run, next](std::size_t, httplib::DataSink& sink) mutable {
      std::vector<std::string> batch;
      bool finished = false;
      json summary;
      std::string status;
      std::size_t first = next;
      {
        std::unique_lock lock(run->mutex);
        run->changed.wait_for(lock, std::chrono::milliseconds(200),
                              [&] { return run->records.size() > next || run->finished(); });
        if (next < run->records.size()) batch.assign(run->records.begin() + static_cast<std::ptrdiff_t>(next), run->records.end());
        finished = run->finished();
        if (finished) {
          summary = run->summary;
          status = status_name(run->status);
        }
      }
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const std::string ev = sse_event("record", batch[i], first + i);
        if (!sink.write(ev.data(), ev.size())) return false;
      }
      next = first + batch.size();
      if (finished) {
        summary["status"] = status;
        const std::string ev = sse_event("summary", summary.dump());
        if (!sink.write(ev.data(), ev.size())) return false;
        sink.done();
      } else if (batch.empty()) {
        static const std::string keepalive = ": keepalive\n\n";
        if (!sink.write(keepalive.data(), keepalive.size())) return false;
      }
      return true;
    });
  });

  srv.Get(R"(/runs/([A-Za-z0-9_\-]+)/artifacts)", [this](const httplib::Request& req, httplib::Response& res) {
    const auto run = registry_->find(req.matches[1]);
    if (!run) return send_json(res, 404, {{"error", "unknown run"}});
    json files = json::array();
    if (fs::exists(run->dir))
      for (const auto& e : fs::directory_iterator(run->dir))
        if (e.is_regular_file()) files.push_back({{"name", e.path().filename().string()}, {"bytes", e.file_size()}});
    std::sort(files.begin(), files.end(), [](const json& a, const json& b) { return a["name"] < b["name"]; });
    send_json(res, 200, {{"run_id", run->id}, {"files", files}});
  });

  srv.Get(R"(/runs/([A-Za-z0-9_\-]+)/artifacts/([A-Za-z0-9_.\-]+))",
          [this](const httplib::Request& req, httplib::Response& res) {
            const auto run = registry_->find(req.matches[1]);
            const std::string name = req.matches[2];
            if (!run || name.find("..") != std::string::npos) return send_json(res, 404, {{"error", "not found"}});
            const fs::path path = run->dir / name;
            if (!fs::is_regular_file(path)) return send_json(res, 404, {{"error", "not found"}});
            const auto bytes = read_file_bytes(path);
            std::string type = "application/octet-stream";
            const std::string ext = path.extension().string();
            if (ext == ".json") type = "application/json";
            else if (ext == ".jsonl") type = "application/x-ndjson";
            else if (ext == ".csv") type = "text/csv";
            else if (ext == ".png") type = "image/png";
            res.set_content(std::string(bytes.begin(), bytes.end()), type);
          });
}

}  // namespace advpose
