#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "advpose/render/scene.hpp"
#include "advpose/service/config.hpp"
#include "advpose/service/run_registry.hpp"

namespace httplib {
class Server;
}

namespace advpose {

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path runs_dir = "runs";
  int workers = 1;
};

// HTTP front end over one configured scene and backend.
//
//   GET  /scene                    mesh metadata and pose limits
//   POST /render   {pose, lighting} PNG, coverage box in X-Coverage-Bbox
//   POST /classify {pose, lighting} prediction JSON with the PNG in base64
//   POST /search   {command, config} run id; config is merged over the base
//   GET  /runs                     run list
//   GET  /runs/{id}                server-sent events: record..., summary
//   GET  /runs/{id}/status         run status JSON
//   GET  /runs/{id}/artifacts[/f]  file list or one file
class HttpService {
 public:
  // base_config: validated, with absolute paths.
  HttpService(nlohmann::json base_config, BackendHandle backend, ServiceOptions options);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  // Binds and serves on a background thread; returns the bound port.
  int start();
  // Binds and serves on the calling thread until stop().
  void run();
  void stop();
  int port() const { return port_; }
  RunRegistry& registry() { return *registry_; }

 private:
  void install_routes();
  int bind();

  nlohmann::json base_config_;
  BackendHandle backend_;
  ServiceOptions options_;
  SceneConfig scene_;
  std::optional<int> true_class_;
  std::unique_ptr<httplib::Server> server_;
  std::unique_ptr<RunRegistry> registry_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace advpose
