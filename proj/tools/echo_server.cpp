// Protocol v1 backend for tests and local use: either the fixed-output echo
// fixture or a synthetic classifier loaded from JSON.

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "advpose/classifier/echo_server.hpp"
#include "advpose/classifier/synthetic.hpp"
#include "advpose/common/error.hpp"
#include "advpose/service/config.hpp"

using namespace advpose;

namespace {
std::atomic<bool> g_stop{false};
}

int main(int argc, char** argv) {
  CLI::App app{"Protocol v1 echo/synthetic backend"};
  bool stdio = false;
  std::string host = "127.0.0.1";
  int port = 0;
  std::string port_file;
  std::vector<double> probs{0.7, 0.2, 0.1};
  int embedding_dim = 4096;
  std::string synthetic_path;
  app.add_flag("--stdio", stdio, "serve one session on stdin/stdout");
  app.add_option("--host", host);
  app.add_option("--port", port, "0 picks a free port");
  app.add_option("--port-file", port_file, "write the bound port here once listening");
  app.add_option("--probs", probs, "echo probabilities")->delimiter(',');
  app.add_option("--embedding-dim", embedding_dim);
  app.add_option("--synthetic", synthetic_path, "serve a synthetic classifier from this JSON config");
  CLI11_PARSE(app, argc, argv);

  try {
    std::shared_ptr<Classifier> backend;
    if (!synthetic_path.empty())
      backend = std::make_shared<SyntheticClassifier>(synthetic_config_from_json(load_config_file(synthetic_path)));
    else
      backend = std::make_shared<EchoClassifier>(probs, embedding_dim);

    if (stdio) {
      FdLineTransport stream(0, 1, "stdio", std::chrono::hours(24));
      serve_stream(*backend, stream);
      return 0;
    }
    ProtocolServer server(backend, host, port);
    if (!port_file.empty()) {
      std::ofstream(port_file + ".tmp") << server.port() << '\n';
      std::filesystem::rename(port_file + ".tmp", port_file);
    }
    std::cerr << "listening on " << host << ':' << server.port() << '\n';
    std::signal(SIGINT, [](int) { g_stop = true; });
    std::signal(SIGTERM, [](int) { g_stop = true; });
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
