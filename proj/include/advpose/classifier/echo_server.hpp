#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "advpose/classifier/classifier.hpp"
#include "advpose/classifier/transport.hpp"

namespace advpose {

// Fixture backend: the same probability vector for every image and a fixed
// embedding pattern (see echo_embedding).
class EchoClassifier final : public Classifier {
 public:
  EchoClassifier(std::vector<double> probs, int embedding_dim = 4096, std::vector<std::string> labels = {});

  const ClassifierInfo& info() const override { return info_; }
  ClassifierResponse classify(const RenderOutput& image) override;
  std::vector<double> embed(const RenderOutput& image) override;

 private:
  ClassifierInfo info_;
  std::vector<double> probs_;
  int embedding_dim_;
};

// Deterministic embedding served by the echo fixture. Values are k/1024 for
// small integers k, so they survive a JSON round trip unchanged.
std::vector<double> echo_embedding(int dim);

// Serves protocol v1 for `backend` on one stream until the peer hangs up or
// `stop` becomes true. Every request gets a reply; malformed requests get an
// error reply carrying the id whenever it can be recovered.
void serve_stream(Classifier& backend, LineTransport& stream, const std::atomic<bool>* stop = nullptr);

// Protocol v1 server on a TCP port, one thread per connection.
class ProtocolServer {
 public:
  ProtocolServer(std::shared_ptr<Classifier> backend, const std::string& host = "127.0.0.1", int port = 0);
  ~ProtocolServer();
  ProtocolServer(const ProtocolServer&) = delete;
  ProtocolServer& operator=(const ProtocolServer&) = delete;

  int port() const { return listener_.port(); }
  std::string endpoint() const { return "tcp://127.0.0.1:" + std::to_string(port()); }
  // Drops live connections and stops accepting; idempotent.
  void stop();
  long long connections_accepted() const { return accepted_.load(); }

 private:
  void accept_loop();

  std::shared_ptr<Classifier> backend_;
  TcpListener listener_;
  std::atomic<bool> stopping_{false};
  std::atomic<long long> accepted_{0};
  std::mutex mu_;
  std::vector<std::thread> workers_;
  std::thread acceptor_;
};

}  // namespace advpose
