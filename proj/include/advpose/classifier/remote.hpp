#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "advpose/classifier/classifier.hpp"
#include "advpose/classifier/protocol.hpp"
#include "advpose/classifier/transport.hpp"

namespace advpose {

using TransportFactory = std::function<std::unique_ptr<LineTransport>()>;

struct RemoteOptions {
  std::string endpoint;
  // Upper bound on concurrent connections (one request in flight on each).
  int pool_size = 1;
  // Attempts per request; transport failures reconnect and retry.
  int max_attempts = 3;
  std::chrono::milliseconds timeout{30000};
  std::chrono::milliseconds retry_backoff{50};
};

// Protocol v1 client. The handshake is read on every new connection and
// must agree with the first one.
class RemoteClassifier final : public Classifier {
 public:
  // Connects once to read the handshake. Throws TransportError or
  // ProtocolError.
  explicit RemoteClassifier(RemoteOptions options, TransportFactory factory = nullptr);
  ~RemoteClassifier() override;

  const ClassifierInfo& info() const override { return info_; }
  ClassifierResponse classify(const RenderOutput& image) override;
  std::vector<double> embed(const RenderOutput& image) override;

  const std::string& endpoint() const { return options_.endpoint; }
  // The raw handshake object as received.
  const nlohmann::json& handshake() const { return handshake_; }
  long long connections_opened() const;

 private:
  struct Connection {
    std::unique_ptr<LineTransport> transport;
  };

  std::unique_ptr<Connection> open_connection();
  std::unique_ptr<Connection> acquire();
  void release(std::unique_ptr<Connection> conn, bool healthy);
  // One request/response exchange with retries.
  protocol::Response exchange(protocol::Op op, const RenderOutput& image);

  RemoteOptions options_;
  TransportFactory factory_;
  ClassifierInfo info_;
  nlohmann::json handshake_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::vector<std::unique_ptr<Connection>> idle_;
  int live_ = 0;
  long long opened_ = 0;
  long long next_id_ = 0;
};

}  // namespace advpose
