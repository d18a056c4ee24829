#include "advpose/classifier/remote.hpp"

#include <thread>

#include "advpose/common/error.hpp"

namespace advpose {

RemoteClassifier::RemoteClassifier(RemoteOptions options, TransportFactory factory)
    : options_(std::move(options)), factory_(std::move(factory)) {
  if (options_.pool_size < 1) throw PreconditionError("pool_size must be >= 1");
  if (options_.max_attempts < 1) throw PreconditionError("max_attempts must be >= 1");
  if (!factory_) {
    const std::string endpoint = options_.endpoint;
    const auto timeout = options_.timeout;
    factory_ = [endpoint, timeout] { return connect_endpoint(endpoint, timeout); };
  }
  auto transport = factory_();
  const std::string line = transport->recv_line();
  info_ = protocol::decode_handshake(line);
  handshake_ = nlohmann::json::parse(line);
  if (info_.metadata.contains("input_size") && info_.metadata["input_size"].is_array() &&
      info_.metadata["input_size"].size() == 2) {
    info_.input_height = info_.metadata["input_size"][0].get<int>();
    info_.input_width = info_.metadata["input_size"][1].get<int>();
  }
  auto conn = std::make_unique<Connection>();
  conn->transport = std::move(transport);
  std::lock_guard lock(mu_);
  idle_.push_back(std::move(conn));
  live_ = 1;
  opened_ = 1;
}

RemoteClassifier::~RemoteClassifier() = default;

long long RemoteClassifier::connections_opened() const {
  std::lock_guard lock(mu_);
  return opened_;
}

std::unique_ptr<RemoteClassifier::Connection> RemoteClassifier::open_connection() {
  auto transport = factory_();
  const ClassifierInfo again = protocol::decode_handshake(transport->recv_line());
  if (again.num_classes != info_.num_classes || again.labels != info_.labels)
    throw ProtocolError("backend handshake changed between connections");
  auto conn = std::make_unique<Connection>();
  conn->transport = std::move(transport);
  return conn;
}

std::unique_ptr<RemoteClassifier::Connection> RemoteClassifier::acquire() {
  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !idle_.empty() || live_ < options_.pool_size; });
    if (!idle_.empty()) {
      auto conn = std::move(idle_.back());
      idle_.pop_back();
      return conn;
    }
    ++live_;
    ++opened_;
  }
  try {
    return open_connection();
  } catch (...) {
    std::lock_guard lock(mu_);
    --live_;
    cv_.notify_one();
    throw;
  }
}

void RemoteClassifier::release(std::unique_ptr<Connection> conn, bool healthy) {
  std::lock_guard lock(mu_);
  if (healthy && conn)
    idle_.push_back(std::move(conn));
  else
    --live_;
  cv_.notify_one();
}

protocol::Response RemoteClassifier::exchange(protocol::Op op, const RenderOutput& image) {
  protocol::Request req;
  {
    std::lock_guard lock(mu_);
    req.id = "req-" + std::to_string(++next_id_);
  }
  req.op = op;
  req.image = quantize(fit_to_input(image.pixels, info_));
  const std::string line = protocol::encode_request(req);

  std::string last_error;
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    if (attempt > 1) std::this_thread::sleep_for(options_.retry_backoff * (attempt - 1));
    std::unique_ptr<Connection> conn;
    try {
      conn = acquire();
      conn->transport->send_line(line);
      const std::string reply = conn->transport->recv_line();
      protocol::Response resp;
      try {
        resp = protocol::decode_response(reply);
      } catch (...) {
        release(std::move(conn), false);
        throw;
      }
      if (resp.error) {
        release(std::move(conn), true);
        throw ProtocolError("backend reported an error for " + req.id + ": " + *resp.error);
      }
      if (resp.id != req.id) {
        // Out of step with the server; the connection cannot be trusted.
        release(std::move(conn), false);
        throw ProtocolError("response id '" + resp.id.value_or("") + "' does not match request '" + req.id + "'");
      }
      release(std::move(conn), true);
      return resp;
    } catch (const TransportError& e) {
      if (conn) release(std::move(conn), false);
      last_error = e.what();
    }
  }
  throw TransportError("backend unreachable (" + last_error + ")", options_.endpoint, options_.max_attempts);
}

ClassifierResponse RemoteClassifier::classify(const RenderOutput& image) {
  const auto start = std::chrono::steady_clock::now();
  protocol::Response resp = exchange(protocol::Op::kClassify, image);
  if (resp.probs.empty()) throw ProtocolError("expected probs in reply to classify");
  if (static_cast<int>(resp.probs.size()) != info_.num_classes)
    throw ProtocolError("probs length " + std::to_string(resp.probs.size()) + " differs from num_classes " +
                        std::to_string(info_.num_classes));
  ClassifierResponse r = make_response(std::move(resp.probs));
  r.latency = std::chrono::steady_clock::now() - start;
  return r;
}

std::vector<double> RemoteClassifier::embed(const RenderOutput& image) {
  if (!info_.supports_embedding) throw CapabilityError("backend does not advertise embedding support");
  protocol::Response resp = exchange(protocol::Op::kEmbed, image);
  if (resp.embedding.empty()) throw ProtocolError("expected embedding in reply to embed");
  return std::move(resp.embedding);
}

}  // namespace advpose
