#include "advpose/classifier/echo_server.hpp"

#include <chrono>

#include "advpose/classifier/protocol.hpp"
#include "advpose/common/error.hpp"

namespace advpose {

EchoClassifier::EchoClassifier(std::vector<double> probs, int embedding_dim, std::vector<std::string> labels)
    : probs_(std::move(probs)), embedding_dim_(embedding_dim) {
  make_response(probs_);  // validates
  if (labels.empty())
    for (std::size_t i = 0; i < probs_.size(); ++i) labels.push_back("class_" + std::to_string(i));
  if (labels.size() != probs_.size()) throw PreconditionError("echo labels length must equal probs length");
  info_.num_classes = static_cast<int>(probs_.size());
  info_.labels = std::move(labels);
  info_.supports_embedding = embedding_dim_ > 0;
  info_.metadata = {{"kind", "echo"}, {"preprocessing", "none"}};
}

ClassifierResponse EchoClassifier::classify(const RenderOutput&) { return make_response(probs_); }

std::vector<double> EchoClassifier::embed(const RenderOutput&) {
  if (embedding_dim_ <= 0) throw CapabilityError("echo backend configured without embeddings");
  return echo_embedding(embedding_dim_);
}

std::vector<double> echo_embedding(int dim) {
  std::vector<double> out(static_cast<std::size_t>(std::max(dim, 0)));
  for (int i = 0; i < dim; ++i) out[i] = static_cast<double>((i * 37) % 1024 - 512) / 1024.0;
  return out;
}

void serve_stream(Classifier& backend, LineTransport& stream, const std::atomic<bool>* stop) {
  stream.send_line(protocol::encode_handshake(backend.info()));
  for (;;) {
    if (stop && stop->load()) return;
    std::string line;
    try {
      line = stream.recv_line();
    } catch (const TransportTimeout&) {
      continue;
    } catch (const TransportError&) {
      return;
    } catch (const ProtocolError& e) {
      stream.send_line(protocol::encode_error(std::nullopt, e.what()));
      return;
    }
    if (line.empty()) continue;
    std::optional<std::string> id;
    std::string reply;
    try {
      const protocol::Request req = protocol::decode_request(line, &id);
      RenderOutput img;
      img.pixels = dequantize(req.image);
      if (req.op == protocol::Op::kClassify) {
        const ClassifierResponse r = backend.classify(img);
        reply = protocol::encode_probs(req.id, r.probs);
      } else {
        const std::vector<double> e = backend.embed(img);
        reply = protocol::encode_embedding(req.id, e);
      }
    } catch (const std::exception& e) {
      reply = protocol::encode_error(id, e.what());
    }
    try {
      stream.send_line(reply);
    } catch (const TransportError&) {
      return;
    }
  }
}

ProtocolServer::ProtocolServer(std::shared_ptr<Classifier> backend, const std::string& host, int port)
    : backend_(std::move(backend)), listener_(host, port) {
  acceptor_ = std::thread([this] { accept_loop(); });
}

ProtocolServer::~ProtocolServer() { stop(); }

void ProtocolServer::accept_loop() {
  while (!stopping_.load()) {
    std::unique_ptr<LineTransport> conn = listener_.accept(std::chrono::milliseconds(100));
    if (!conn) return;
    ++accepted_;
    std::lock_guard lock(mu_);
    workers_.emplace_back([this, c = std::shared_ptr<LineTransport>(std::move(conn))] {
      try {
        serve_stream(*backend_, *c, &stopping_);
      } catch (const std::exception&) {
        // Peer went away mid-handshake.
      }
    });
  }
}

void ProtocolServer::stop() {
  if (stopping_.exchange(true)) return;
  listener_.close();
  if (acceptor_.joinable()) acceptor_.join();
  std::lock_guard lock(mu_);
  for (auto& t : workers_)
    if (t.joinable()) t.join();
  workers_.clear();
}

}  // namespace advpose
