#include "advpose/classifier/conformance.hpp"

#include <cmath>
#include <functional>

#include "advpose/classifier/protocol.hpp"
#include "advpose/common/error.hpp"

namespace advpose {
namespace {

Rgb8Image test_image(int h, int w) {
  Rgb8Image img{h, w, std::vector<std::uint8_t>(static_cast<std::size_t>(h) * w * 3)};
  for (std::size_t i = 0; i < img.rgb.size(); ++i) img.rgb[i] = static_cast<std::uint8_t>((i * 29) % 256);
  return img;
}

std::string request_line(const std::string& id, protocol::Op op) {
  return protocol::encode_request({id, op, test_image(8, 8)});
}

struct Session {
  std::unique_ptr<LineTransport> transport;
  ClassifierInfo info;

  protocol::Response ask(const std::string& line) {
    transport->send_line(line);
    return protocol::decode_response(transport->recv_line());
  }
};

Session open_session(const TransportFactory& factory) {
  Session s;
  s.transport = factory();
  s.info = protocol::decode_handshake(s.transport->recv_line());
  return s;
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw ProtocolError(msg);
}

void check_probs(const protocol::Response& r, const std::string& id, const ClassifierInfo& info,
                 const ConformanceExpectations& expect) {
  require(!r.error, "unexpected error reply: " + r.error.value_or(""));
  require(r.id == id, "id not echoed");
  require(static_cast<int>(r.probs.size()) == info.num_classes, "probs length differs from num_classes");
  make_response(r.probs);
  if (expect.probs) require(r.probs == *expect.probs, "probs differ from the expected fixture values");
}

void expect_error(Session& s, const std::string& line, const std::optional<std::string>& id) {
  const protocol::Response r = s.ask(line);
  require(r.error.has_value(), "expected an error reply");
  if (id) require(r.id == id, "error reply did not echo id '" + *id + "'");
}

}  // namespace

std::vector<ConformanceCheck> run_conformance(const TransportFactory& factory, const ConformanceExpectations& expect) {
  std::vector<ConformanceCheck> out;
  std::optional<Session> session;
  auto run = [&](const std::string& name, const std::function<void()>& body) {
    ConformanceCheck c{name, false, ""};
    try {
      if (!session && name != "handshake") throw ProtocolError("no session (handshake failed)");
      body();
      c.passed = true;
    } catch (const std::exception& e) {
      c.detail = e.what();
      // A broken stream would fail every later check for the same reason.
      if (dynamic_cast<const TransportError*>(&e)) session.reset();
    }
    out.push_back(std::move(c));
  };

  run("handshake", [&] {
    session = open_session(factory);
    require(session->info.num_classes >= 2, "num_classes < 2");
  });
  run("classify_id_echo", [&] { check_probs(session->ask(request_line("c-1", protocol::Op::kClassify)), "c-1", session->info, expect); });
  run("classify_deterministic", [&] {
    const auto a = session->ask(request_line("c-2", protocol::Op::kClassify));
    const auto b = session->ask(request_line("c-3", protocol::Op::kClassify));
    check_probs(a, "c-2", session->info, expect);
    check_probs(b, "c-3", session->info, expect);
    require(a.probs == b.probs, "identical requests gave different probs");
  });
  run("classify_unusual_id", [&] {
    const std::string id = "id with \"quotes\", \\ and \xc3\xa9";
    check_probs(session->ask(request_line(id, protocol::Op::kClassify)), id, session->info, expect);
  });
  run("embed", [&] {
    const auto r = session->ask(request_line("e-1", protocol::Op::kEmbed));
    if (!session->info.supports_embedding) {
      require(r.error.has_value() && r.id == "e-1", "embed without support must be an error reply with the id");
      return;
    }
    require(!r.error, "unexpected error reply: " + r.error.value_or(""));
    require(r.id == "e-1", "id not echoed");
    require(!r.embedding.empty(), "empty embedding");
    if (expect.embedding) require(r.embedding == *expect.embedding, "embedding differs from the expected fixture vector");
    const auto again = session->ask(request_line("e-2", protocol::Op::kEmbed));
    require(again.embedding == r.embedding, "identical requests gave different embeddings");
  });
  run("error_malformed_json", [&] { expect_error(*session, "{\"id\": \"m-1\", \"op\": ", std::nullopt); });
  run("error_not_an_object", [&] { expect_error(*session, "[1, 2, 3]", std::nullopt); });
  run("error_unknown_op", [&] {
    expect_error(*session,
                 R"({"id":"u-1","op":"segment","width":1,"height":1,"pixels_b64":"AAAA"})", "u-1");
  });
  run("error_bad_base64", [&] {
    expect_error(*session, R"({"id":"b-1","op":"classify","width":1,"height":1,"pixels_b64":"@@@@"})", "b-1");
  });
  run("error_size_mismatch", [&] {
    expect_error(*session, R"({"id":"s-1","op":"classify","width":2,"height":2,"pixels_b64":"AAAA"})", "s-1");
  });
  run("error_missing_fields", [&] { expect_error(*session, R"({"id":"f-1","op":"classify"})", "f-1"); });
  run("error_bad_dimensions", [&] {
    expect_error(*session, R"({"id":"d-1","op":"classify","width":-3,"height":0,"pixels_b64":""})", "d-1");
  });
  run("alive_after_errors", [&] {
    check_probs(session->ask(request_line("a-1", protocol::Op::kClassify)), "a-1", session->info, expect);
  });
  run("second_connection", [&] {
    Session other = open_session(factory);
    require(other.info.labels == session->info.labels, "handshake differs between connections");
    check_probs(other.ask(request_line("n-1", protocol::Op::kClassify)), "n-1", other.info, expect);
  });
  return out;
}

bool all_passed(const std::vector<ConformanceCheck>& checks) {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return !checks.empty();
}

}  // namespace advpose
