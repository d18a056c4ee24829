#include "advpose/classifier/protocol.hpp"

#include <sodium.h>

#include <cmath>

#include "advpose/common/error.hpp"

namespace advpose::protocol {

using nlohmann::json;

namespace {

json parse_object(std::string_view line, const char* what) {
  json j = json::parse(line.begin(), line.end(), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ProtocolError(std::string(what) + ": malformed JSON");
  if (!j.is_object()) throw ProtocolError(std::string(what) + ": expected a JSON object");
  return j;
}

std::vector<double> number_array(const json& j, const char* field) {
  if (!j.is_array()) throw ProtocolError(std::string("'") + field + "' must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw ProtocolError(std::string("'") + field + "' must contain only numbers");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ProtocolError(std::string("'") + field + "' contains a non-finite value");
    out.push_back(d);
  }
  return out;
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  const std::size_t len = sodium_base64_encoded_len(bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  std::string out(len, '\0');
  sodium_bin2base64(out.data(), len, bytes.data(), bytes.size(), sodium_base64_VARIANT_ORIGINAL);
  out.resize(len - 1);  // drop the terminator
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::vector<std::uint8_t> out(text.size() / 4 * 3 + 3);
  std::size_t written = 0;
  const char* end = nullptr;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &written, &end,
                        sodium_base64_VARIANT_ORIGINAL) != 0 ||
      end != text.data() + text.size())
    throw ProtocolError("invalid base64 payload");
  out.resize(written);
  return out;
}

std::string encode_handshake(const ClassifierInfo& info) {
  json j = info.metadata.is_object() ? info.metadata : json::object();
  j["protocol"] = kVersion;
  j["num_classes"] = info.num_classes;
  j["labels"] = info.labels;
  j["supports_embedding"] = info.supports_embedding;
  return j.dump();
}

ClassifierInfo decode_handshake(std::string_view line) {
  const json j = parse_object(line, "handshake");
  if (!j.contains("protocol") || !j["protocol"].is_number_integer())
    throw ProtocolError("handshake: missing integer 'protocol'");
  if (j["protocol"].get<int>() != kVersion)
    throw ProtocolError("handshake: unsupported protocol version " + j["protocol"].dump());
  if (!j.contains("num_classes") || !j["num_classes"].is_number_integer())
    throw ProtocolError("handshake: missing integer 'num_classes'");
  if (!j.contains("labels") || !j["labels"].is_array()) throw ProtocolError("handshake: missing array 'labels'");
  if (!j.contains("supports_embedding") || !j["supports_embedding"].is_boolean())
    throw ProtocolError("handshake: missing boolean 'supports_embedding'");
  ClassifierInfo info;
  info.num_classes = j["num_classes"].get<int>();
  if (info.num_classes < 2) throw ProtocolError("handshake: num_classes must be >= 2");
  for (const auto& l : j["labels"]) {
    if (!l.is_string()) throw ProtocolError("handshake: labels must be strings");
    info.labels.push_back(l.get<std::string>());
  }
  if (static_cast<int>(info.labels.size()) != info.num_classes)
    throw ProtocolError("handshake: labels length differs from num_classes");
  info.supports_embedding = j["supports_embedding"].get<bool>();
  info.metadata = j;
  info.metadata.erase("labels");
  return info;
}

std::string encode_request(const Request& r) {
  if (r.image.rgb.size() != static_cast<std::size_t>(r.image.width) * r.image.height * 3)
    throw PreconditionError("request image buffer does not match its dimensions");
  return json{{"id", r.id},
              {"op", r.op == Op::kClassify ? "classify" : "embed"},
              {"width", r.image.width},
              {"height", r.image.height},
              {"pixels_b64", base64_encode(r.image.rgb)}}
      .dump();
}

Request decode_request(std::string_view line, std::optional<std::string>* recovered_id) {
  if (line.size() > kMaxLineBytes) throw ProtocolError("request exceeds maximum size");
  const json j = parse_object(line, "request");
  if (!j.contains("id") || !j["id"].is_string()) throw ProtocolError("request: missing string 'id'");
  Request r;
  r.id = j["id"].get<std::string>();
  if (recovered_id) *recovered_id = r.id;
  if (!j.contains("op") || !j["op"].is_string()) throw ProtocolError("request: missing string 'op'");
  const auto op = j["op"].get<std::string>();
  if (op == "classify")
    r.op = Op::kClassify;
  else if (op == "embed")
    r.op = Op::kEmbed;
  else
    throw ProtocolError("request: unknown op '" + op + "'");
  for (const char* f : {"width", "height"})
    if (!j.contains(f) || !j[f].is_number_integer() || j[f].get<long long>() <= 0 || j[f].get<long long>() > 16384)
      throw ProtocolError(std::string("request: '") + f + "' must be a positive integer <= 16384");
  r.image.width = j["width"].get<int>();
  r.image.height = j["height"].get<int>();
  if (!j.contains("pixels_b64") || !j["pixels_b64"].is_string())
    throw ProtocolError("request: missing string 'pixels_b64'");
  r.image.rgb = base64_decode(j["pixels_b64"].get_ref<const std::string&>());
  if (r.image.rgb.size() != static_cast<std::size_t>(r.image.width) * r.image.height * 3)
    throw ProtocolError("request: payload size does not match width*height*3");
  return r;
}

std::string encode_probs(const std::string& id, std::span<const double> probs) {
  return json{{"id", id}, {"probs", std::vector<double>(probs.begin(), probs.end())}}.dump();
}

std::string encode_embedding(const std::string& id, std::span<const double> embedding) {
  return json{{"id", id}, {"embedding", std::vector<double>(embedding.begin(), embedding.end())}}.dump();
}

std::string encode_error(const std::optional<std::string>& id, const std::string& message) {
  json j{{"error", message}};
  j["id"] = id ? json(*id) : json(nullptr);
  return j.dump();
}

Response decode_response(std::string_view line) {
  if (line.size() > kMaxLineBytes) throw ProtocolError("response exceeds maximum size");
  const json j = parse_object(line, "response");
  Response r;
  if (j.contains("id")) {
    if (j["id"].is_string())
      r.id = j["id"].get<std::string>();
    else if (!j["id"].is_null())
      throw ProtocolError("response: 'id' must be a string");
  }
  const int kinds = j.contains("probs") + j.contains("embedding") + j.contains("error");
  if (kinds != 1) throw ProtocolError("response: expected exactly one of probs, embedding, error");
  if (j.contains("error")) {
    if (!j["error"].is_string()) throw ProtocolError("response: 'error' must be a string");
    r.error = j["error"].get<std::string>();
    return r;
  }
  if (!r.id) throw ProtocolError("response: missing 'id'");
  if (j.contains("probs"))
    r.probs = number_array(j["probs"], "probs");
  else
    r.embedding = number_array(j["embedding"], "embedding");
  return r;
}

}  // namespace advpose::protocol
