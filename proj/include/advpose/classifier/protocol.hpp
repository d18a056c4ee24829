#pragma once

// Protocol v1: newline-delimited JSON.
//
//   server -> client, once:  {"protocol": 1, "num_classes": K, "labels": [...],
//                             "supports_embedding": bool, ...metadata}
//   client -> server:        {"id": str, "op": "classify"|"embed", "width": W,
//                             "height": H, "pixels_b64": base64(H*W*3 u8 RGB)}
//   server -> client:        {"id": str, "probs": [K floats]}
//                          | {"id": str, "embedding": [D floats]}
//                          | {"id": str|null, "error": str}

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "advpose/classifier/classifier.hpp"

namespace advpose::protocol {

inline constexpr int kVersion = 1;
// Upper bound on one message line; larger payloads are rejected.
inline constexpr std::size_t kMaxLineBytes = 64u << 20;

std::string base64_encode(std::span<const std::uint8_t> bytes);
// Throws ProtocolError on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string encode_handshake(const ClassifierInfo& info);
// Throws ProtocolError if the line is not a valid v1 handshake.
ClassifierInfo decode_handshake(std::string_view line);

enum class Op { kClassify, kEmbed };

struct Request {
  std::string id;
  Op op = Op::kClassify;
  Rgb8Image image;
};

std::string encode_request(const Request& request);

// Server-side decoding. On failure throws ProtocolError; `recovered_id` is
// filled whenever the id could still be read, so the error reply can echo it.
Request decode_request(std::string_view line, std::optional<std::string>* recovered_id = nullptr);

struct Response {
  std::optional<std::string> id;
  std::vector<double> probs;
  std::vector<double> embedding;
  std::optional<std::string> error;
};

std::string encode_probs(const std::string& id, std::span<const double> probs);
std::string encode_embedding(const std::string& id, std::span<const double> embedding);
std::string encode_error(const std::optional<std::string>& id, const std::string& message);

// Client-side decoding; checks shape only. Throws ProtocolError.
Response decode_response(std::string_view line);

}  // namespace advpose::protocol
