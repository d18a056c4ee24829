#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "advpose/image/image.hpp"

namespace advpose {

// Encoding is fixed (no filtering, zlib level 6, no timestamp chunks) so equal
// images give equal bytes.
std::vector<std::uint8_t> encode_png(const Rgb8Image& image);
std::vector<std::uint8_t> encode_png(const Image& image);
void write_png(const std::filesystem::path& path, const Image& image);

Rgb8Image decode_png(std::span<const std::uint8_t> bytes);
Rgb8Image decode_jpeg(std::span<const std::uint8_t> bytes);

// PNG or JPEG, detected from the file signature.
Image read_image(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace advpose
