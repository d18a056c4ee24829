#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace advpose {

// Planar RGB float image, channel-major (all R, then all G, then all B),
// values nominally in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int height, int width);

  static Image solid(int height, int width, float r, float g, float b);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(height_) * width_; }
  bool empty() const noexcept { return data_.empty(); }

  std::span<float> plane(int c) { return {data_.data() + c * pixel_count(), pixel_count()}; }
  std::span<const float> plane(int c) const { return {data_.data() + c * pixel_count(), pixel_count()}; }

  float at(int c, int y, int x) const { return data_[c * pixel_count() + static_cast<std::size_t>(y) * width_ + x]; }
  float& at(int c, int y, int x) { return data_[c * pixel_count() + static_cast<std::size_t>(y) * width_ + x]; }

  const std::vector<float>& data() const noexcept { return data_; }

  bool operator==(const Image&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

// 8-bit interleaved RGB, row-major. This is the wire and file representation.
struct Rgb8Image {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> rgb;

  bool operator==(const Rgb8Image&) const = default;
};

// round(v * 255) with halves rounded up, after clamping to [0, 1].
Rgb8Image quantize(const Image& image);
Image dequantize(const Rgb8Image& image);

Image resize_bilinear(const Image& src, int height, int width);

// Crop the largest centred window with the target aspect ratio, then resize.
Image center_crop_resize(const Image& src, int height, int width);

}  // namespace advpose
