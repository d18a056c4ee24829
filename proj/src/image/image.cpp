#include "advpose/image/image.hpp"

#include <algorithm>
#include <cmath>

#include "advpose/common/error.hpp"
#include "advpose/simd/kernels.hpp"

namespace advpose {

Image::Image(int height, int width) : height_(height), width_(width) {
  if (height < 0 || width < 0) throw PreconditionError("negative image size");
  data_.assign(3 * pixel_count(), 0.0f);
}

Image Image::solid(int height, int width, float r, float g, float b) {
  Image img(height, width);
  const float rgb[3] = {r, g, b};
  for (int c = 0; c < 3; ++c) std::fill(img.plane(c).begin(), img.plane(c).end(), rgb[c]);
  return img;
}

Rgb8Image quantize(const Image& image) {
  Rgb8Image out{image.height(), image.width(), {}};
  const std::size_t n = image.pixel_count();
  std::vector<std::uint8_t> planar(3 * n);
  const auto& k = simd::active();
  for (int c = 0; c < 3; ++c) k.quantize_u8(image.plane(c).data(), planar.data() + c * n, n);
  out.rgb.resize(3 * n);
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) out.rgb[3 * i + c] = planar[c * n + i];
  return out;
}

Image dequantize(const Rgb8Image& image) {
  Image out(image.height, image.width);
  const std::size_t n = out.pixel_count();
  for (int c = 0; c < 3; ++c) {
    auto p = out.plane(c);
    for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<float>(image.rgb[3 * i + c]) / 255.0f;
  }
  return out;
}

namespace {

// Samples src over the window [x0, x0+w) x [y0, y0+h) at pixel centres.
Image resample_window(const Image& src, double x0, double y0, double w, double h, int height, int width) {
  if (height <= 0 || width <= 0) throw PreconditionError("resize target must be positive");
  if (src.empty()) throw PreconditionError("resize source is empty");
  Image out(height, width);
  const double sx = w / width;
  const double sy = h / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp(y0 + (y + 0.5) * sy - 0.5, 0.0, src.height() - 1.0);
    const int iy = static_cast<int>(fy);
    const int iy1 = std::min(iy + 1, src.height() - 1);
    const double ty = fy - iy;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp(x0 + (x + 0.5) * sx - 0.5, 0.0, src.width() - 1.0);
      const int ix = static_cast<int>(fx);
      const int ix1 = std::min(ix + 1, src.width() - 1);
      const double tx = fx - ix;
      for (int c = 0; c < 3; ++c) {
        const double top = src.at(c, iy, ix) * (1 - tx) + src.at(c, iy, ix1) * tx;
        const double bot = src.at(c, iy1, ix) * (1 - tx) + src.at(c, iy1, ix1) * tx;
        out.at(c, y, x) = static_cast<float>(top * (1 - ty) + bot * ty);
      }
    }
  }
  return out;
}

}  // namespace

Image resize_bilinear(const Image& src, int height, int width) {
  return resample_window(src, 0, 0, src.width(), src.height(), height, width);
}

Image center_crop_resize(const Image& src, int height, int width) {
  const double target = static_cast<double>(width) / height;
  const double source = static_cast<double>(src.width()) / src.height();
  double w = src.width(), h = src.height();
  if (source > target)
    w = h * target;
  else
    h = w / target;
  return resample_window(src, (src.width() - w) / 2, (src.height() - h) / 2, w, h, height, width);
}

}  // namespace advpose
