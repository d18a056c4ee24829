#include <cmath>

#include "advpose/simd/kernels.hpp"

namespace advpose::simd::scalar {
namespace {

// Same semantics as maxps/minps with the constant as second operand,
// including signed zeros and NaN.
inline float max0(float v) { return v > 0.0f ? v : 0.0f; }
inline float min1(float v) { return v < 1.0f ? v : 1.0f; }

void transform_points(const double* m, const double* t, const double* xs, const double* ys, const double* zs,
                      double* out_x, double* out_y, double* out_z, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double x = xs[i], y = ys[i], z = zs[i];
    out_x[i] = ((m[0] * x + m[1] * y) + m[2] * z) + t[0];
    out_y[i] = ((m[3] * x + m[4] * y) + m[5] * z) + t[1];
    out_z[i] = ((m[6] * x + m[7] * y) + m[8] * z) + t[2];
  }
}

void shade(const ShadeArgs& a) {
  for (std::size_t i = 0; i < a.count; ++i) {
    if (a.mask[i] == 0) {
      for (int c = 0; c < 3; ++c) a.out[c][i] = a.background[c][i];
      continue;
    }
    float ndl = (a.normal[0][i] * a.to_light[0] + a.normal[1][i] * a.to_light[1]) + a.normal[2][i] * a.to_light[2];
    ndl = max0(ndl);
    for (int c = 0; c < 3; ++c) {
      const float v = a.albedo[c][i] * (a.ambient[c] + a.diffuse[c] * ndl);
      a.out[c][i] = min1(max0(v));
    }
  }
}

void quantize_u8(const float* in, std::uint8_t* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const float v = min1(max0(in[i]));
    out[i] = static_cast<std::uint8_t>(std::floor(v * 255.0f + 0.5f));
  }
}

double sum_f32(const float* in, std::size_t n) {
  double s[4] = {0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    for (int l = 0; l < 4; ++l) s[l] += static_cast<double>(in[i + l]);
  double total = (s[0] + s[1]) + (s[2] + s[3]);
  for (; i < n; ++i) total += static_cast<double>(in[i]);
  return total;
}

double dot_f64(const double* a, const double* b, std::size_t n) {
  double s[4] = {0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    for (int l = 0; l < 4; ++l) s[l] += a[i + l] * b[i + l];
  double total = (s[0] + s[1]) + (s[2] + s[3]);
  for (; i < n; ++i) total += a[i] * b[i];
  return total;
}

double squared_distance_f64(const double* a, const double* b, std::size_t n) {
  double s[4] = {0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    for (int l = 0; l < 4; ++l) {
      const double d = a[i + l] - b[i + l];
      s[l] += d * d;
    }
  double total = (s[0] + s[1]) + (s[2] + s[3]);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    total += d * d;
  }
  return total;
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{Isa::kScalar, transform_points, shade, quantize_u8, sum_f32, dot_f64,
                             squared_distance_f64};
  return t;
}

}  // namespace advpose::simd::scalar
