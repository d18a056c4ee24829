// Compiled with -mavx2 and without -mfma. Only reached through the dispatch
// table after a CPUID check.

#include <immintrin.h>

#include "advpose/simd/kernels.hpp"

namespace advpose::simd::avx2 {
namespace {

void transform_points(const double* m, const double* t, const double* xs, const double* ys, const double* zs,
                      double* out_x, double* out_y, double* out_z, std::size_t n) {
  const __m256d m0 = _mm256_set1_pd(m[0]), m1 = _mm256_set1_pd(m[1]), m2 = _mm256_set1_pd(m[2]);
  const __m256d m3 = _mm256_set1_pd(m[3]), m4 = _mm256_set1_pd(m[4]), m5 = _mm256_set1_pd(m[5]);
  const __m256d m6 = _mm256_set1_pd(m[6]), m7 = _mm256_set1_pd(m[7]), m8 = _mm256_set1_pd(m[8]);
  const __m256d t0 = _mm256_set1_pd(t[0]), t1 = _mm256_set1_pd(t[1]), t2 = _mm256_set1_pd(t[2]);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_loadu_pd(xs + i);
    const __m256d y = _mm256_loadu_pd(ys + i);
    const __m256d z = _mm256_loadu_pd(zs + i);
    __m256d r = _mm256_add_pd(_mm256_mul_pd(m0, x), _mm256_mul_pd(m1, y));
    r = _mm256_add_pd(_mm256_add_pd(r, _mm256_mul_pd(m2, z)), t0);
    _mm256_storeu_pd(out_x + i, r);
    r = _mm256_add_pd(_mm256_mul_pd(m3, x), _mm256_mul_pd(m4, y));
    r = _mm256_add_pd(_mm256_add_pd(r, _mm256_mul_pd(m5, z)), t1);
    _mm256_storeu_pd(out_y + i, r);
    r = _mm256_add_pd(_mm256_mul_pd(m6, x), _mm256_mul_pd(m7, y));
    r = _mm256_add_pd(_mm256_add_pd(r, _mm256_mul_pd(m8, z)), t2);
    _mm256_storeu_pd(out_z + i, r);
  }
  for (; i < n; ++i) {
    const double x = xs[i], y = ys[i], z = zs[i];
    out_x[i] = ((m[0] * x + m[1] * y) + m[2] * z) + t[0];
    out_y[i] = ((m[3] * x + m[4] * y) + m[5] * z) + t[1];
    out_z[i] = ((m[6] * x + m[7] * y) + m[8] * z) + t[2];
  }
}

inline float max0(float v) { return v > 0.0f ? v : 0.0f; }
inline float min1(float v) { return v < 1.0f ? v : 1.0f; }

void shade(const ShadeArgs& a) {
  const __m256 zero = _mm256_setzero_ps();
  const __m256 one = _mm256_set1_ps(1.0f);
  const __m256 lx = _mm256_set1_ps(a.to_light[0]);
  const __m256 ly = _mm256_set1_ps(a.to_light[1]);
  const __m256 lz = _mm256_set1_ps(a.to_light[2]);
  std::size_t i = 0;
  for (; i + 8 <= a.count; i += 8) {
    // Widen eight mask bytes to a lane mask.
    const __m128i mb = _mm_loadl_epi64(reinterpret_cast<const __m128i*>(a.mask + i));
    const __m256i mi = _mm256_cvtepu8_epi32(mb);
    const __m256 covered = _mm256_castsi256_ps(_mm256_cmpgt_epi32(mi, _mm256_setzero_si256()));

    __m256 ndl = _mm256_add_ps(_mm256_mul_ps(_mm256_loadu_ps(a.normal[0] + i), lx),
                               _mm256_mul_ps(_mm256_loadu_ps(a.normal[1] + i), ly));
    ndl = _mm256_add_ps(ndl, _mm256_mul_ps(_mm256_loadu_ps(a.normal[2] + i), lz));
    ndl = _mm256_max_ps(ndl, zero);
    for (int c = 0; c < 3; ++c) {
      const __m256 light = _mm256_add_ps(_mm256_set1_ps(a.ambient[c]), _mm256_mul_ps(_mm256_set1_ps(a.diffuse[c]), ndl));
      __m256 v = _mm256_mul_ps(_mm256_loadu_ps(a.albedo[c] + i), light);
      v = _mm256_min_ps(_mm256_max_ps(v, zero), one);
      const __m256 bg = _mm256_loadu_ps(a.background[c] + i);
      _mm256_storeu_ps(a.out[c] + i, _mm256_blendv_ps(bg, v, covered));
    }
  }
  for (; i < a.count; ++i) {
    if (a.mask[i] == 0) {
      for (int c = 0; c < 3; ++c) a.out[c][i] = a.background[c][i];
      continue;
    }
    float ndl = (a.normal[0][i] * a.to_light[0] + a.normal[1][i] * a.to_light[1]) + a.normal[2][i] * a.to_light[2];
    ndl = max0(ndl);
    for (int c = 0; c < 3; ++c) a.out[c][i] = min1(max0(a.albedo[c][i] * (a.ambient[c] + a.diffuse[c] * ndl)));
  }
}

void quantize_u8(const float* in, std::uint8_t* out, std::size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  const __m256 one = _mm256_set1_ps(1.0f);
  const __m256 scale = _mm256_set1_ps(255.0f);
  const __m256 half = _mm256_set1_ps(0.5f);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 v = _mm256_min_ps(_mm256_max_ps(_mm256_loadu_ps(in + i), zero), one);
    v = _mm256_floor_ps(_mm256_add_ps(_mm256_mul_ps(v, scale), half));
    const __m256i q = _mm256_cvttps_epi32(v);
    const __m128i w = _mm_packus_epi32(_mm256_castsi256_si128(q), _mm256_extracti128_si256(q, 1));
    _mm_storel_epi64(reinterpret_cast<__m128i*>(out + i), _mm_packus_epi16(w, w));
  }
  for (; i < n; ++i) {
    const float v = min1(max0(in[i]));
    out[i] = static_cast<std::uint8_t>(__builtin_floorf(v * 255.0f + 0.5f));
  }
}

inline double horizontal(__m256d acc) {
  alignas(32) double s[4];
  _mm256_store_pd(s, acc);
  return (s[0] + s[1]) + (s[2] + s[3]);
}

double sum_f32(const float* in, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_cvtps_pd(_mm_loadu_ps(in + i)));
  double total = horizontal(acc);
  for (; i < n; ++i) total += static_cast<double>(in[i]);
  return total;
}

double dot_f64(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  double total = horizontal(acc);
  for (; i < n; ++i) total += a[i] * b[i];
  return total;
}

double squared_distance_f64(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  double total = horizontal(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    total += d * d;
  }
  return total;
}

}  // namespace

const KernelTable& table() {
  static const KernelTable t{Isa::kAvx2, transform_points, shade, quantize_u8, sum_f32, dot_f64,
                             squared_distance_f64};
  return t;
}

}  // namespace advpose::simd::avx2
