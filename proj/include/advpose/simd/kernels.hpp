#pragma once

// Data-parallel inner loops of the renderer and the classifiers.
//
// Every kernel has a scalar reference implementation and, where the CPU
// allows it, a vectorized variant selected at runtime. The variants are
// required to agree bit-for-bit with the reference: no fused multiply-add,
// identical operation order, and reductions that accumulate into four
// lane-striped partial sums combined as (s0 + s1) + (s2 + s3) before the
// tail. Renders and synthetic classifications therefore do not depend on
// which variant ran.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace advpose::simd {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

// Inputs of the deferred shading pass. All arrays hold `count` elements.
struct ShadeArgs {
  const float* albedo[3];
  const float* normal[3];   // unit normals at covered pixels
  const std::uint8_t* mask;  // nonzero where a fragment won the depth test
  const float* background[3];
  float* out[3];
  float ambient[3];   // ambient intensity times ambient colour
  float diffuse[3];   // directional intensity times light colour
  float to_light[3];  // negated light direction
  std::size_t count;
};

struct KernelTable {
  Isa isa;

  // out = m * p + t for every point, with m row-major 3x3.
  void (*transform_points)(const double* m, const double* t, const double* xs, const double* ys,
                           const double* zs, double* out_x, double* out_y, double* out_z, std::size_t n);

  // out = clamp(albedo * (ambient + diffuse * max(0, n . to_light)), 0, 1)
  // where mask is set, background elsewhere.
  void (*shade)(const ShadeArgs& args);

  // out = floor(clamp(v, 0, 1) * 255 + 0.5)
  void (*quantize_u8)(const float* in, std::uint8_t* out, std::size_t n);

  double (*sum_f32)(const float* in, std::size_t n);
  double (*dot_f64)(const double* a, const double* b, std::size_t n);
  double (*squared_distance_f64)(const double* a, const double* b, std::size_t n);
};

// Table used by the library. Chosen once from CPU features; the environment
// variable ADVPOSE_SIMD=scalar|avx2 overrides the choice.
const KernelTable& active();

// A specific variant; throws CapabilityError if the CPU lacks it.
const KernelTable& table(Isa isa);

bool supported(Isa isa);

// Process-wide override, used by equivalence tests and benchmarks.
void set_active(Isa isa);

namespace scalar {
const KernelTable& table();
}

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
const KernelTable& table();
}
#endif

}  // namespace advpose::simd
