#include <atomic>
#include <cstdlib>
#include <string>

#include "advpose/common/error.hpp"
#include "advpose/simd/kernels.hpp"

namespace advpose::simd {
namespace {

Isa detect() {
  if (const char* env = std::getenv("ADVPOSE_SIMD")) {
    const std::string v(env);
    if (v == "scalar") return Isa::kScalar;
    if (v == "avx2" && supported(Isa::kAvx2)) return Isa::kAvx2;
  }
  return supported(Isa::kAvx2) ? Isa::kAvx2 : Isa::kScalar;
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> s{&table(detect())};
  return s;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool supported(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!supported(isa)) throw CapabilityError("SIMD variant not supported on this CPU: " + std::string(isa_name(isa)));
#if defined(__x86_64__) || defined(_M_X64)
  if (isa == Isa::kAvx2) return avx2::table();
#endif
  return scalar::table();
}

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

void set_active(Isa isa) { slot().store(&table(isa), std::memory_order_release); }

}  // namespace advpose::simd
