#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace advpose {

// Deterministic random stream. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; the real-valued draws are derived here
// rather than through <random> distributions, whose algorithms vary between
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Named substream of a root seed. Streams for distinct (name, index) pairs
  // are independent, so work can be split across threads without changing
  // any draw.
  static Rng substream(std::uint64_t root_seed, std::string_view name, std::uint64_t index = 0);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1).
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on [lo, hi].
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform on the open interval (0, 1).
  double uniform_open01() {
    double u;
    do {
      u = uniform01();
    } while (u == 0.0);
    return u;
  }

  // Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace advpose
