#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "advpose/classifier/synthetic.hpp"
#include "advpose/geometry/pose.hpp"
#include "advpose/render/scene.hpp"

namespace testing_support {

inline std::filesystem::path source_dir() { return ADVPOSE_TEST_DIR; }
inline std::filesystem::path fixture(const std::string& name) { return source_dir() / "fixtures" / name; }

// Fresh empty directory under the build tree's temp area.
std::filesystem::path scratch_dir(const std::string& name);

// Hand-rolled generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : e_(seed) {}
  double uniform(double lo, double hi) { return lo + (hi - lo) * (static_cast<double>(e_() >> 11) * 0x1.0p-53); }
  int integer(int lo, int hi) { return lo + static_cast<int>(e_() % static_cast<std::uint64_t>(hi - lo + 1)); }
  bool coin() { return (e_() & 1u) != 0; }
  advpose::Vec3 unit_vector();
  advpose::PoseParams pose(const advpose::FrustumSpec& spec);

 private:
  std::mt19937_64 e_;
};

// Sphere scene at a small resolution for fast tests.
advpose::SceneConfig small_scene(int size = 32);

// A 4-class backend where class `target` wins inside an ellipsoid in angle
// space around `center` and class 1 wins elsewhere.
advpose::SyntheticConfig planted_config(int target, const advpose::PoseParams& center, double half_width,
                                        double amplitude = 8.0);

}  // namespace testing_support
