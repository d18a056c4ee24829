#pragma once

#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "advpose/classifier/classifier.hpp"
#include "advpose/image/image.hpp"
#include "advpose/render/scene.hpp"

namespace advpose {

struct LandscapeSpec {
  // Values of the four parameters that are not swept.
  PoseParams fixed{0.0, 0.0, -3.0, std::numbers::pi / 4.0, 0.0, 0.0};
  PoseParam row_param = PoseParam::kPitch;
  PoseParam col_param = PoseParam::kRoll;
  int rows = 32;
  int cols = 32;

  void validate() const;
};

struct LandscapeCell {
  PoseParams pose;
  int top_label = 0;
  double confidence = 0.0;
  std::optional<bool> correct;
};

// Row-major grid over the full ranges of the two swept parameters:
// angles at 2*pi*i/n over [0, 2*pi), z over the depth range with both ends,
// x and y over [-s, s] at the cell's depth with both ends.
struct LandscapeGrid {
  LandscapeSpec spec;
  std::vector<double> row_values;
  std::vector<double> col_values;
  std::vector<LandscapeCell> cells;

  const LandscapeCell& at(int r, int c) const { return cells.at(static_cast<std::size_t>(r) * spec.cols + c); }
};

// Sweep values for one parameter. For x and y the values are fractions of
// the frustum bound in [-1, 1]; landscape_pose scales them at the cell depth.
std::vector<double> sweep_values(PoseParam p, int n, const FrustumSpec& frustum);
PoseParams landscape_pose(const LandscapeSpec& spec, const FrustumSpec& frustum, double row_value, double col_value);

LandscapeGrid landscape_grid(const SceneConfig& scene, Classifier& backend, const LandscapeSpec& spec,
                             std::optional<int> true_class, int threads = 1);

std::string landscape_csv(const LandscapeGrid& grid);
// One block of cell_px x cell_px per cell. With a ground truth, correct
// cells are green and wrong ones red, brightness by confidence; without one
// each label gets a fixed hue.
Image landscape_heatmap(const LandscapeGrid& grid, int cell_px = 8);
nlohmann::json to_json(const LandscapeGrid& grid);

}  // namespace advpose
