#include "advpose/analysis/landscape.hpp"

#include <sstream>

#include "advpose/common/error.hpp"
#include "advpose/common/parallel.hpp"
#include "advpose/common/rng.hpp"
#include "advpose/common/stats.hpp"
#include "advpose/search/records.hpp"
#include "advpose/search/search.hpp"

namespace advpose {

void LandscapeSpec::validate() const {
  if (rows < 2 || cols < 2) throw UsageError("landscape resolution must be >= 2 per axis");
  if (row_param == col_param) throw UsageError("landscape sweeps need two different parameters");
}

std::vector<double> sweep_values(PoseParam p, int n, const FrustumSpec& frustum) {
  std::vector<double> v(static_cast<std::size_t>(n));
  if (is_angle(p)) {
    for (int i = 0; i < n; ++i) v[i] = kTwoPi * i / n;
    return v;
  }
  if (p == PoseParam::kZ) return linspace(frustum.z_min, frustum.z_max, n);
  return linspace(-1.0, 1.0, n);
}

PoseParams landscape_pose(const LandscapeSpec& spec, const FrustumSpec& frustum, double row_value, double col_value) {
  PoseParams pose = spec.fixed;
  set(pose, spec.row_param, row_value);
  set(pose, spec.col_param, col_value);
  const double s = frustum_bound(frustum, pose.z_delta);
  if (spec.row_param == PoseParam::kX || spec.row_param == PoseParam::kY) set(pose, spec.row_param, row_value * s);
  if (spec.col_param == PoseParam::kX || spec.col_param == PoseParam::kY) set(pose, spec.col_param, col_value * s);
  return pose;
}

LandscapeGrid landscape_grid(const SceneConfig& scene, Classifier& backend, const LandscapeSpec& spec,
                             std::optional<int> true_class, int threads) {
  spec.validate();
  if (spec.fixed.z_delta < scene.camera.z_min || spec.fixed.z_delta > scene.camera.z_max)
    throw DomainError("landscape fixed z_delta outside the depth range");
  LandscapeGrid g;
  g.spec = spec;
  g.row_values = sweep_values(spec.row_param, spec.rows, scene.camera);
  g.col_values = sweep_values(spec.col_param, spec.cols, scene.camera);
  g.cells.resize(static_cast<std::size_t>(spec.rows) * spec.cols);
  parallel_for(g.cells.size(), threads, [&](std::size_t i) {
    const int r = static_cast<int>(i / spec.cols), c = static_cast<int>(i % spec.cols);
    LandscapeCell cell;
    cell.pose = landscape_pose(spec, scene.camera, g.row_values[r], g.col_values[c]);
    const ClassifierResponse resp = evaluate_pose(scene, backend, cell.pose);
    cell.top_label = resp.top_label;
    cell.confidence = resp.confidence();
    if (true_class) cell.correct = resp.top_label == *true_class;
    g.cells[i] = cell;
  });
  return g;
}

std::string landscape_csv(const LandscapeGrid& g) {
  std::ostringstream os;
  os.precision(17);
  os << "row,col," << param_name(g.spec.row_param) << ',' << param_name(g.spec.col_param)
     << ",top_label,confidence,correct\n";
  for (int r = 0; r < g.spec.rows; ++r)
    for (int c = 0; c < g.spec.cols; ++c) {
      const auto& cell = g.at(r, c);
      os << r << ',' << c << ',' << get(cell.pose, g.spec.row_param) << ',' << get(cell.pose, g.spec.col_param) << ','
         << cell.top_label << ',' << cell.confidence << ',' << (cell.correct ? (*cell.correct ? "1" : "0") : "")
         << '\n';
    }
  return os.str();
}

Image landscape_heatmap(const LandscapeGrid& g, int cell_px) {
  if (cell_px < 1) throw PreconditionError("cell_px must be >= 1");
  Image img(g.spec.rows * cell_px, g.spec.cols * cell_px);
  for (int r = 0; r < g.spec.rows; ++r)
    for (int c = 0; c < g.spec.cols; ++c) {
      const auto& cell = g.at(r, c);
      float rgb[3];
      const float k = static_cast<float>(0.25 + 0.75 * cell.confidence);
      if (cell.correct) {
        rgb[0] = *cell.correct ? 0.1f * k : k;
        rgb[1] = *cell.correct ? k : 0.1f * k;
        rgb[2] = 0.1f * k;
      } else {
        const std::uint64_t h = mix64(static_cast<std::uint64_t>(cell.top_label) + 1);
        for (int ch = 0; ch < 3; ++ch) rgb[ch] = k * static_cast<float>(0.2 + 0.8 * ((h >> (16 * ch)) & 0xff) / 255.0);
      }
      for (int y = 0; y < cell_px; ++y)
        for (int x = 0; x < cell_px; ++x)
          for (int ch = 0; ch < 3; ++ch) img.at(ch, r * cell_px + y, c * cell_px + x) = rgb[ch];
    }
  return img;
}

nlohmann::json to_json(const LandscapeGrid& g) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& cell : g.cells) {
    nlohmann::json j{{"pose", pose_to_json(cell.pose)}, {"top_label", cell.top_label}, {"confidence", cell.confidence}};
    if (cell.correct) j["correct"] = *cell.correct;
    cells.push_back(j);
  }
  return {{"row_param", param_name(g.spec.row_param)},
          {"col_param", param_name(g.spec.col_param)},
          {"fixed", pose_to_json(g.spec.fixed)},
          {"rows", g.spec.rows},
          {"cols", g.spec.cols},
          {"row_values", g.row_values},
          {"col_values", g.col_values},
          {"cells", cells}};
}

}  // namespace advpose
