#pragma once

#include <array>
#include <map>
#include <vector>

#include <nlohmann/json.hpp>

namespace advpose {

// The k most frequent labels, ties to the lower class index, sorted by
// class index.
std::vector<int> top_k_labels(const std::map<int, long long>& histogram, int k = 50);

// 100 * |intersection| / |union| of label sets; 0 for an empty union.
double intersection_over_union_pct(const std::vector<std::vector<int>>& sets);

struct OverlapScore {
  std::array<std::vector<int>, 3> sets;  // bright, medium, dark
  double o_s = 0.0;
};

// Top-50 sets per lighting setting and their IoU. Each histogram must be
// nonempty (PreconditionError otherwise).
OverlapScore lighting_overlap(const std::array<std::map<int, long long>, 3>& histograms, int k = 50);

nlohmann::json to_json(const OverlapScore& score);

}  // namespace advpose
