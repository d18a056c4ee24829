#include "advpose/analysis/overlap.hpp"

#include <algorithm>
#include <set>

#include "advpose/common/error.hpp"

namespace advpose {

std::vector<int> top_k_labels(const std::map<int, long long>& histogram, int k) {
  std::vector<std::pair<int, long long>> items(histogram.begin(), histogram.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<int> out;
  for (const auto& [label, count] : items) {
    if (static_cast<int>(out.size()) >= k) break;
    if (count > 0) out.push_back(label);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double intersection_over_union_pct(const std::vector<std::vector<int>>& sets) {
  if (sets.empty()) return 0.0;
  std::set<int> uni;
  for (const auto& s : sets) uni.insert(s.begin(), s.end());
  if (uni.empty()) return 0.0;
  std::size_t inter = 0;
  for (int label : uni) {
    bool everywhere = true;
    for (const auto& s : sets)
      if (std::find(s.begin(), s.end(), label) == s.end()) {
        everywhere = false;
        break;
      }
    inter += everywhere;
  }
  return 100.0 * static_cast<double>(inter) / static_cast<double>(uni.size());
}

OverlapScore lighting_overlap(const std::array<std::map<int, long long>, 3>& histograms, int k) {
  OverlapScore score;
  for (std::size_t i = 0; i < 3; ++i) {
    score.sets[i] = top_k_labels(histograms[i], k);
    if (score.sets[i].empty()) throw PreconditionError("lighting_overlap needs three nonempty histograms");
  }
  score.o_s = intersection_over_union_pct({score.sets[0], score.sets[1], score.sets[2]});
  return score;
}

nlohmann::json to_json(const OverlapScore& s) {
  return {{"bright", s.sets[0]}, {"medium", s.sets[1]}, {"dark", s.sets[2]}, {"o_s", s.o_s}};
}

}  // namespace advpose
