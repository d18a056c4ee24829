#include "advpose/analysis/neighbors.hpp"

#include <algorithm>
#include <cmath>

#include "advpose/common/error.hpp"
#include "advpose/simd/kernels.hpp"

namespace advpose {

std::vector<std::vector<Neighbor>> nearest_neighbors(const std::vector<std::vector<double>>& queries,
                                                     const std::vector<std::vector<double>>& corpus, int k) {
  if (k < 1) throw UsageError("k must be >= 1");
  const auto& kernels = simd::active();
  std::vector<std::vector<Neighbor>> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    std::vector<Neighbor> all;
    all.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (corpus[i].size() != q.size()) throw PreconditionError("embedding lengths differ");
      all.push_back({static_cast<int>(i), std::sqrt(kernels.squared_distance_f64(q.data(), corpus[i].data(), q.size()))});
    }
    const std::size_t keep = std::min<std::size_t>(all.size(), static_cast<std::size_t>(k));
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                      [](const Neighbor& a, const Neighbor& b) {
                        if (a.distance != b.distance) return a.distance < b.distance;
                        return a.index < b.index;
                      });
    all.resize(keep);
    out.push_back(std::move(all));
  }
  return out;
}

std::vector<std::vector<Neighbor>> nearest_neighbors(const std::vector<RenderOutput>& queries,
                                                     const std::vector<RenderOutput>& corpus, Classifier& backend,
                                                     int k) {
  if (!backend.info().supports_embedding) throw CapabilityError("backend does not support embeddings");
  std::vector<std::vector<double>> q, c;
  for (const auto& img : queries) q.push_back(backend.embed(img));
  for (const auto& img : corpus) c.push_back(backend.embed(img));
  return nearest_neighbors(q, c, k);
}

nlohmann::json to_json(const std::vector<std::vector<Neighbor>>& neighbors) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& list : neighbors) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& n : list) row.push_back({{"index", n.index}, {"distance", n.distance}});
    out.push_back(row);
  }
  return out;
}

}  // namespace advpose
