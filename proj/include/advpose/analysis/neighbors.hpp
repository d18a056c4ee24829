#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "advpose/classifier/classifier.hpp"

namespace advpose {

struct Neighbor {
  int index = 0;  // into the corpus
  double distance = 0.0;
};

// For each query, the k corpus vectors nearest in Euclidean distance, ties
// to the lower corpus index. k larger than the corpus returns all of it.
std::vector<std::vector<Neighbor>> nearest_neighbors(const std::vector<std::vector<double>>& queries,
                                                     const std::vector<std::vector<double>>& corpus, int k = 5);

// Embeds every image with the backend first (CapabilityError if it cannot).
std::vector<std::vector<Neighbor>> nearest_neighbors(const std::vector<RenderOutput>& queries,
                                                     const std::vector<RenderOutput>& corpus, Classifier& backend,
                                                     int k = 5);

nlohmann::json to_json(const std::vector<std::vector<Neighbor>>& neighbors);

}  // namespace advpose
