#include "advpose/classifier/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "advpose/common/error.hpp"

namespace advpose {

std::vector<int> ClassifierResponse::top_k(int k) const {
  std::vector<int> idx(probs.size());
  std::iota(idx.begin(), idx.end(), 0);
  k = std::clamp(k, 0, static_cast<int>(idx.size()));
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
    if (probs[a] != probs[b]) return probs[a] > probs[b];
    return a < b;
  });
  idx.resize(k);
  return idx;
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double m = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) total += out[i] = std::exp(logits[i] - m);
  for (double& p : out) p /= total;
  return out;
}

ClassifierResponse make_response(std::vector<double> probs) {
  if (probs.size() < 2) throw ProtocolError("probability vector needs at least 2 classes");
  double total = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) throw ProtocolError("probability outside [0, 1]");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-5) throw ProtocolError("probabilities do not sum to 1");
  ClassifierResponse r;
  r.top_label = argmax(probs);
  r.probs = std::move(probs);
  return r;
}

double cross_entropy(const ClassifierResponse& response, int target) {
  if (target < 0 || target >= static_cast<int>(response.probs.size()))
    throw DomainError("target class " + std::to_string(target) + " out of range");
  return -std::log(response.probs[target] + kCrossEntropyEpsilon);
}

std::vector<double> Classifier::embed(const RenderOutput&) {
  throw CapabilityError("backend does not support embeddings");
}

Image fit_to_input(const Image& image, const ClassifierInfo& info) {
  if (info.input_height <= 0 || info.input_width <= 0) return image;
  if (image.height() == info.input_height && image.width() == info.input_width) return image;
  return resize_bilinear(image, info.input_height, info.input_width);
}

}  // namespace advpose
