#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "advpose/render/renderer.hpp"

namespace advpose {

// What a backend advertises: class table, embedding capability, and the
// input size it expects (0 means any size is accepted).
struct ClassifierInfo {
  int num_classes = 0;
  std::vector<std::string> labels;
  bool supports_embedding = false;
  int input_height = 0;
  int input_width = 0;
  nlohmann::json metadata = nlohmann::json::object();
};

struct ClassifierResponse {
  std::vector<double> probs;
  int top_label = 0;
  std::vector<double> embedding;  // empty unless requested
  std::chrono::nanoseconds latency{0};

  double confidence() const { return probs.at(top_label); }
  // Indices of the k largest probabilities, ties by lower index.
  std::vector<int> top_k(int k) const;
};

// Lowest index among the maxima.
int argmax(std::span<const double> values);

// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

// Validates a probability vector (entries finite and in [0, 1], sum within
// 1e-5 of one) and fills top_label. Throws ProtocolError on violation.
ClassifierResponse make_response(std::vector<double> probs);

inline constexpr double kCrossEntropyEpsilon = 1e-12;

// -log(probs[target] + 1e-12). Throws DomainError if target is out of range.
double cross_entropy(const ClassifierResponse& response, int target);

// Black-box image classifier f. Implementations are safe to call from
// several threads at once.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual const ClassifierInfo& info() const = 0;
  virtual ClassifierResponse classify(const RenderOutput& image) = 0;
  // Throws CapabilityError unless info().supports_embedding.
  virtual std::vector<double> embed(const RenderOutput& image);
};

// Forwards to another classifier and counts calls.
class CountingClassifier final : public Classifier {
 public:
  explicit CountingClassifier(std::shared_ptr<Classifier> inner) : inner_(std::move(inner)) {}

  const ClassifierInfo& info() const override { return inner_->info(); }
  ClassifierResponse classify(const RenderOutput& image) override {
    ++classify_calls_;
    return inner_->classify(image);
  }
  std::vector<double> embed(const RenderOutput& image) override {
    ++embed_calls_;
    return inner_->embed(image);
  }

  long long classify_calls() const { return classify_calls_.load(); }
  long long embed_calls() const { return embed_calls_.load(); }

 private:
  std::shared_ptr<Classifier> inner_;
  std::atomic<long long> classify_calls_{0};
  std::atomic<long long> embed_calls_{0};
};

// Resizes (bilinear) to the backend's advertised input size when it is set
// and differs from the image.
Image fit_to_input(const Image& image, const ClassifierInfo& info);

}  // namespace advpose
