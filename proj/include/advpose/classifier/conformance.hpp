#pragma once

#include <optional>
#include <string>
#include <vector>

#include "advpose/classifier/remote.hpp"

namespace advpose {

struct ConformanceCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ConformanceExpectations {
  // When set, classify replies must equal these exactly.
  std::optional<std::vector<double>> probs;
  // When set, embed replies must equal this exactly.
  std::optional<std::vector<double>> embedding;
};

// Drives a protocol v1 server through handshake, classify, embed and error
// paths over fresh connections from `factory`. Never throws for server
// misbehaviour; each failure is reported as a failed check.
std::vector<ConformanceCheck> run_conformance(const TransportFactory& factory,
                                              const ConformanceExpectations& expect = {});

bool all_passed(const std::vector<ConformanceCheck>& checks);

}  // namespace advpose
