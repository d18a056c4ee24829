#pragma once

#include <optional>
#include <vector>

namespace advpose {

// Median with the even-count convention of averaging the two middle values.
// Empty input has no median.
std::optional<double> median(std::vector<double> values);

// Evenly spaced values with both endpoints included.
std::vector<double> linspace(double lo, double hi, int count);

}  // namespace advpose
