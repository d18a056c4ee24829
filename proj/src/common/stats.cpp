#include "advpose/common/stats.hpp"

#include <algorithm>

namespace advpose {

std::optional<double> median(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> out;
  if (count <= 0) return out;
  if (count == 1) return {lo};
  out.reserve(count);
  const double step = (hi - lo) / (count - 1);
  for (int i = 0; i < count; ++i) out.push_back(lo + step * i);
  out.back() = hi;
  return out;
}

}  // namespace advpose
