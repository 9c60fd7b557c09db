#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "semibandit/core.hpp"

namespace semibandit {

// A context paired with sparse nonnegative estimated rewards, sorted by
// action index.
struct WeightedExample {
  Context x;
  std::vector<std::pair<int, double>> rhat;

  double rhat_at(int y) const;
};

// Lowest policy index maximizing sum_i sum_{y in pi(x_i)} rhat_i(y).
// Empty data selects index 0.
std::size_t erm(const PolicyClass& cls, const std::vector<WeightedExample>& data);

// Lowest index minimizing the linear function g over the simplex vertices.
std::size_t loo(const PolicyClass& cls, const std::vector<double>& g);

}  // namespace semibandit
