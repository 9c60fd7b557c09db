#include "semibandit/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace semibandit {

double WeightedExample::rhat_at(int y) const {
  const auto it = std::lower_bound(
      rhat.begin(), rhat.end(), y,
      [](const std::pair<int, double>& kv, int key) { return kv.first < key; });
  return (it != rhat.end() && it->first == y) ? it->second : 0.0;
}

std::size_t erm(const PolicyClass& cls, const std::vector<WeightedExample>& data) {
  for (const WeightedExample& ex : data) {
    if (ex.x.id < 0 || ex.x.id >= cls.num_contexts())
      throw std::invalid_argument("erm: context out of range");
    for (const auto& [y, v] : ex.rhat) {
      if (y < 0 || y >= cls.capacity())
        throw std::invalid_argument("erm: action index out of range");
      if (!(v >= 0.0)) throw std::invalid_argument("erm: negative estimated reward");
    }
  }
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t j = 0; j < cls.size(); ++j) {
    double score = 0.0;
    for (const WeightedExample& ex : data)
      for (int y : cls[j].action(ex.x).members()) score += ex.rhat_at(y);
    if (score > best_score) {
      best_score = score;
      best = j;
    }
  }
  return best;
}

std::size_t loo(const PolicyClass& cls, const std::vector<double>& g) {
  if (g.size() != cls.size())
    throw std::invalid_argument("loo: gradient size mismatch");
  std::size_t best = 0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (std::isnan(g[j])) throw std::invalid_argument("loo: NaN gradient coordinate");
    if (g[j] < g[best]) best = j;
  }
  return best;
}

}  // namespace semibandit
