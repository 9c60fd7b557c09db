#include "semibandit/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace semibandit {

ActionSubset::ActionSubset(std::vector<int> members, int capacity)
    : members_(std::move(members)), capacity_(capacity) {
  if (capacity_ <= 0) throw std::invalid_argument("ActionSubset: capacity must be positive");
  if (members_.empty()) throw std::invalid_argument("ActionSubset: must have at least one member");
  if (static_cast<int>(members_.size()) > capacity_)
    throw std::invalid_argument("ActionSubset: more members than capacity");
  std::sort(members_.begin(), members_.end());
  if (std::adjacent_find(members_.begin(), members_.end()) != members_.end())
    throw std::invalid_argument("ActionSubset: duplicate member");
  if (members_.front() < 0 || members_.back() >= capacity_)
    throw std::invalid_argument("ActionSubset: member out of range");
}

bool ActionSubset::contains(int y) const {
  return std::binary_search(members_.begin(), members_.end(), y);
}

namespace {
void check_reward_range(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("RewardVector: empty");
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument("RewardVector: entry outside [0,1]");
  }
}
}  // namespace

RewardVector::RewardVector(std::vector<double> values, double sparsity)
    : values_(std::move(values)), sparsity_(sparsity) {
  check_reward_range(values_);
  if (!(sparsity_ > 0.0)) throw std::invalid_argument("RewardVector: sparsity must be positive");
  if (l1_norm() > sparsity_ + 1e-9)
    throw std::invalid_argument("RewardVector: L1 norm exceeds sparsity budget");
}

RewardVector RewardVector::unchecked_sparsity(std::vector<double> values,
                                              double sparsity) {
  check_reward_range(values);
  if (!(sparsity > 0.0)) throw std::invalid_argument("RewardVector: sparsity must be positive");
  RewardVector r;
  r.values_ = std::move(values);
  r.sparsity_ = sparsity;
  return r;
}

double RewardVector::l1_norm() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0);
}

Policy::Policy(std::vector<ActionSubset> table) : table_(std::move(table)) {
  if (table_.empty()) throw std::invalid_argument("Policy: empty context table");
  for (const ActionSubset& a : table_) {
    if (a.size() != table_.front().size() || a.capacity() != table_.front().capacity())
      throw std::invalid_argument("Policy: inconsistent action shapes across contexts");
  }
}

const ActionSubset& Policy::action(Context x) const {
  if (x.id < 0 || x.id >= num_contexts())
    throw std::invalid_argument("Policy: context id out of range");
  return table_[static_cast<std::size_t>(x.id)];
}

PolicyClass::PolicyClass(std::vector<Policy> policies, int capacity,
                         int subset_size)
    : policies_(std::move(policies)), capacity_(capacity), subset_size_(subset_size) {
  if (policies_.empty()) throw std::invalid_argument("PolicyClass: empty");
  if (subset_size_ <= 0 || capacity_ < subset_size_)
    throw std::invalid_argument("PolicyClass: need 0 < m <= K");
  num_contexts_ = policies_.front().num_contexts();
  for (const Policy& pi : policies_) {
    if (pi.num_contexts() != num_contexts_)
      throw std::invalid_argument("PolicyClass: policies disagree on context universe");
    for (const ActionSubset& a : pi.table()) {
      if (a.capacity() != capacity_ || a.size() != subset_size_)
        throw std::invalid_argument("PolicyClass: policy action does not match (K, m)");
    }
  }
}

SimplexWeights::SimplexWeights(std::vector<double> weights)
    : weights_(std::move(weights)) {
  if (weights_.empty()) throw std::invalid_argument("SimplexWeights: empty");
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw std::invalid_argument("SimplexWeights: negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > kSumTolerance)
    throw std::invalid_argument("SimplexWeights: weights sum to " + std::to_string(sum));
}

SimplexWeights SimplexWeights::delta(std::size_t n, std::size_t index) {
  if (index >= n) throw std::invalid_argument("SimplexWeights::delta: index out of range");
  std::vector<double> w(n, 0.0);
  w[index] = 1.0;
  return SimplexWeights(std::move(w));
}

SimplexWeights SimplexWeights::uniform(std::size_t n) {
  if (n == 0) throw std::invalid_argument("SimplexWeights::uniform: empty");
  return SimplexWeights(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

double marginal_probability(const SimplexWeights& p, const PolicyClass& cls,
                            Context x, int y) {
  if (p.size() != cls.size())
    throw std::invalid_argument("marginal_probability: simplex size mismatch");
  if (y < 0 || y >= cls.capacity())
    throw std::invalid_argument("marginal_probability: action index out of range");
  if (x.id < 0 || x.id >= cls.num_contexts())
    throw std::invalid_argument("marginal_probability: context out of range");
  double q = 0.0;
  for (std::size_t j = 0; j < cls.size(); ++j) {
    if (p[j] > 0.0 && cls[j].action(x).contains(y)) q += p[j];
  }
  return q;
}

double smoothed_marginal(const SimplexWeights& p, const PolicyClass& cls,
                         Context x, int y, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("smoothed_marginal: gamma outside [0,1]");
  const double q = marginal_probability(p, cls, x, y);
  return (1.0 - gamma) * q +
         gamma * static_cast<double>(cls.subset_size()) / cls.capacity();
}

ActionSubset sample_uniform_action(int capacity, int subset_size, Rng& rng) {
  if (subset_size <= 0 || subset_size > capacity)
    throw std::invalid_argument("sample_uniform_action: need 0 < m <= K");
  // Partial Fisher-Yates: the first m entries are an exactly uniform subset.
  std::vector<int> pool(static_cast<std::size_t>(capacity));
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < subset_size; ++i) {
    const std::size_t j =
        static_cast<std::size_t>(i) +
        rng.below(static_cast<std::uint64_t>(capacity - i));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(subset_size));
  return ActionSubset(std::move(pool), capacity);
}

std::pair<ActionSubset, SampleTag> sample_mixed_action(const SimplexWeights& p,
                                                       const PolicyClass& cls,
                                                       Context x, double gamma,
                                                       Rng& rng) {
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw std::invalid_argument("sample_mixed_action: gamma outside [0,1]");
  if (rng.next_double() < gamma) {
    return {sample_uniform_action(cls.capacity(), cls.subset_size(), rng),
            SampleTag::kUniform};
  }
  const std::size_t j = sample_policy_index(p, rng);
  return {cls[j].action(x), SampleTag::kPolicy};
}

double policy_value(const Policy& pi, Context x, const RewardVector& r) {
  double v = 0.0;
  for (int y : pi.action(x).members()) v += r[y];
  return v;
}

std::size_t sample_policy_index(const SimplexWeights& p, Rng& rng) {
  const double u = rng.next_double();
  double cum = 0.0;
  for (std::size_t j = 0; j + 1 < p.size(); ++j) {
    cum += p[j];
    if (u < cum) return j;
  }
  return p.size() - 1;
}

}  // namespace semibandit
