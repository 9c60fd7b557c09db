#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "semibandit/rng.hpp"

namespace semibandit {

// Index into the finite context universe of an instance.
struct Context {
  int id = 0;
};

// A size-m subset of the K base actions, kept sorted ascending.
class ActionSubset {
 public:
  ActionSubset(std::vector<int> members, int capacity);

  int capacity() const { return capacity_; }
  int size() const { return static_cast<int>(members_.size()); }
  const std::vector<int>& members() const { return members_; }
  bool contains(int y) const;

  bool operator==(const ActionSubset& other) const {
    return capacity_ == other.capacity_ && members_ == other.members_;
  }

 private:
  std::vector<int> members_;
  int capacity_;
};

// Per-action rewards in [0,1]^K with an L1 sparsity budget s.
class RewardVector {
 public:
  // Enforces both the [0,1] range and sum(values) <= s.
  RewardVector(std::vector<double> values, double sparsity);

  // Range-checked only. For rewards realized from high-probability-sparse
  // laws, where rare rounds may exceed the L1 budget and are still fed to
  // the algorithms unmodified.
  static RewardVector unchecked_sparsity(std::vector<double> values,
                                         double sparsity);

  double operator[](int y) const { return values_[static_cast<std::size_t>(y)]; }
  int dimension() const { return static_cast<int>(values_.size()); }
  double sparsity() const { return sparsity_; }
  double l1_norm() const;
  const std::vector<double>& values() const { return values_; }

 private:
  RewardVector() = default;
  std::vector<double> values_;
  double sparsity_ = 0.0;
};

// A total map from context ids to actions.
class Policy {
 public:
  explicit Policy(std::vector<ActionSubset> table);

  const ActionSubset& action(Context x) const;
  int num_contexts() const { return static_cast<int>(table_.size()); }
  const std::vector<ActionSubset>& table() const { return table_; }

 private:
  std::vector<ActionSubset> table_;
};

// Finite ordered policy class. Policy indices are stable; the lowest index
// wins every tie-break in the library.
class PolicyClass {
 public:
  PolicyClass(std::vector<Policy> policies, int capacity, int subset_size);

  std::size_t size() const { return policies_.size(); }
  int capacity() const { return capacity_; }      // K
  int subset_size() const { return subset_size_; }  // m
  int num_contexts() const { return num_contexts_; }
  const Policy& operator[](std::size_t j) const { return policies_[j]; }

 private:
  std::vector<Policy> policies_;
  int capacity_;
  int subset_size_;
  int num_contexts_;
};

// A point of the probability simplex over policies.
class SimplexWeights {
 public:
  static constexpr double kSumTolerance = 1e-9;

  explicit SimplexWeights(std::vector<double> weights);

  static SimplexWeights delta(std::size_t n, std::size_t index);
  static SimplexWeights uniform(std::size_t n);

  double operator[](std::size_t i) const { return weights_[i]; }
  std::size_t size() const { return weights_.size(); }
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<double> weights_;
};

// The rewards observed after playing a subset: one (action, reward) pair for
// exactly the members of the played subset, in member order.
struct SemiBanditFeedback {
  std::vector<std::pair<int, double>> pairs;
};

// Q_p(y|x): probability that y is a member of pi(x) when pi ~ p.
double marginal_probability(const SimplexWeights& p, const PolicyClass& cls,
                            Context x, int y);

// (1-gamma) Q_p(y|x) + gamma m/K; never below gamma m/K.
double smoothed_marginal(const SimplexWeights& p, const PolicyClass& cls,
                         Context x, int y, double gamma);

// Exactly uniform draw over all size-m subsets of [K].
ActionSubset sample_uniform_action(int capacity, int subset_size, Rng& rng);

enum class SampleTag { kUniform, kPolicy };

// With probability gamma a uniform subset, otherwise pi(x) for pi ~ p. The
// inclusion probability of any action equals smoothed_marginal exactly.
std::pair<ActionSubset, SampleTag> sample_mixed_action(const SimplexWeights& p,
                                                       const PolicyClass& cls,
                                                       Context x, double gamma,
                                                       Rng& rng);

// Sum of rewards over the policy's action at x.
double policy_value(const Policy& pi, Context x, const RewardVector& r);

// Inverse-CDF draw of a policy index from p (lowest index on boundary ties).
std::size_t sample_policy_index(const SimplexWeights& p, Rng& rng);

}  // namespace semibandit
