#pragma once

#include <utility>
#include <vector>

#include "semibandit/core.hpp"
#include "semibandit/rng.hpp"

namespace semibandit {

enum class RewardLawType { kFixed, kBernoulli };

// Per-context reward law: either a fixed vector or a product of independent
// Bernoulli coordinates.
struct RewardLaw {
  RewardLawType type = RewardLawType::kFixed;
  std::vector<double> values;  // fixed rewards, or Bernoulli means
};

// Whether every realizable reward vector satisfies the L1 budget, or only
// all but an exponentially rare event does.
enum class SparsityGuarantee { kSure, kHighProbability };

// A finite-support distribution over (context, reward-law) pairs with exact
// per-action means, so population quantities are computable in closed form.
class Instance {
 public:
  Instance(int capacity, int subset_size, double sparsity,
           std::vector<double> context_probs, std::vector<RewardLaw> laws);

  int capacity() const { return capacity_; }
  int subset_size() const { return subset_size_; }
  double sparsity() const { return sparsity_; }
  int num_contexts() const { return static_cast<int>(context_probs_.size()); }
  double context_prob(int x) const { return context_probs_[static_cast<std::size_t>(x)]; }
  const RewardLaw& law(int x) const { return laws_[static_cast<std::size_t>(x)]; }
  double mean_reward(int x, int y) const {
    return laws_[static_cast<std::size_t>(x)].values[static_cast<std::size_t>(y)];
  }
  SparsityGuarantee guarantee() const { return guarantee_; }

 private:
  int capacity_;
  int subset_size_;
  double sparsity_;
  std::vector<double> context_probs_;
  std::vector<RewardLaw> laws_;
  SparsityGuarantee guarantee_;
};

// Parameters of the hard single-context Bernoulli instance: the good subset
// gets mean s/(2K) + eps/m per action, all others s/(2K) - eps/(K-m).
struct LowerBoundSpec {
  int capacity;
  int subset_size;
  double sparsity;
  double eps;
  ActionSubset good_set;
};

// Multiclass list classification data: per context a set of true labels of
// size at most s.
struct ListClassificationInstance {
  int capacity;
  int subset_size;
  double sparsity;
  std::vector<double> context_probs;
  std::vector<std::vector<int>> label_sets;  // per context
};

// One i.i.d. environment round.
std::pair<Context, RewardVector> sample_round(const Instance& inst, Rng& rng);

Instance lower_bound_instance(const LowerBoundSpec& spec);

// r_D(pi): exact expectation of the policy's per-round reward.
double exact_policy_reward(const Instance& inst, const Policy& pi);

// max over the class of exact_policy_reward, minus the policy's own.
double exact_gap_to_best(const Instance& inst, const PolicyClass& cls,
                         const Policy& pi);

// Seeded test-fixture generator: a deterministic-reward instance (surely
// s-sparse) and a policy class whose index-0 policy greedily covers the
// high-reward actions per context.
std::pair<Instance, PolicyClass> random_sparse_instance(int capacity,
                                                        int subset_size,
                                                        double sparsity,
                                                        int n_contexts,
                                                        int n_policies,
                                                        Rng& rng);

Instance list_instance_to_rewards(const ListClassificationInstance& lci);

}  // namespace semibandit
