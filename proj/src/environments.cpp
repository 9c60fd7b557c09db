#include "semibandit/environments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace semibandit {

namespace {
// A Bernoulli law is surely sparse when it cannot realize more than s ones.
bool law_surely_sparse(const RewardLaw& law, double sparsity) {
  if (law.type == RewardLawType::kFixed) return true;
  int positive = 0;
  for (double mean : law.values)
    if (mean > 0.0) ++positive;
  return positive <= sparsity + 1e-9;
}
}  // namespace

Instance::Instance(int capacity, int subset_size, double sparsity,
                   std::vector<double> context_probs,
                   std::vector<RewardLaw> laws)
    : capacity_(capacity),
      subset_size_(subset_size),
      sparsity_(sparsity),
      context_probs_(std::move(context_probs)),
      laws_(std::move(laws)) {
  if (capacity_ <= 0 || subset_size_ <= 0 || subset_size_ > capacity_)
    throw std::invalid_argument("Instance: need 0 < m <= K");
  if (!(sparsity_ > 0.0)) throw std::invalid_argument("Instance: sparsity must be positive");
  if (context_probs_.empty() || context_probs_.size() != laws_.size())
    throw std::invalid_argument("Instance: contexts and laws must align and be nonempty");
  double total = 0.0;
  for (double p : context_probs_) {
    if (!(p >= 0.0)) throw std::invalid_argument("Instance: negative context probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("Instance: context probabilities must sum to 1");
  guarantee_ = SparsityGuarantee::kSure;
  for (const RewardLaw& law : laws_) {
    if (static_cast<int>(law.values.size()) != capacity_)
      throw std::invalid_argument("Instance: law dimension mismatch");
    for (double v : law.values)
      if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("Instance: law value outside [0,1]");
    if (law.type == RewardLawType::kFixed) {
      const double l1 = std::accumulate(law.values.begin(), law.values.end(), 0.0);
      if (l1 > sparsity_ + 1e-9)
        throw std::invalid_argument("Instance: fixed reward exceeds sparsity budget");
    }
    if (!law_surely_sparse(law, sparsity_))
      guarantee_ = SparsityGuarantee::kHighProbability;
  }
}

std::pair<Context, RewardVector> sample_round(const Instance& inst, Rng& rng) {
  const double u = rng.next_double();
  int x = inst.num_contexts() - 1;
  double cum = 0.0;
  for (int i = 0; i + 1 < inst.num_contexts(); ++i) {
    cum += inst.context_prob(i);
    if (u < cum) {
      x = i;
      break;
    }
  }
  const RewardLaw& law = inst.law(x);
  std::vector<double> values;
  if (law.type == RewardLawType::kFixed) {
    values = law.values;
  } else {
    values.resize(law.values.size());
    for (std::size_t y = 0; y < law.values.size(); ++y)
      values[y] = (rng.next_double() < law.values[y]) ? 1.0 : 0.0;
  }
  RewardVector r = (inst.guarantee() == SparsityGuarantee::kSure)
                       ? RewardVector(std::move(values), inst.sparsity())
                       : RewardVector::unchecked_sparsity(std::move(values),
                                                          inst.sparsity());
  return {Context{x}, std::move(r)};
}

Instance lower_bound_instance(const LowerBoundSpec& spec) {
  if (spec.subset_size > spec.capacity / 2)
    throw std::invalid_argument("lower_bound_instance: requires m <= K/2");
  if (spec.good_set.size() != spec.subset_size ||
      spec.good_set.capacity() != spec.capacity)
    throw std::invalid_argument("lower_bound_instance: good set shape mismatch");
  const double base = spec.sparsity / (2.0 * spec.capacity);
  const double good = base + spec.eps / spec.subset_size;
  const double bad = base - spec.eps / (spec.capacity - spec.subset_size);
  if (!(good >= 0.0 && good <= 1.0 && bad >= 0.0 && bad <= 1.0))
    throw std::invalid_argument("lower_bound_instance: Bernoulli mean outside [0,1]");
  RewardLaw law;
  law.type = RewardLawType::kBernoulli;
  law.values.assign(static_cast<std::size_t>(spec.capacity), bad);
  for (int y : spec.good_set.members()) law.values[static_cast<std::size_t>(y)] = good;
  return Instance(spec.capacity, spec.subset_size, spec.sparsity, {1.0}, {law});
}

double exact_policy_reward(const Instance& inst, const Policy& pi) {
  if (pi.num_contexts() != inst.num_contexts())
    throw std::invalid_argument("exact_policy_reward: context universe mismatch");
  double total = 0.0;
  for (int x = 0; x < inst.num_contexts(); ++x) {
    double per_context = 0.0;
    for (int y : pi.action(Context{x}).members()) per_context += inst.mean_reward(x, y);
    total += inst.context_prob(x) * per_context;
  }
  return total;
}

double exact_gap_to_best(const Instance& inst, const PolicyClass& cls,
                         const Policy& pi) {
  double best = -1.0;
  for (std::size_t j = 0; j < cls.size(); ++j)
    best = std::max(best, exact_policy_reward(inst, cls[j]));
  return best - exact_policy_reward(inst, pi);
}

std::pair<Instance, PolicyClass> random_sparse_instance(int capacity,
                                                        int subset_size,
                                                        double sparsity,
                                                        int n_contexts,
                                                        int n_policies,
                                                        Rng& rng) {
  if (sparsity > capacity || subset_size > capacity)
    throw std::invalid_argument("random_sparse_instance: need s <= K and m <= K");
  if (n_contexts <= 0 || n_policies <= 0)
    throw std::invalid_argument("random_sparse_instance: need contexts, policies >= 1");

  std::vector<double> probs(static_cast<std::size_t>(n_contexts));
  double prob_sum = 0.0;
  for (double& p : probs) {
    p = 0.1 + rng.next_double();
    prob_sum += p;
  }
  // Fix the last coordinate so the probabilities sum to 1 exactly.
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    probs[i] /= prob_sum;
    acc += probs[i];
  }
  probs.back() = 1.0 - acc;

  // Support of size >= 2s keeps each scaled entry at or below 1.
  const int support = std::min(
      capacity, std::max(subset_size, static_cast<int>(std::ceil(2.0 * sparsity))));
  std::vector<RewardLaw> laws(static_cast<std::size_t>(n_contexts));
  for (RewardLaw& law : laws) {
    law.type = RewardLawType::kFixed;
    law.values.assign(static_cast<std::size_t>(capacity), 0.0);
    const ActionSubset sup = sample_uniform_action(capacity, support, rng);
    std::vector<double> raw(sup.members().size());
    double raw_sum = 0.0;
    for (double& v : raw) {
      v = 0.5 + 0.5 * rng.next_double();
      raw_sum += v;
    }
    const double frac = 0.6 + 0.4 * rng.next_double();
    const double scale = sparsity * frac / raw_sum;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      law.values[static_cast<std::size_t>(sup.members()[i])] =
          std::min(1.0, raw[i] * scale);
    }
  }

  // Policy 0 covers the top-m reward actions in every context; the rest are
  // random, so gaps are nondegenerate with a known maximizer.
  std::vector<Policy> policies;
  policies.reserve(static_cast<std::size_t>(n_policies));
  {
    std::vector<ActionSubset> table;
    table.reserve(static_cast<std::size_t>(n_contexts));
    for (const RewardLaw& law : laws) {
      std::vector<int> order(static_cast<std::size_t>(capacity));
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return law.values[static_cast<std::size_t>(a)] >
               law.values[static_cast<std::size_t>(b)];
      });
      order.resize(static_cast<std::size_t>(subset_size));
      table.emplace_back(std::move(order), capacity);
    }
    policies.emplace_back(std::move(table));
  }
  for (int j = 1; j < n_policies; ++j) {
    std::vector<ActionSubset> table;
    table.reserve(static_cast<std::size_t>(n_contexts));
    for (int x = 0; x < n_contexts; ++x)
      table.push_back(sample_uniform_action(capacity, subset_size, rng));
    policies.emplace_back(std::move(table));
  }

  Instance inst(capacity, subset_size, sparsity, std::move(probs), std::move(laws));
  PolicyClass cls(std::move(policies), capacity, subset_size);
  return {std::move(inst), std::move(cls)};
}

Instance list_instance_to_rewards(const ListClassificationInstance& lci) {
  if (lci.label_sets.size() != lci.context_probs.size())
    throw std::invalid_argument("list_instance_to_rewards: contexts and label sets must align");
  std::vector<RewardLaw> laws;
  laws.reserve(lci.label_sets.size());
  for (const std::vector<int>& labels : lci.label_sets) {
    if (static_cast<double>(labels.size()) > lci.sparsity + 1e-9)
      throw std::invalid_argument("list_instance_to_rewards: label set larger than sparsity budget");
    RewardLaw law;
    law.type = RewardLawType::kFixed;
    law.values.assign(static_cast<std::size_t>(lci.capacity), 0.0);
    for (int y : labels) {
      if (y < 0 || y >= lci.capacity)
        throw std::invalid_argument("list_instance_to_rewards: label out of range");
      law.values[static_cast<std::size_t>(y)] = 1.0;
    }
    laws.push_back(std::move(law));
  }
  return Instance(lci.capacity, lci.subset_size, lci.sparsity,
                  lci.context_probs, std::move(laws));
}

}  // namespace semibandit
