#include <doctest.h>

#include <cmath>

#include "semibandit/environments.hpp"
#include "semibandit/io.hpp"
#include "test_support.hpp"

using namespace semibandit;
namespace st = semibandit::testing;

TEST_SUITE_BEGIN("environments");

TEST_CASE("Instance validates its pieces") {
  RewardLaw fixed{RewardLawType::kFixed, {0.5, 0.5}};
  CHECK_NOTHROW(Instance(2, 1, 1.0, {1.0}, {fixed}));
  CHECK_THROWS_AS(Instance(2, 1, 1.0, {0.9}, {fixed}), std::invalid_argument);
  RewardLaw heavy{RewardLawType::kFixed, {1.0, 1.0}};
  CHECK_THROWS_AS(Instance(2, 1, 1.0, {1.0}, {heavy}), std::invalid_argument);
  // Bernoulli with more positive means than s is only high-probability sparse.
  RewardLaw bern{RewardLawType::kBernoulli, {0.3, 0.3, 0.3}};
  CHECK(Instance(3, 1, 1.0, {1.0}, {bern}).guarantee() ==
        SparsityGuarantee::kHighProbability);
  RewardLaw bern_sure{RewardLawType::kBernoulli, {0.3, 0.0, 0.0}};
  CHECK(Instance(3, 1, 1.0, {1.0}, {bern_sure}).guarantee() ==
        SparsityGuarantee::kSure);
}

TEST_CASE("sample_round point mass and degenerate Bernoulli") {
  RewardLaw fixed{RewardLawType::kFixed, {0.2, 0.7}};
  const Instance point(2, 1, 1.0, {1.0}, {fixed});
  Rng rng(1);
  for (int i = 0; i < 10; ++i) {
    auto [x, r] = sample_round(point, rng);
    CHECK(x.id == 0);
    CHECK(r[0] == 0.2);
    CHECK(r[1] == 0.7);
  }
  RewardLaw zeros{RewardLawType::kBernoulli, {0.0, 0.0}};
  const Instance degenerate(2, 1, 1.0, {1.0}, {zeros});
  for (int i = 0; i < 10; ++i) {
    auto [x, r] = sample_round(degenerate, rng);
    (void)x;
    CHECK(r.l1_norm() == 0.0);
  }
}

TEST_CASE("sample_round context frequencies") {
  RewardLaw law{RewardLawType::kFixed, {0.0, 0.0}};
  const Instance inst(2, 1, 1.0, {0.5, 0.5}, {law, law});
  Rng rng(42);
  const int n = 10000;
  int first = 0;
  for (int i = 0; i < n; ++i) {
    auto [x, r] = sample_round(inst, rng);
    (void)r;
    if (x.id == 0) ++first;
  }
  const double se = std::sqrt(0.25 / n);
  CHECK(std::abs(first / static_cast<double>(n) - 0.5) < 3.0 * se);
}

TEST_CASE("lower_bound_instance means") {
  // K=12, m=1, s=2, eps=0: all means 1/12, total 1.
  const Instance sym = lower_bound_instance(
      {12, 1, 2.0, 0.0, ActionSubset({0}, 12)});
  double total = 0.0;
  for (int y = 0; y < 12; ++y) {
    CHECK(sym.mean_reward(0, y) == doctest::Approx(1.0 / 12.0));
    total += sym.mean_reward(0, y);
  }
  CHECK(total == doctest::Approx(1.0));

  // K=12, m=1, s=2, eps=0.06: good arm 1/12 + 0.06, others 1/12 - 0.06/11.
  const Instance skew = lower_bound_instance(
      {12, 1, 2.0, 0.06, ActionSubset({3}, 12)});
  CHECK(skew.mean_reward(0, 3) == doctest::Approx(0.1433333333333333));
  CHECK(skew.mean_reward(0, 0) == doctest::Approx(0.07787878787878788));
  CHECK(skew.guarantee() == SparsityGuarantee::kHighProbability);

  // total mean is s/2 exactly for any valid spec
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 8 + static_cast<int>(rng.below(20));
    const int m = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(k / 2)));
    const double s = 1.0 + 3.0 * rng.next_double();
    const double eps = 0.02 * rng.next_double();
    const Instance inst = lower_bound_instance(
        {k, m, s, eps, sample_uniform_action(k, m, rng)});
    double sum = 0.0;
    for (int y = 0; y < k; ++y) sum += inst.mean_reward(0, y);
    CHECK(std::abs(sum - s / 2.0) < 1e-12);
  }

  // invalid means reject
  CHECK_THROWS_AS(lower_bound_instance({4, 1, 2.0, 0.8, ActionSubset({0}, 4)}),
                  std::invalid_argument);
  CHECK_THROWS_AS(lower_bound_instance({4, 3, 1.0, 0.0, ActionSubset({0, 1, 2}, 4)}),
                  std::invalid_argument);
}

TEST_CASE("sparsity violations stay under the exponential bound") {
  // s=40, T=1000: bound is T e^{-s/4} ~ 4.5e-2 as a per-run fraction.
  const int k = 80, m = 4, horizon = 1000;
  const double s = 40.0;
  const Instance inst =
      lower_bound_instance({k, m, s, 0.01, ActionSubset({0, 1, 2, 3}, k)});
  const double bound = horizon * std::exp(-s / 4.0);
  Rng rng(17);
  for (int run = 0; run < 5; ++run) {
    int violations = 0;
    for (int t = 0; t < horizon; ++t) {
      auto [x, r] = sample_round(inst, rng);
      (void)x;
      if (r.l1_norm() > s + 1e-12) ++violations;
    }
    CHECK(violations / static_cast<double>(horizon) <= bound + 0.01);
  }
}

TEST_CASE("exact_policy_reward") {
  // deterministic single-context equals policy_value
  RewardLaw law{RewardLawType::kFixed, {0.4, 0.1, 0.3}};
  const Instance inst(3, 2, 1.0, {1.0}, {law});
  const PolicyClass cls = st::make_class(3, 2, {{{0, 2}}});
  CHECK(exact_policy_reward(inst, cls[0]) ==
        doctest::Approx(policy_value(cls[0], Context{0},
                                     RewardVector({0.4, 0.1, 0.3}, 1.0))));

  // lower-bound instance, policy on the good set: ms/(2K) + eps
  const int k = 12, m = 2;
  const double s = 3.0, eps = 0.05;
  const Instance lb = lower_bound_instance({k, m, s, eps, ActionSubset({0, 1}, k)});
  const PolicyClass good = st::make_class(k, m, {{{0, 1}}});
  CHECK(exact_policy_reward(lb, good[0]) ==
        doctest::Approx(m * s / (2.0 * k) + eps).epsilon(1e-12));
}

TEST_CASE("exact_policy_reward agrees with Monte Carlo on generated instances") {
  Rng rng(31);
  for (int trial = 0; trial < 4; ++trial) {
    // alternate between surely-sparse fixtures and Bernoulli hard instances
    const bool bernoulli = trial % 2 == 1;
    auto [inst, cls] =
        bernoulli
            ? std::pair<Instance, PolicyClass>(
                  lower_bound_instance(
                      {10, 2, 2.0, 0.04, sample_uniform_action(10, 2, rng)}),
                  st::make_class(10, 2, {{{0, 1}}, {{2, 5}}}))
            : random_sparse_instance(6, 2, 2.0, 3, 4, rng);
    const Policy& pi = cls[cls.size() - 1];
    Rng mc(rng.split(trial).seed());
    const int n = bernoulli ? 200000 : 1000000;
    std::vector<double> draws;
    draws.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      auto [x, r] = sample_round(inst, mc);
      draws.push_back(policy_value(pi, x, r));
    }
    const double exact = exact_policy_reward(inst, pi);
    const double se = std::sqrt(st::variance_of(draws) / n);
    CHECK(std::abs(st::mean_of(draws) - exact) < 4.0 * se + 1e-12);
  }
}

TEST_CASE("exact_gap_to_best") {
  RewardLaw law{RewardLawType::kFixed, {0.7, 0.4, 0.0}};
  const Instance inst(3, 1, 2.0, {1.0}, {law});
  const PolicyClass two = st::make_class(3, 1, {{{0}}, {{1}}});
  CHECK(exact_gap_to_best(inst, two, two[0]) == doctest::Approx(0.0));
  CHECK(exact_gap_to_best(inst, two, two[1]) == doctest::Approx(0.3));
  // gap invariant to adding a dominated third policy
  const PolicyClass three = st::make_class(3, 1, {{{0}}, {{1}}, {{2}}});
  CHECK(exact_gap_to_best(inst, three, three[1]) == doctest::Approx(0.3));
}

TEST_CASE("random_sparse_instance contracts") {
  Rng rng(13);
  // singleton class: every policy trivially optimal
  auto [inst1, cls1] = random_sparse_instance(5, 2, 2.0, 2, 1, rng);
  CHECK(cls1.size() == 1);
  CHECK(exact_gap_to_best(inst1, cls1, cls1[0]) == doctest::Approx(0.0));

  // rewards pass the RewardVector invariants (constructor would throw)
  for (int trial = 0; trial < 10; ++trial) {
    auto [inst, cls] = random_sparse_instance(7, 2, 2.5, 3, 5, rng);
    (void)cls;
    CHECK(inst.guarantee() == SparsityGuarantee::kSure);
    for (int x = 0; x < inst.num_contexts(); ++x) {
      CHECK_NOTHROW(RewardVector(inst.law(x).values, inst.sparsity()));
    }
  }

  // policy 0 is the greedy maximizer
  auto [inst2, cls2] = random_sparse_instance(6, 2, 2.0, 3, 6, rng);
  CHECK(exact_gap_to_best(inst2, cls2, cls2[0]) == doctest::Approx(0.0));

  // same seed, byte-identical serialized form
  Rng r1(555), r2(555);
  auto [ia, ca] = random_sparse_instance(6, 2, 2.0, 3, 4, r1);
  auto [ib, cb] = random_sparse_instance(6, 2, 2.0, 3, 4, r2);
  CHECK(instance_to_json(ia).dump() == instance_to_json(ib).dump());
  CHECK(policy_class_to_json(ca).dump() == policy_class_to_json(cb).dump());
}

TEST_CASE("list_instance_to_rewards") {
  ListClassificationInstance lci;
  lci.capacity = 4;
  lci.subset_size = 2;
  lci.sparsity = 1.0;
  lci.context_probs = {0.5, 0.5};
  lci.label_sets = {{2}, {}};
  const Instance inst = list_instance_to_rewards(lci);
  CHECK(inst.mean_reward(0, 2) == 1.0);
  CHECK(inst.mean_reward(0, 0) == 0.0);
  CHECK(inst.mean_reward(1, 0) == 0.0);  // empty set -> zero rewards
  CHECK(inst.guarantee() == SparsityGuarantee::kSure);

  // boundary |Y| = s accepted
  lci.sparsity = 2.0;
  lci.label_sets = {{0, 1}, {2, 3}};
  const Instance boundary = list_instance_to_rewards(lci);
  CHECK(boundary.mean_reward(0, 0) + boundary.mean_reward(0, 1) == 2.0);
  // |Y| > s rejected
  lci.sparsity = 1.0;
  CHECK_THROWS_AS(list_instance_to_rewards(lci), std::invalid_argument);
}

TEST_CASE("instance json round trip") {
  Rng rng(8);
  auto [inst, cls] = random_sparse_instance(5, 2, 2.0, 3, 4, rng);
  const Instance back = instance_from_json(instance_to_json(inst));
  CHECK(instance_to_json(back).dump() == instance_to_json(inst).dump());
  const PolicyClass cls_back = policy_class_from_json(policy_class_to_json(cls));
  CHECK(policy_class_to_json(cls_back).dump() ==
        policy_class_to_json(cls).dump());
  // versioning is enforced
  nlohmann::json bad = instance_to_json(inst);
  bad["version"] = 2;
  CHECK_THROWS_AS(instance_from_json(bad), std::invalid_argument);
}

TEST_SUITE_END();
