#include "semibandit/pac.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "semibandit/oracle.hpp"

namespace semibandit {

bool InstanceStream::next(Context& x, RewardVector& r) {
  auto [ctx, reward] = sample_round(inst_, rng_);
  x = ctx;
  r = std::move(reward);
  return true;
}

bool FixedSequenceStream::next(Context& x, RewardVector& r) {
  if (pos_ >= rounds_.size()) return false;
  x = rounds_[pos_].first;
  r = rounds_[pos_].second;
  ++pos_;
  return true;
}

void PacConfig::validate() const {
  if (n1 < 1 || n2 < 1) throw std::invalid_argument("PacConfig: need n1, n2 >= 1");
  if (fw_iterations < 1) throw std::invalid_argument("PacConfig: need fw_iterations >= 1");
  if (!(gamma > 0.0 && gamma <= 0.5))
    throw std::invalid_argument("PacConfig: gamma must lie in (0, 1/2]");
}

PacConfig theorem_shaped_config(int capacity, int subset_size, double sparsity,
                                std::size_t n_policies, double eps, double delta,
                                double c, std::uint64_t seed) {
  if (!(eps > 0.0 && delta > 0.0 && delta < 1.0 && c > 0.0))
    throw std::invalid_argument("theorem_shaped_config: bad eps/delta/c");
  const double k = capacity;
  const double m = subset_size;
  const double log_term = std::log(static_cast<double>(n_policies) / delta);
  PacConfig cfg;
  cfg.n1 = static_cast<std::int64_t>(
      std::ceil(c * std::pow(k, 9) / std::pow(m, 8) * log_term));
  cfg.n2 = static_cast<std::int64_t>(
      std::ceil(c * (k / (m * eps) + sparsity * m / (eps * eps)) * log_term));
  cfg.fw_iterations = static_cast<int>(std::ceil(c * std::pow(k / m, 5)));
  cfg.n1 = std::max<std::int64_t>(cfg.n1, 1);
  cfg.n2 = std::max<std::int64_t>(cfg.n2, 1);
  cfg.fw_iterations = std::max(cfg.fw_iterations, 1);
  cfg.gamma = 0.5;
  cfg.seed = seed;
  return cfg;
}

PacConfig single_label_theorem_config(int capacity, std::size_t n_hypotheses,
                                      double eps, double delta, double c,
                                      std::uint64_t seed) {
  if (!(eps > 0.0 && delta > 0.0 && delta < 1.0 && c > 0.0))
    throw std::invalid_argument("single_label_theorem_config: bad eps/delta/c");
  const double k = capacity;
  const double log_term = std::log(static_cast<double>(n_hypotheses) / delta);
  PacConfig cfg;
  cfg.n1 = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::ceil(c * std::pow(k, 7) * log_term)));
  cfg.n2 = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(
             std::ceil(c * (k / eps + 1.0 / (eps * eps)) * log_term)));
  cfg.fw_iterations =
      std::max(1, static_cast<int>(std::ceil(c * std::pow(k, 4))));
  cfg.gamma = 0.5;
  cfg.seed = seed;
  return cfg;
}

Phase1Result run_phase1(RoundStream& env, const PolicyClass& cls,
                        const PacConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<Phase1Record> records;
  records.reserve(static_cast<std::size_t>(cfg.n1));
  Context x;
  RewardVector r({0.0}, 1.0);
  double total_observed = 0.0;
  for (std::int64_t i = 0; i < cfg.n1; ++i) {
    if (!env.next(x, r))
      throw std::runtime_error("run_phase1: environment exhausted before N1 rounds");
    ActionSubset a = sample_uniform_action(cls.capacity(), cls.subset_size(), rng);
    SemiBanditFeedback fb;
    fb.pairs.reserve(a.members().size());
    for (int y : a.members()) {
      fb.pairs.emplace_back(y, r[y]);
      total_observed += r[y];
    }
    records.emplace_back(x, std::move(a), std::move(fb));
  }
  const SimplexWeights p1 = SimplexWeights::delta(cls.size(), 0);
  FwResult fw = frank_wolfe(records, cls, cfg.gamma, cfg.fw_iterations, p1);
  Phase1Result result;
  result.p_hat = std::move(fw.p_hat);
  result.records = std::move(records);
  result.oracle_calls = fw.oracle_calls;
  result.uninformative = total_observed == 0.0;
  if (cfg.keep_fw_trace) result.fw_trace = std::move(fw.trace);
  return result;
}

Phase2Result run_phase2(RoundStream& env, const PolicyClass& cls,
                        const SimplexWeights& p_hat, const PacConfig& cfg,
                        Rng& rng) {
  cfg.validate();
  if (p_hat.size() != cls.size())
    throw std::invalid_argument("run_phase2: p_hat size mismatch");
  std::vector<WeightedExample> data;
  data.reserve(static_cast<std::size_t>(cfg.n2));
  std::vector<double> sum(cls.size(), 0.0), sum_sq(cls.size(), 0.0);
  Context x;
  RewardVector r({0.0}, 1.0);
  for (std::int64_t i = 0; i < cfg.n2; ++i) {
    if (!env.next(x, r))
      throw std::runtime_error("run_phase2: environment exhausted before N2 rounds");
    auto [a, tag] = sample_mixed_action(p_hat, cls, x, cfg.gamma, rng);
    (void)tag;
    WeightedExample ex;
    ex.x = x;
    for (int y : a.members()) {
      if (r[y] == 0.0) continue;
      ex.rhat.emplace_back(y, r[y] / smoothed_marginal(p_hat, cls, x, y, cfg.gamma));
    }
    for (std::size_t j = 0; j < cls.size(); ++j) {
      double est = 0.0;
      for (int y : cls[j].action(x).members()) est += ex.rhat_at(y);
      sum[j] += est;
      sum_sq[j] += est * est;
    }
    data.push_back(std::move(ex));
  }
  Phase2Result result;
  result.out_policy = erm(cls, data);
  const double n = static_cast<double>(cfg.n2);
  result.summary.mean.resize(cls.size());
  result.summary.variance.resize(cls.size());
  for (std::size_t j = 0; j < cls.size(); ++j) {
    const double mean = sum[j] / n;
    result.summary.mean[j] = mean;
    result.summary.variance[j] = std::max(0.0, sum_sq[j] / n - mean * mean);
  }
  return result;
}

PacReport pac_comband(const Instance& inst, const PolicyClass& cls,
                      const PacConfig& cfg) {
  cfg.validate();
  Rng master(cfg.seed);
  Rng env1_rng = master.split(0);
  Rng alg1_rng = master.split(1);
  Rng env2_rng = master.split(2);
  Rng alg2_rng = master.split(3);

  InstanceStream env1(inst, env1_rng);
  Phase1Result phase1 = run_phase1(env1, cls, cfg, alg1_rng);

  InstanceStream env2(inst, env2_rng);
  Phase2Result phase2 = run_phase2(env2, cls, phase1.p_hat, cfg, alg2_rng);

  PacReport report;
  report.out_policy = phase2.out_policy;
  report.gap = exact_gap_to_best(inst, cls, cls[phase2.out_policy]);
  report.grad_inf_norm = 0.0;
  const PopulationEval eval =
      exact_population_objective(phase1.p_hat, inst, cls, cfg.gamma);
  for (double g : eval.gradient)
    report.grad_inf_norm = std::max(report.grad_inf_norm, std::abs(g));
  report.variance_audit = phase2.summary.variance;
  report.samples_used = cfg.n1 + cfg.n2;
  report.erm_calls = static_cast<std::int64_t>(phase1.oracle_calls) + 1;
  report.uninformative_phase1 = phase1.uninformative;
  report.p_hat = phase1.p_hat;
  report.fw_trace = std::move(phase1.fw_trace);
  return report;
}

std::vector<double> phase2_weight_audit(const Instance& inst,
                                        const PolicyClass& cls,
                                        const SimplexWeights& p, double gamma) {
  std::vector<double> audit(cls.size(), 0.0);
  for (std::size_t j = 0; j < cls.size(); ++j) {
    for (int x = 0; x < inst.num_contexts(); ++x) {
      double per_context = 0.0;
      for (int y : cls[j].action(Context{x}).members()) {
        const double mean = inst.mean_reward(x, y);
        if (mean == 0.0) continue;
        per_context += mean / smoothed_marginal(p, cls, Context{x}, y, gamma);
      }
      audit[j] += inst.context_prob(x) * per_context;
    }
  }
  return audit;
}

SingleLabelInstanceStream::SingleLabelInstanceStream(
    const ListClassificationInstance& lci, Rng rng)
    : probs_(lci.context_probs), rng_(rng) {
  labels_.reserve(lci.label_sets.size());
  for (const std::vector<int>& labels : lci.label_sets) {
    if (labels.size() != 1)
      throw std::invalid_argument("SingleLabelInstanceStream: label sets must be singletons");
    labels_.push_back(labels.front());
  }
}

bool SingleLabelInstanceStream::next(Context& x, int& label) {
  const double u = rng_.next_double();
  std::size_t idx = probs_.size() - 1;
  double cum = 0.0;
  for (std::size_t i = 0; i + 1 < probs_.size(); ++i) {
    cum += probs_[i];
    if (u < cum) {
      idx = i;
      break;
    }
  }
  x = Context{static_cast<int>(idx)};
  label = labels_[idx];
  return true;
}

SingleLabelReport pac_single_label(LabelStream& env,
                                   const PolicyClass& hypotheses,
                                   const PacConfig& cfg) {
  cfg.validate();
  if (hypotheses.subset_size() != 1)
    throw std::invalid_argument("pac_single_label: hypothesis class must have m = 1");
  const int capacity = hypotheses.capacity();
  Rng master(cfg.seed);
  Rng guess_rng = master.split(1);
  Rng phase2_rng = master.split(3);

  // Phase 1: uniform guesses; keep the rounds whose guess hit the label.
  std::vector<Phase1Record> matched;
  Context x;
  int label = 0;
  for (std::int64_t i = 0; i < cfg.n1; ++i) {
    if (!env.next(x, label))
      throw std::runtime_error("pac_single_label: environment exhausted before N1 rounds");
    if (label < 0 || label >= capacity)
      throw std::invalid_argument("pac_single_label: label out of range");
    const int guess = static_cast<int>(guess_rng.below(static_cast<std::uint64_t>(capacity)));
    if (guess == label) {
      SemiBanditFeedback fb;
      fb.pairs.emplace_back(guess, 1.0);
      matched.emplace_back(x, ActionSubset({guess}, capacity), std::move(fb));
    }
  }

  SingleLabelReport report;
  report.matched = static_cast<std::int64_t>(matched.size());
  report.samples_used = cfg.n1 + cfg.n2;
  if (matched.empty()) {
    // Degenerate dataset: the objective is constant, so FW would stay on the
    // tie-broken start vertex.
    report.uninformative_phase1 = true;
    report.p_hat = SimplexWeights::delta(hypotheses.size(), 0);
    report.erm_calls = 0;
  } else {
    FwOptions opts;
    opts.importance_scale = 1.0;  // matched dataset needs no K/m reweighting
    FwResult fw = frank_wolfe(matched, hypotheses, cfg.gamma, cfg.fw_iterations,
                              SimplexWeights::delta(hypotheses.size(), 0), opts);
    report.p_hat = fw.p_hat;
    report.erm_calls = static_cast<std::int64_t>(fw.oracle_calls);
  }

  // Phase 2: identical in shape to the generic estimator phase.
  std::vector<WeightedExample> data;
  data.reserve(static_cast<std::size_t>(cfg.n2));
  for (std::int64_t i = 0; i < cfg.n2; ++i) {
    if (!env.next(x, label))
      throw std::runtime_error("pac_single_label: environment exhausted before N2 rounds");
    auto [a, tag] = sample_mixed_action(report.p_hat, hypotheses, x, cfg.gamma,
                                        phase2_rng);
    (void)tag;
    const int guess = a.members().front();
    WeightedExample ex;
    ex.x = x;
    if (guess == label) {
      ex.rhat.emplace_back(
          guess, 1.0 / smoothed_marginal(report.p_hat, hypotheses, x, guess,
                                         cfg.gamma));
    }
    data.push_back(std::move(ex));
  }
  report.out_hypothesis = erm(hypotheses, data);
  report.erm_calls += 1;
  return report;
}

}  // namespace semibandit
