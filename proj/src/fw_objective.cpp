#include "semibandit/fw_objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace semibandit {

namespace {

// Inverted membership index: for each (context, action) the policies whose
// action at that context contains it. Lets objective and gradient sums run
// over the context universe instead of over policies.
class MembershipIndex {
 public:
  explicit MembershipIndex(const PolicyClass& cls)
      : capacity_(cls.capacity()), lists_(static_cast<std::size_t>(
                                       cls.num_contexts() * cls.capacity())) {
    for (std::size_t j = 0; j < cls.size(); ++j) {
      for (int x = 0; x < cls.num_contexts(); ++x) {
        for (int y : cls[j].action(Context{x}).members())
          lists_[flat(x, y)].push_back(static_cast<int>(j));
      }
    }
  }

  const std::vector<int>& at(int x, int y) const { return lists_[flat(x, y)]; }

  // Q^gamma for every (context, action) under p.
  void smoothed(const PolicyClass& cls, const SimplexWeights& p, double gamma,
                std::vector<double>& qg) const {
    const int n_ctx = cls.num_contexts();
    const double floor_term =
        gamma * static_cast<double>(cls.subset_size()) / cls.capacity();
    qg.assign(static_cast<std::size_t>(n_ctx * capacity_), 0.0);
    for (std::size_t j = 0; j < cls.size(); ++j) {
      const double w = p[j];
      if (w == 0.0) continue;
      for (int x = 0; x < n_ctx; ++x)
        for (int y : cls[j].action(Context{x}).members()) qg[flat(x, y)] += w;
    }
    for (double& q : qg) q = (1.0 - gamma) * q + floor_term;
  }

 private:
  std::size_t flat(int x, int y) const {
    return static_cast<std::size_t>(x) * static_cast<std::size_t>(capacity_) +
           static_cast<std::size_t>(y);
  }
  int capacity_;
  std::vector<std::vector<int>> lists_;
};

// Objective of the form F(p) = -c sum_{x,y} w[x,y] log Q^gamma_p(y|x) with
// gradient_j = -c (1-gamma) sum_{x, y in pi_j(x)} w[x,y] / Q^gamma_p(y|x).
// Both the batch-mean and the population objective reduce to this shape.
class WeightedObjective {
 public:
  WeightedObjective(const PolicyClass& cls, std::vector<double> weights,
                    double scale)
      : cls_(cls), index_(cls), weights_(std::move(weights)), scale_(scale) {}

  double value_and_gradient(const SimplexWeights& p, double gamma,
                            std::vector<double>* gradient) const {
    index_.smoothed(cls_, p, gamma, qg_);
    if (gradient) gradient->assign(cls_.size(), 0.0);
    double value = 0.0;
    const double grad_factor = scale_ * (1.0 - gamma);
    const int n_ctx = cls_.num_contexts();
    const int cap = cls_.capacity();
    for (int x = 0; x < n_ctx; ++x) {
      for (int y = 0; y < cap; ++y) {
        const std::size_t f = static_cast<std::size_t>(x) * cap + y;
        const double w = weights_[f];
        if (w == 0.0) continue;
        const double q = qg_[f];
        value -= scale_ * w * std::log(q);
        if (gradient) {
          const double pull = grad_factor * w / q;
          for (int j : index_.at(x, y)) (*gradient)[static_cast<std::size_t>(j)] -= pull;
        }
      }
    }
    return value;
  }

 private:
  const PolicyClass& cls_;
  MembershipIndex index_;
  std::vector<double> weights_;
  double scale_;
  mutable std::vector<double> qg_;
};

// Accumulates observed rewards per (context, action), divided by N.
std::vector<double> batch_weights(const std::vector<Phase1Record>& batch,
                                  const PolicyClass& cls) {
  if (batch.empty()) throw std::invalid_argument("empirical objective: empty batch");
  std::vector<double> w(
      static_cast<std::size_t>(cls.num_contexts() * cls.capacity()), 0.0);
  for (const Phase1Record& rec : batch) {
    if (rec.x.id < 0 || rec.x.id >= cls.num_contexts())
      throw std::invalid_argument("empirical objective: record context out of range");
    if (rec.a.capacity() != cls.capacity() || rec.a.size() != cls.subset_size())
      throw std::invalid_argument("empirical objective: record shape mismatch");
    for (const auto& [y, r] : rec.observed.pairs)
      w[static_cast<std::size_t>(rec.x.id) * cls.capacity() + y] += r;
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (double& v : w) v *= inv_n;
  return w;
}

double default_scale(const PolicyClass& cls, double requested) {
  return requested > 0.0
             ? requested
             : static_cast<double>(cls.capacity()) / cls.subset_size();
}

FwResult run_frank_wolfe(const WeightedObjective& obj, const PolicyClass& cls,
                         double gamma, int iterations, const SimplexWeights& p1,
                         double gap_stop) {
  if (iterations < 1) throw std::invalid_argument("frank_wolfe: need at least one iteration");
  if (p1.size() != cls.size())
    throw std::invalid_argument("frank_wolfe: start point size mismatch");
  FwResult result;
  result.trace.reserve(static_cast<std::size_t>(iterations) + 1);
  std::vector<double> p = p1.weights();
  std::vector<double> g;
  SimplexWeights current = p1;
  for (int t = 1; t <= iterations; ++t) {
    const double value = obj.value_and_gradient(current, gamma, &g);
    const std::size_t q = loo(cls, g);
    ++result.oracle_calls;
    double gap = -g[q];
    for (std::size_t j = 0; j < p.size(); ++j) gap += g[j] * p[j];
    result.trace.push_back({t, value, gap});
    if (gap_stop > 0.0 && gap <= gap_stop) {
      result.p_hat = current;
      result.final_objective = value;
      result.final_duality_gap = gap;
      return result;
    }
    const double eta = 2.0 / (2.0 + static_cast<double>(t));
    for (double& w : p) w *= 1.0 - eta;
    p[q] += eta;
    current = SimplexWeights(p);
  }
  // Certificate at the returned iterate; a plain min, not an oracle call.
  const double value = obj.value_and_gradient(current, gamma, &g);
  double gap = -*std::min_element(g.begin(), g.end());
  for (std::size_t j = 0; j < p.size(); ++j) gap += g[j] * p[j];
  result.trace.push_back({iterations + 1, value, gap});
  result.p_hat = current;
  result.final_objective = value;
  result.final_duality_gap = gap;
  return result;
}

std::vector<double> population_weights(const Instance& inst,
                                       const PolicyClass& cls) {
  if (inst.num_contexts() != cls.num_contexts() ||
      inst.capacity() != cls.capacity())
    throw std::invalid_argument("population objective: instance and class mismatch");
  std::vector<double> w(
      static_cast<std::size_t>(cls.num_contexts() * cls.capacity()), 0.0);
  for (int x = 0; x < inst.num_contexts(); ++x)
    for (int y = 0; y < inst.capacity(); ++y)
      w[static_cast<std::size_t>(x) * inst.capacity() + y] =
          inst.context_prob(x) * inst.mean_reward(x, y);
  return w;
}

}  // namespace

Phase1Record::Phase1Record(Context x_in, ActionSubset a_in,
                           SemiBanditFeedback observed_in)
    : x(x_in), a(std::move(a_in)), observed(std::move(observed_in)) {
  if (static_cast<int>(observed.pairs.size()) != a.size())
    throw std::invalid_argument("Phase1Record: feedback size differs from subset size");
  for (std::size_t i = 0; i < observed.pairs.size(); ++i) {
    if (observed.pairs[i].first != a.members()[i])
      throw std::invalid_argument("Phase1Record: feedback does not cover the played subset");
    const double r = observed.pairs[i].second;
    if (!(r >= 0.0 && r <= 1.0))
      throw std::invalid_argument("Phase1Record: observed reward outside [0,1]");
  }
}

double stochastic_objective(const SimplexWeights& p, const Phase1Record& rec,
                            const PolicyClass& cls, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw std::invalid_argument("stochastic_objective: gamma outside (0,1]");
  const double scale = static_cast<double>(cls.capacity()) / cls.subset_size();
  double value = 0.0;
  for (const auto& [y, r] : rec.observed.pairs) {
    if (r == 0.0) continue;
    value -= scale * r * std::log(smoothed_marginal(p, cls, rec.x, y, gamma));
  }
  return value;
}

double empirical_objective(const SimplexWeights& p,
                           const std::vector<Phase1Record>& batch,
                           const PolicyClass& cls, double gamma) {
  WeightedObjective obj(cls, batch_weights(batch, cls), default_scale(cls, 0.0));
  return obj.value_and_gradient(p, gamma, nullptr);
}

std::vector<double> empirical_gradient(const SimplexWeights& p,
                                       const std::vector<Phase1Record>& batch,
                                       const PolicyClass& cls, double gamma) {
  WeightedObjective obj(cls, batch_weights(batch, cls), default_scale(cls, 0.0));
  std::vector<double> g;
  obj.value_and_gradient(p, gamma, &g);
  return g;
}

FwResult frank_wolfe(const std::vector<Phase1Record>& batch,
                     const PolicyClass& cls, double gamma, int iterations,
                     const SimplexWeights& p1, const FwOptions& opts) {
  WeightedObjective obj(cls, batch_weights(batch, cls),
                        default_scale(cls, opts.importance_scale));
  return run_frank_wolfe(obj, cls, gamma, iterations, p1, opts.gap_stop);
}

PopulationEval exact_population_objective(const SimplexWeights& p,
                                          const Instance& inst,
                                          const PolicyClass& cls,
                                          double gamma) {
  WeightedObjective obj(cls, population_weights(inst, cls), 1.0);
  PopulationEval eval;
  eval.value = obj.value_and_gradient(p, gamma, &eval.gradient);
  return eval;
}

FwResult frank_wolfe_population(const Instance& inst, const PolicyClass& cls,
                                double gamma, int iterations,
                                const SimplexWeights& p1, double gap_stop) {
  WeightedObjective obj(cls, population_weights(inst, cls), 1.0);
  return run_frank_wolfe(obj, cls, gamma, iterations, p1, gap_stop);
}

std::vector<WeightedExample> phase1_weighted_dataset(
    const std::vector<Phase1Record>& batch, const PolicyClass& cls,
    const SimplexWeights& p, double gamma) {
  if (batch.empty()) throw std::invalid_argument("phase1_weighted_dataset: empty batch");
  const double factor = (1.0 - gamma) *
                        (static_cast<double>(cls.capacity()) / cls.subset_size()) /
                        static_cast<double>(batch.size());
  std::vector<WeightedExample> data;
  data.reserve(batch.size());
  for (const Phase1Record& rec : batch) {
    WeightedExample ex;
    ex.x = rec.x;
    for (const auto& [y, r] : rec.observed.pairs) {
      if (r == 0.0) continue;
      ex.rhat.emplace_back(
          y, factor * r / smoothed_marginal(p, cls, rec.x, y, gamma));
    }
    data.push_back(std::move(ex));
  }
  return data;
}

}  // namespace semibandit
