#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "semibandit/core.hpp"
#include "semibandit/environments.hpp"
#include "semibandit/rng.hpp"

namespace semibandit {

// State of the hybrid FTRL learner between rounds: p is always the exact
// minimizer of the cumulative estimated loss plus the regularizers, strictly
// interior thanks to the barrier.
struct FtrlState {
  std::vector<double> cumulative_loss;
  SimplexWeights p = SimplexWeights::uniform(1);
  double eta = 0.0;
  double nu = 0.0;
  int round = 0;

  static FtrlState init(std::size_t n_policies, double eta, double nu);
};

// Folds one loss estimate into the state and re-solves for the minimizer.
void ftrl_step(FtrlState& state, const std::vector<double>& loss_estimate);

// Exact minimizer over the simplex of
//   p . C + (1/eta) sum_i p_i log p_i + (1/nu) Phi(p),
// where Phi(p) = -sum_i log p_i is the convex log-barrier. Interior solution
// with KKT residual at most 1e-8; throws on non-convergence.
SimplexWeights ftrl_solve(const std::vector<double>& cumulative_loss,
                          double eta, double nu);

// The FTRL objective itself (for sanity checks and test oracles).
double ftrl_objective(const std::vector<double>& cumulative_loss, double eta,
                      double nu, const SimplexWeights& p);

// Importance-weighted loss estimator:
//   chat(i) = sum_{y in pi_i(x)} loss(y) 1{y in a} / Q(y),
// with Q the unsmoothed marginal of p. Observed losses are the pairs
// (y, loss) for exactly the played subset, losses in [-1, 0].
std::vector<double> loss_estimate(
    const SimplexWeights& p, const PolicyClass& cls, Context x,
    const ActionSubset& a,
    const std::vector<std::pair<int, double>>& observed_losses);

// Sequential source of adversarial rounds. The harness knows the full loss
// vector; the learner is shown only the played coordinates.
class LossStream {
 public:
  virtual ~LossStream() = default;
  virtual bool next(Context& x, std::vector<double>& losses) = 0;
};

// I.i.d. rounds from an instance, with losses = -rewards.
class InstanceLossStream : public LossStream {
 public:
  InstanceLossStream(const Instance& inst, Rng rng) : inst_(inst), rng_(rng) {}
  bool next(Context& x, std::vector<double>& losses) override;

 private:
  const Instance& inst_;
  Rng rng_;
};

// Precomputed oblivious sequence.
class FixedLossStream : public LossStream {
 public:
  explicit FixedLossStream(std::vector<std::pair<Context, std::vector<double>>> rounds)
      : rounds_(std::move(rounds)) {}
  bool next(Context& x, std::vector<double>& losses) override;

 private:
  std::vector<std::pair<Context, std::vector<double>>> rounds_;
  std::size_t pos_ = 0;
};

struct RegretTraceRow {
  int t;
  double instantaneous_loss;  // learner's realized loss this round
  double cumulative_regret;   // against the best fixed policy on the prefix
  double min_p;               // min_i p_t(i) before the update
  double max_ratio;           // max_i p_{t+1}(i) / p_t(i)
};

struct RegretResult {
  std::vector<ActionSubset> actions;
  std::vector<RegretTraceRow> trace;
  double terminal_regret = 0.0;
};

// Hybrid negative-entropy + log-barrier FTRL over the policy simplex with
// importance-weighted loss estimates. Theorem-recommended parameters are
// nu = 1/16 and eta = sqrt(log|Pi| / (m s T)).
RegretResult exp4_comb_sparse(LossStream& env, const PolicyClass& cls, int horizon,
                              double eta, double nu, Rng& rng);

// Identical loop with the barrier term removed: pure entropy FTRL, i.e.
// exponential weights with a closed-form update.
RegretResult exp4_entropy_baseline(LossStream& env, const PolicyClass& cls,
                                   int horizon, double eta, Rng& rng);

// Closed-form entropy-FTRL weights: softmax of -eta * C.
std::vector<double> entropy_weights(const std::vector<double>& cumulative_loss,
                                    double eta);

// eta = sqrt(log|Pi| / (m s T)) from the regret theorem.
double theorem_eta(std::size_t n_policies, int subset_size, double sparsity,
                   int horizon);

// Classical non-sparse tuning for the entropy baseline:
// eta = sqrt(log|Pi| / (m K T)).
double baseline_eta(std::size_t n_policies, int subset_size, int capacity,
                    int horizon);

}  // namespace semibandit
