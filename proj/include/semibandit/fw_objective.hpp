#pragma once

#include <cstddef>
#include <vector>

#include "semibandit/core.hpp"
#include "semibandit/environments.hpp"
#include "semibandit/oracle.hpp"

namespace semibandit {

// One exploration round: the context, the played subset, and the rewards
// observed on exactly that subset.
struct Phase1Record {
  Phase1Record(Context x, ActionSubset a, SemiBanditFeedback observed);

  Context x;
  ActionSubset a;
  SemiBanditFeedback observed;
};

// -(K/m) sum_{y in a} r(y) log Q^gamma_p(y|x) for a single record.
double stochastic_objective(const SimplexWeights& p, const Phase1Record& rec,
                            const PolicyClass& cls, double gamma);

// Arithmetic mean of stochastic_objective over a nonempty batch.
double empirical_objective(const SimplexWeights& p,
                           const std::vector<Phase1Record>& batch,
                           const PolicyClass& cls, double gamma);

// Batch-mean gradient; coordinate j is
// -(1/N)(1-gamma)(K/m) sum_i sum_{y in a_i} 1{y in pi_j(x_i)} r_i(y) / Q^gamma(y|x_i).
std::vector<double> empirical_gradient(const SimplexWeights& p,
                                       const std::vector<Phase1Record>& batch,
                                       const PolicyClass& cls, double gamma);

struct FwTraceRow {
  int iteration;
  double objective;
  double gap_proxy;  // g_t . (p_t - q_t), certifies suboptimality at p_t
};

struct FwResult {
  SimplexWeights p_hat = SimplexWeights::uniform(1);
  std::vector<FwTraceRow> trace;
  std::size_t oracle_calls = 0;      // one linear-minimization call per iteration
  double final_objective = 0.0;      // objective at p_hat
  double final_duality_gap = 0.0;    // certificate at p_hat (not an oracle call)
};

struct FwOptions {
  // Stop early once the duality gap drops to this level; 0 disables early
  // stopping (the production setting: exactly `iterations` steps).
  double gap_stop = 0.0;
  // Importance-weight factor in front of the objective; 0 means the default
  // K/m. The single-label specialization passes 1.
  double importance_scale = 0.0;
};

// Frank-Wolfe with step sizes 2/(2+t) on the empirical objective of a fixed
// batch, started from p1. Returns p_{T+1} and the per-iteration trace.
FwResult frank_wolfe(const std::vector<Phase1Record>& batch,
                     const PolicyClass& cls, double gamma, int iterations,
                     const SimplexWeights& p1, const FwOptions& opts = {});

struct PopulationEval {
  double value;
  std::vector<double> gradient;
};

// Closed-form population objective and gradient for a finite-support
// instance: F(p) = E[-sum_y r(y) log Q^gamma_p(y|x)].
PopulationEval exact_population_objective(const SimplexWeights& p,
                                          const Instance& inst,
                                          const PolicyClass& cls, double gamma);

// Frank-Wolfe on the exact population objective; used for reference solves.
FwResult frank_wolfe_population(const Instance& inst, const PolicyClass& cls,
                                double gamma, int iterations,
                                const SimplexWeights& p1, double gap_stop = 0.0);

// Translation of a batch at iterate p into the reweighted dataset whose ERM
// argmax coincides with the linear-minimization step on the gradient:
// rhat_i(y) = (1/N)(1-gamma)(K/m) 1{y in a_i} r_i(y) / Q^gamma_p(y|x_i).
std::vector<WeightedExample> phase1_weighted_dataset(
    const std::vector<Phase1Record>& batch, const PolicyClass& cls,
    const SimplexWeights& p, double gamma);

}  // namespace semibandit
