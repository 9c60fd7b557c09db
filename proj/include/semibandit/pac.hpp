#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "semibandit/core.hpp"
#include "semibandit/environments.hpp"
#include "semibandit/fw_objective.hpp"
#include "semibandit/rng.hpp"

namespace semibandit {

// Sequential source of environment rounds. next() returns false once the
// stream is exhausted; generative streams never exhaust.
class RoundStream {
 public:
  virtual ~RoundStream() = default;
  virtual bool next(Context& x, RewardVector& r) = 0;
};

// Infinite i.i.d. stream backed by a finite-support instance.
class InstanceStream : public RoundStream {
 public:
  InstanceStream(const Instance& inst, Rng rng) : inst_(inst), rng_(rng) {}
  bool next(Context& x, RewardVector& r) override;

 private:
  const Instance& inst_;
  Rng rng_;
};

// Finite replay of a fixed sequence; used to exercise exhaustion handling.
class FixedSequenceStream : public RoundStream {
 public:
  explicit FixedSequenceStream(std::vector<std::pair<Context, RewardVector>> rounds)
      : rounds_(std::move(rounds)) {}
  bool next(Context& x, RewardVector& r) override;

 private:
  std::vector<std::pair<Context, RewardVector>> rounds_;
  std::size_t pos_ = 0;
};

struct PacConfig {
  std::int64_t n1 = 0;
  std::int64_t n2 = 0;
  int fw_iterations = 0;
  double gamma = 0.5;  // must lie in (0, 1/2]
  std::uint64_t seed = 0;
  bool keep_fw_trace = false;  // diagnostics: retain the phase-1 FW trace

  void validate() const;
};

// Theorem-shaped parameter preset: applies the headline exponents with a
// user constant c, since the hidden constants are not reachable at desk
// scale. n1 = c K^9/m^8 L, n2 = c (K/(m eps) + s m/eps^2) L, T = c (K/m)^5
// with L = log(|Pi|/delta).
PacConfig theorem_shaped_config(int capacity, int subset_size, double sparsity,
                                std::size_t n_policies, double eps, double delta,
                                double c, std::uint64_t seed);

// Preset for the single-label specialization, where the exponents drop to
// n1 = c K^7 L, n2 = c (K/eps + 1/eps^2) L, T = c K^4.
PacConfig single_label_theorem_config(int capacity, std::size_t n_hypotheses,
                                      double eps, double delta, double c,
                                      std::uint64_t seed);

struct Phase1Result {
  SimplexWeights p_hat = SimplexWeights::uniform(1);
  std::vector<Phase1Record> records;
  std::size_t oracle_calls = 0;
  bool uninformative = false;  // no positive reward observed in phase 1
  std::vector<FwTraceRow> fw_trace;
};

Phase1Result run_phase1(RoundStream& env, const PolicyClass& cls,
                        const PacConfig& cfg, Rng& rng);

// Per-policy summary of the phase-2 importance-weighted estimators R_i(pi).
struct EstimatorSummary {
  std::vector<double> mean;
  std::vector<double> variance;  // population-style (divide by N)
};

struct Phase2Result {
  std::size_t out_policy = 0;
  EstimatorSummary summary;
};

Phase2Result run_phase2(RoundStream& env, const PolicyClass& cls,
                        const SimplexWeights& p_hat, const PacConfig& cfg,
                        Rng& rng);

struct PacReport {
  std::size_t out_policy = 0;
  double gap = 0.0;            // exact suboptimality of the output policy
  double grad_inf_norm = 0.0;  // exact ||grad F(p_hat)||_inf
  std::vector<double> variance_audit;  // empirical Var[R_i(pi)] per policy
  std::int64_t samples_used = 0;
  std::int64_t erm_calls = 0;
  bool uninformative_phase1 = false;
  SimplexWeights p_hat = SimplexWeights::uniform(1);
  std::vector<FwTraceRow> fw_trace;  // kept when cfg.keep_fw_trace
};

// The end-to-end two-phase PAC algorithm with exact-oracle diagnostics.
PacReport pac_comband(const Instance& inst, const PolicyClass& cls,
                      const PacConfig& cfg);

// Exact per-policy audit of the phase-2 second-moment bound:
// E[sum_{y in pi(x)} mean(y) / Q^gamma_{p}(y|x)] for each policy.
std::vector<double> phase2_weight_audit(const Instance& inst,
                                        const PolicyClass& cls,
                                        const SimplexWeights& p, double gamma);

// Sequential source of single-label classification rounds.
class LabelStream {
 public:
  virtual ~LabelStream() = default;
  virtual bool next(Context& x, int& label) = 0;
};

// Stream backed by a list-classification instance whose label sets are all
// singletons.
class SingleLabelInstanceStream : public LabelStream {
 public:
  SingleLabelInstanceStream(const ListClassificationInstance& lci, Rng rng);
  bool next(Context& x, int& label) override;

 private:
  std::vector<double> probs_;
  std::vector<int> labels_;
  Rng rng_;
};

struct SingleLabelReport {
  std::size_t out_hypothesis = 0;
  std::int64_t matched = 0;  // |S|: phase-1 rounds whose guess hit the label
  std::int64_t samples_used = 0;
  std::int64_t erm_calls = 0;
  bool uninformative_phase1 = false;
  SimplexWeights p_hat = SimplexWeights::uniform(1);
};

// Single-label specialization (m = s = 1, zero-one rewards): phase 1 guesses
// uniform labels and keeps the matched pairs, FW runs on the matched dataset
// without the K/m importance factor, phase 2 is the generic estimator phase.
SingleLabelReport pac_single_label(LabelStream& env,
                                   const PolicyClass& hypotheses,
                                   const PacConfig& cfg);

}  // namespace semibandit
