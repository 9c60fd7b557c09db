#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "semibandit/environments.hpp"
#include "semibandit/pac.hpp"
#include "semibandit/regret.hpp"

namespace semibandit {

// Harness failures carry a machine-readable code: "config" maps to exit
// status 2, everything else to 3.
class HarnessError : public std::runtime_error {
 public:
  HarnessError(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

class ConfigError : public HarnessError {
 public:
  explicit ConfigError(const std::string& message) : HarnessError("config", message) {}
};

class IoError : public HarnessError {
 public:
  explicit IoError(const std::string& message) : HarnessError("io", message) {}
};

class AlgorithmError : public HarnessError {
 public:
  explicit AlgorithmError(const std::string& message)
      : HarnessError("algorithm", message) {}
};

enum class ExperimentKind {
  kPac,
  kPacSingleLabel,
  kRegret,
  kRegretBaseline,
  kLowerBoundSanity,
  kDiagnose,
};

struct GeneratorSpec {
  std::string type;  // "random" | "lower-bound" | "list"
  int capacity = 0;
  int subset_size = 0;
  double sparsity = 0.0;
  int n_contexts = 1;
  int n_policies = 1;
  double eps = 0.0;               // lower-bound only
  std::vector<int> good_set;      // lower-bound only; default {0..m-1}
  std::uint64_t gen_seed = 0;
};

// Matched family for regret experiments: deterministic rewards of value
// s/support on a seeded support of size min(K, floor(s)+1) per context;
// policy 0 plays on-support, the others play off-support where possible.
struct RegretFamilySpec {
  int capacity = 0;
  int subset_size = 0;
  int n_contexts = 1;
  int n_policies = 2;
  std::uint64_t gen_seed = 0;
};

struct RegretParams {
  int horizon = 0;
  double eta = 0.0;  // <= 0 selects the theorem tuning
  double nu = 1.0 / 16.0;
  bool write_trace = false;
};

struct LowerBoundGridSpec {
  int capacity = 0;
  int subset_size = 0;
  double sparsity = 0.0;
  double eps = 0.0;
};

struct LowerBoundParams {
  std::vector<LowerBoundGridSpec> specs;
  int violation_horizon = 1000;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kPac;
  int trials = 1;
  std::uint64_t seed = 0;
  std::string out_dir = ".";

  std::string instance_path;  // empty when generated
  std::string policies_path;
  std::optional<GeneratorSpec> generator;

  PacConfig pac;
  RegretParams regret;
  std::optional<RegretFamilySpec> regret_family;
  std::vector<double> s_values;  // nonempty: sparsity sweep over the family
  std::string loss_file;         // optional precomputed loss sequence
  LowerBoundParams lower_bound;

  nlohmann::json raw;  // echoed into the summary for provenance
};

ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_config(const nlohmann::json& j);

struct AggregateRow {
  std::string group;
  std::string metric;
  double mean = 0.0;
  double se = 0.0;
  std::size_t count = 0;
};

// Per-trial rows plus per-metric aggregates, recomputable from the rows.
struct SweepResult {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> group_columns;  // empty: aggregate over all rows
  std::vector<std::string> metric_columns;
  std::vector<AggregateRow> aggregates;
};

SweepResult make_sweep_result(std::vector<std::string> columns,
                              std::vector<std::vector<double>> rows,
                              std::vector<std::string> group_columns,
                              std::vector<std::string> metric_columns);

// Writes rows.csv and summary.json under out_dir, re-deriving the aggregates
// from the rows and failing loudly on any mismatch.
void write_sweep_result(const SweepResult& result, const std::string& out_dir,
                        const nlohmann::json& config_echo);

// Dispatches to the matching driver and writes outputs into cfg.out_dir
// (overridable by the SEMIBANDIT_OUT environment variable).
SweepResult run_experiment(const ExperimentConfig& cfg);

// Terminal regret of both algorithms per sparsity value on matched family
// instances, aggregated over seeds.
SweepResult sparsity_sweep(const RegretFamilySpec& family,
                           const std::vector<double>& s_values,
                           const RegretParams& params, int trials,
                           std::uint64_t seed);

// Per spec: total-mean identity, sparsity-violation frequency against the
// T e^{-s/4} bound, and the success curve of a naive uniform-sampling
// identifier as the horizon grows through s m / eps^2.
SweepResult lower_bound_sanity(const LowerBoundParams& params, int trials,
                               std::uint64_t seed);

// Exact gaps, smoothed marginals and estimator-weight audits at the uniform
// policy distribution.
void diagnose(const Instance& inst, const PolicyClass& cls, std::ostream& out);

std::pair<Instance, PolicyClass> regret_family_instance(
    const RegretFamilySpec& family, double sparsity);

// Materializes a generator spec into an instance and policy class; shared by
// config-driven experiments and the `gen` CLI subcommand.
std::pair<Instance, PolicyClass> realize_generator_spec(const GeneratorSpec& gen);

// Multiplier horizons {1/4, 1, 10, 100} x s m / eps^2 used by the
// lower-bound identification curve.
extern const std::vector<double> kIdentificationHorizonFactors;

}  // namespace semibandit
