#include "semibandit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "semibandit/io.hpp"
#include "semibandit/oracle.hpp"

namespace semibandit {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<double> kIdentificationHorizonFactors = {0.25, 1.0, 10.0, 100.0};

namespace {

ExperimentKind parse_kind(const std::string& kind) {
  if (kind == "pac") return ExperimentKind::kPac;
  if (kind == "pac-single-label") return ExperimentKind::kPacSingleLabel;
  if (kind == "regret") return ExperimentKind::kRegret;
  if (kind == "regret-baseline") return ExperimentKind::kRegretBaseline;
  if (kind == "lower-bound-sanity") return ExperimentKind::kLowerBoundSanity;
  if (kind == "diagnose") return ExperimentKind::kDiagnose;
  throw ConfigError("unknown experiment kind: " + kind);
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) throw ConfigError(what + " does not exist: " + path);
}

// Per-trial seeds are kept below 2^53 so the seed column of the emitted CSV
// holds them exactly and a single trial can be reproduced from the row.
std::uint64_t trial_seed(std::uint64_t master, std::uint64_t index) {
  return derive_seed(master, index) & ((1ULL << 53) - 1);
}

// Runs fn(0..trials-1) on a worker pool; results must be written into
// per-trial slots so the outcome is independent of the thread count.
void parallel_trials(int trials, const std::function<void(int)>& fn) {
  const int workers = std::min<int>(
      trials, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (int i = 0; i < trials; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto work = [&] {
    while (!failed.load()) {
      const int i = next.fetch_add(1);
      if (i >= trials) break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

GeneratorSpec parse_generator(const json& j) {
  GeneratorSpec gen;
  gen.type = j.at("type").get<std::string>();
  if (gen.type != "random" && gen.type != "lower-bound" && gen.type != "list")
    throw ConfigError("unknown generator type: " + gen.type);
  gen.capacity = j.at("K").get<int>();
  gen.subset_size = j.at("m").get<int>();
  gen.sparsity = j.at("s").get<double>();
  gen.n_contexts = j.value("contexts", 1);
  gen.n_policies = j.value("policies", 1);
  gen.eps = j.value("eps", 0.0);
  if (j.contains("good_set")) gen.good_set = j.at("good_set").get<std::vector<int>>();
  gen.gen_seed = j.value("gen_seed", 0ULL);
  return gen;
}

std::pair<Instance, PolicyClass> load_or_generate(const ExperimentConfig& cfg) {
  if (cfg.generator) return realize_generator_spec(*cfg.generator);
  if (cfg.instance_path.empty() || cfg.policies_path.empty())
    throw ConfigError("experiment needs instance and policies files or a generator");
  try {
    return {load_instance(cfg.instance_path), load_policy_class(cfg.policies_path)};
  } catch (const std::runtime_error& e) {
    throw IoError(e.what());
  }
}

std::string group_label(const SweepResult& result, const std::vector<double>& row) {
  std::string label;
  for (const std::string& col : result.group_columns) {
    const auto it = std::find(result.columns.begin(), result.columns.end(), col);
    const std::size_t idx =
        static_cast<std::size_t>(std::distance(result.columns.begin(), it));
    if (!label.empty()) label += ",";
    label += col + "=" + format_double(row[idx]);
  }
  return label;
}

std::vector<std::pair<Context, std::vector<double>>> load_loss_sequence(
    const std::string& path, int capacity) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open loss file: " + path);
  std::vector<std::pair<Context, std::vector<double>>> rounds;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) values.push_back(std::stod(cell));
    if (static_cast<int>(values.size()) != capacity + 1)
      throw IoError("loss file row has wrong width: " + path);
    Context x{static_cast<int>(values.front())};
    rounds.emplace_back(x, std::vector<double>(values.begin() + 1, values.end()));
  }
  return rounds;
}

void write_regret_trace(const RegretResult& run, const std::string& path) {
  CsvWriter csv(path, {"t", "instantaneous_loss", "cumulative_regret", "min_p",
                       "max_ratio"});
  for (const RegretTraceRow& row : run.trace)
    csv.add_row(std::vector<double>{static_cast<double>(row.t),
                                    row.instantaneous_loss, row.cumulative_regret,
                                    row.min_p, row.max_ratio});
  csv.write();
}

void write_fw_trace(const std::vector<FwTraceRow>& trace, const std::string& path) {
  CsvWriter csv(path, {"iteration", "objective", "duality_gap_proxy"});
  for (const FwTraceRow& row : trace)
    csv.add_row(std::vector<double>{static_cast<double>(row.iteration),
                                    row.objective, row.gap_proxy});
  csv.write();
}

struct RegretTrialOutcome {
  double terminal = 0.0;
  double at_tenth = 0.0;
  double min_p = 1.0;
  double max_ratio = 0.0;
  RegretResult run;
};

RegretTrialOutcome regret_trial(const Instance& inst, const PolicyClass& cls,
                                const RegretParams& params, bool baseline,
                                std::uint64_t trial_seed, bool keep_run,
                                const std::string& loss_file) {
  Rng master(trial_seed);
  Rng env_rng = master.split(0);
  Rng alg_rng = master.split(1);
  double eta = params.eta;
  if (eta <= 0.0) {
    eta = baseline ? baseline_eta(cls.size(), cls.subset_size(), cls.capacity(),
                                  params.horizon)
                   : theorem_eta(cls.size(), cls.subset_size(), inst.sparsity(),
                                 params.horizon);
    if (!(eta > 0.0)) eta = 1.0;  // singleton class: any step size works
  }
  RegretResult run;
  if (!loss_file.empty()) {
    FixedLossStream stream(load_loss_sequence(loss_file, cls.capacity()));
    run = baseline
              ? exp4_entropy_baseline(stream, cls, params.horizon, eta, alg_rng)
              : exp4_comb_sparse(stream, cls, params.horizon, eta, params.nu,
                                 alg_rng);
  } else {
    InstanceLossStream stream(inst, env_rng);
    run = baseline
              ? exp4_entropy_baseline(stream, cls, params.horizon, eta, alg_rng)
              : exp4_comb_sparse(stream, cls, params.horizon, eta, params.nu,
                                 alg_rng);
  }
  RegretTrialOutcome outcome;
  outcome.terminal = run.terminal_regret;
  const std::size_t tenth = run.trace.size() / 10;
  outcome.at_tenth = tenth > 0 ? run.trace[tenth - 1].cumulative_regret : 0.0;
  for (const RegretTraceRow& row : run.trace) {
    outcome.min_p = std::min(outcome.min_p, row.min_p);
    outcome.max_ratio = std::max(outcome.max_ratio, row.max_ratio);
  }
  if (keep_run) outcome.run = std::move(run);
  return outcome;
}

SweepResult run_pac_experiment(const ExperimentConfig& cfg) {
  auto [inst, cls] = load_or_generate(cfg);
  const std::vector<std::string> columns = {
      "seed", "N1", "N2", "T", "gamma", "gap",
      "grad_inf_norm", "max_policy_variance", "erm_calls"};
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(cfg.trials));
  std::vector<PacReport> reports(static_cast<std::size_t>(cfg.trials));
  parallel_trials(cfg.trials, [&](int trial) {
    PacConfig trial_cfg = cfg.pac;
    trial_cfg.seed = trial_seed(cfg.seed, static_cast<std::uint64_t>(trial));
    trial_cfg.keep_fw_trace = cfg.pac.keep_fw_trace && trial == 0;
    PacReport report = pac_comband(inst, cls, trial_cfg);
    double max_var = 0.0;
    for (double v : report.variance_audit) max_var = std::max(max_var, v);
    rows[static_cast<std::size_t>(trial)] = {
        static_cast<double>(trial_cfg.seed),
        static_cast<double>(trial_cfg.n1),
        static_cast<double>(trial_cfg.n2),
        static_cast<double>(trial_cfg.fw_iterations),
        trial_cfg.gamma,
        report.gap,
        report.grad_inf_norm,
        max_var,
        static_cast<double>(report.erm_calls)};
    reports[static_cast<std::size_t>(trial)] = std::move(report);
  });
  SweepResult result = make_sweep_result(
      columns, std::move(rows), {},
      {"gap", "grad_inf_norm", "max_policy_variance", "erm_calls"});
  if (cfg.pac.keep_fw_trace && !reports.empty()) {
    if (!reports[0].fw_trace.empty())
      write_fw_trace(reports[0].fw_trace,
                     (fs::path(cfg.out_dir) / "fw_trace_trial0.csv").string());
    save_json(pac_report_to_json(reports[0]),
              (fs::path(cfg.out_dir) / "report_trial0.json").string());
  }
  return result;
}

// Interprets an instance whose laws are one-hot fixed rewards as a
// single-label classification problem.
ListClassificationInstance single_label_view(const Instance& inst) {
  ListClassificationInstance lci;
  lci.capacity = inst.capacity();
  lci.subset_size = inst.subset_size();
  lci.sparsity = inst.sparsity();
  for (int x = 0; x < inst.num_contexts(); ++x) {
    const RewardLaw& law = inst.law(x);
    if (law.type != RewardLawType::kFixed)
      throw ConfigError("single-label experiment needs deterministic rewards");
    std::vector<int> labels;
    for (int y = 0; y < inst.capacity(); ++y) {
      const double v = law.values[static_cast<std::size_t>(y)];
      if (v == 1.0)
        labels.push_back(y);
      else if (v != 0.0)
        throw ConfigError("single-label experiment needs zero-one rewards");
    }
    if (labels.size() != 1)
      throw ConfigError("single-label experiment needs exactly one label per context");
    lci.context_probs.push_back(inst.context_prob(x));
    lci.label_sets.push_back(std::move(labels));
  }
  return lci;
}

SweepResult run_single_label_experiment(const ExperimentConfig& cfg) {
  auto [inst, cls] = load_or_generate(cfg);
  if (cls.subset_size() != 1)
    throw ConfigError("single-label experiment needs a hypothesis class with m = 1");
  const ListClassificationInstance lci = single_label_view(inst);
  const std::vector<std::string> columns = {
      "seed", "N1", "N2", "T", "gamma", "matched", "gap",
      "out_hypothesis", "erm_calls"};
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(cfg.trials));
  parallel_trials(cfg.trials, [&](int trial) {
    PacConfig trial_cfg = cfg.pac;
    trial_cfg.seed = trial_seed(cfg.seed, static_cast<std::uint64_t>(trial));
    SingleLabelInstanceStream stream(lci, Rng(trial_cfg.seed).split(100));
    SingleLabelReport report = pac_single_label(stream, cls, trial_cfg);
    const double gap = exact_gap_to_best(inst, cls, cls[report.out_hypothesis]);
    rows[static_cast<std::size_t>(trial)] = {
        static_cast<double>(trial_cfg.seed),
        static_cast<double>(trial_cfg.n1),
        static_cast<double>(trial_cfg.n2),
        static_cast<double>(trial_cfg.fw_iterations),
        trial_cfg.gamma,
        static_cast<double>(report.matched),
        gap,
        static_cast<double>(report.out_hypothesis),
        static_cast<double>(report.erm_calls)};
  });
  return make_sweep_result(columns, std::move(rows), {}, {"matched", "gap"});
}

SweepResult run_regret_experiment(const ExperimentConfig& cfg, bool baseline) {
  if (!cfg.s_values.empty()) {
    if (!cfg.regret_family)
      throw ConfigError("sparsity sweep requires a regret family spec");
    return sparsity_sweep(*cfg.regret_family, cfg.s_values, cfg.regret,
                          cfg.trials, cfg.seed);
  }
  if (cfg.regret_family)
    throw ConfigError("a regret family spec requires s_values");
  const auto loaded = load_or_generate(cfg);
  const Instance& inst = loaded.first;
  const PolicyClass& cls = loaded.second;
  const std::vector<std::string> columns = {
      "seed", "s", "algo", "terminal_regret", "regret_at_tenth", "min_p",
      "max_ratio"};
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(cfg.trials));
  std::vector<RegretResult> kept(static_cast<std::size_t>(cfg.trials));
  parallel_trials(cfg.trials, [&](int trial) {
    const std::uint64_t seed_for_trial =
        trial_seed(cfg.seed, static_cast<std::uint64_t>(trial));
    const bool keep = cfg.regret.write_trace && trial == 0;
    RegretTrialOutcome out = regret_trial(inst, cls, cfg.regret, baseline,
                                          seed_for_trial, keep, cfg.loss_file);
    rows[static_cast<std::size_t>(trial)] = {
        static_cast<double>(seed_for_trial), inst.sparsity(),
        baseline ? 1.0 : 0.0,           out.terminal,
        out.at_tenth,                   out.min_p,
        out.max_ratio};
    if (keep) kept[static_cast<std::size_t>(trial)] = std::move(out.run);
  });
  if (cfg.regret.write_trace && !kept.empty() && !kept[0].trace.empty())
    write_regret_trace(kept[0],
                       (fs::path(cfg.out_dir) / "regret_trace_trial0.csv").string());
  return make_sweep_result(columns, std::move(rows), {},
                           {"terminal_regret", "regret_at_tenth", "max_ratio"});
}

SweepResult run_lower_bound_experiment(const ExperimentConfig& cfg) {
  return lower_bound_sanity(cfg.lower_bound, cfg.trials, cfg.seed);
}

}  // namespace

std::pair<Instance, PolicyClass> realize_generator_spec(const GeneratorSpec& gen) {
  Rng rng(gen.gen_seed);
  if (gen.type == "random") {
    return random_sparse_instance(gen.capacity, gen.subset_size, gen.sparsity,
                                  gen.n_contexts, gen.n_policies, rng);
  }
  if (gen.type == "lower-bound") {
    std::vector<int> good = gen.good_set;
    if (good.empty())
      for (int y = 0; y < gen.subset_size; ++y) good.push_back(y);
    LowerBoundSpec spec{gen.capacity, gen.subset_size, gen.sparsity, gen.eps,
                        ActionSubset(good, gen.capacity)};
    Instance inst = lower_bound_instance(spec);
    // A canonical class: the good subset first, then seeded random subsets.
    std::vector<Policy> policies;
    policies.emplace_back(std::vector<ActionSubset>{spec.good_set});
    for (int j = 1; j < gen.n_policies; ++j)
      policies.emplace_back(std::vector<ActionSubset>{
          sample_uniform_action(gen.capacity, gen.subset_size, rng)});
    PolicyClass cls(std::move(policies), gen.capacity, gen.subset_size);
    return {std::move(inst), std::move(cls)};
  }
  // "list": seeded list-classification instance with |Y| = floor(s) labels
  // per context, converted to indicator rewards. Hypothesis 0 is consistent
  // with the labels where m allows it.
  const int labels_per_context =
      std::max(1, std::min(gen.capacity, static_cast<int>(gen.sparsity)));
  ListClassificationInstance lci;
  lci.capacity = gen.capacity;
  lci.subset_size = gen.subset_size;
  lci.sparsity = gen.sparsity;
  lci.context_probs.assign(static_cast<std::size_t>(gen.n_contexts),
                           1.0 / gen.n_contexts);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < lci.context_probs.size(); ++i)
    acc += lci.context_probs[i];
  lci.context_probs.back() = 1.0 - acc;
  for (int x = 0; x < gen.n_contexts; ++x)
    lci.label_sets.push_back(
        sample_uniform_action(gen.capacity, labels_per_context, rng).members());
  Instance inst = list_instance_to_rewards(lci);
  std::vector<Policy> policies;
  for (int j = 0; j < gen.n_policies; ++j) {
    std::vector<ActionSubset> table;
    for (int x = 0; x < gen.n_contexts; ++x) {
      if (j == 0) {
        // Cover the true labels, padding with the smallest unused actions.
        std::vector<int> members(lci.label_sets[static_cast<std::size_t>(x)]);
        if (static_cast<int>(members.size()) > gen.subset_size)
          members.resize(static_cast<std::size_t>(gen.subset_size));
        for (int y = 0; static_cast<int>(members.size()) < gen.subset_size; ++y)
          if (std::find(members.begin(), members.end(), y) == members.end())
            members.push_back(y);
        table.emplace_back(std::move(members), gen.capacity);
      } else {
        table.push_back(
            sample_uniform_action(gen.capacity, gen.subset_size, rng));
      }
    }
    policies.emplace_back(std::move(table));
  }
  PolicyClass cls(std::move(policies), gen.capacity, gen.subset_size);
  return {std::move(inst), std::move(cls)};
}

ExperimentConfig load_experiment_config(const std::string& path) {
  require_file(path, "config file");
  json j;
  try {
    j = load_json(path);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse failure: ") + e.what());
  }
  return parse_experiment_config(j);
}

ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  ExperimentConfig cfg;
  try {
    cfg.raw = j;
    cfg.kind = parse_kind(j.at("kind").get<std::string>());
    cfg.trials = j.value("trials", 1);
    if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
    cfg.seed = j.value("seed", 0ULL);
    cfg.out_dir = j.value("out_dir", std::string("."));
    if (j.contains("instance")) {
      cfg.instance_path = j.at("instance").get<std::string>();
      require_file(cfg.instance_path, "instance file");
    }
    if (j.contains("policies")) {
      cfg.policies_path = j.at("policies").get<std::string>();
      require_file(cfg.policies_path, "policies file");
    }
    if (j.contains("generator")) cfg.generator = parse_generator(j.at("generator"));
    if (j.contains("pac")) {
      const json& p = j.at("pac");
      if (!p.contains("preset")) {
        cfg.pac.n1 = p.at("n1").get<std::int64_t>();
        cfg.pac.n2 = p.at("n2").get<std::int64_t>();
        cfg.pac.fw_iterations = p.at("fw_iterations").get<int>();
        cfg.pac.gamma = p.value("gamma", 0.5);
      }
      cfg.pac.keep_fw_trace = p.value("write_trace", false);
    }
    if (j.contains("regret")) {
      const json& r = j.at("regret");
      cfg.regret.horizon = r.at("horizon").get<int>();
      cfg.regret.eta = r.value("eta", 0.0);
      cfg.regret.nu = r.value("nu", 1.0 / 16.0);
      cfg.regret.write_trace = r.value("write_trace", false);
      if (r.contains("s_values")) cfg.s_values = r.at("s_values").get<std::vector<double>>();
      if (r.contains("family")) {
        const json& f = r.at("family");
        RegretFamilySpec family;
        family.capacity = f.at("K").get<int>();
        family.subset_size = f.at("m").get<int>();
        family.n_contexts = f.value("contexts", 1);
        family.n_policies = f.value("policies", 2);
        family.gen_seed = f.value("gen_seed", 0ULL);
        cfg.regret_family = family;
      }
      if (r.contains("loss_file")) {
        cfg.loss_file = r.at("loss_file").get<std::string>();
        require_file(cfg.loss_file, "loss file");
      }
    }
    if (j.contains("lower_bound")) {
      const json& lb = j.at("lower_bound");
      for (const json& s : lb.at("specs")) {
        LowerBoundGridSpec spec;
        spec.capacity = s.at("K").get<int>();
        spec.subset_size = s.at("m").get<int>();
        spec.sparsity = s.at("s").get<double>();
        spec.eps = s.value("eps", 0.0);
        cfg.lower_bound.specs.push_back(spec);
      }
      cfg.lower_bound.violation_horizon = lb.value("violation_horizon", 1000);
    }
  } catch (const HarnessError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse failure: ") + e.what());
  }
  // Resolve a theorem-shaped preset against the (possibly generated) class.
  if (j.contains("pac") && j.at("pac").contains("preset")) {
    const json& preset = j.at("pac").at("preset");
    const bool keep_trace = cfg.pac.keep_fw_trace;
    auto [inst, cls] = load_or_generate(cfg);
    const double eps = preset.at("eps").get<double>();
    const double delta = preset.at("delta").get<double>();
    const double c = preset.at("c").get<double>();
    cfg.pac = cfg.kind == ExperimentKind::kPacSingleLabel
                  ? single_label_theorem_config(cls.capacity(), cls.size(), eps,
                                                delta, c, cfg.seed)
                  : theorem_shaped_config(cls.capacity(), cls.subset_size(),
                                          inst.sparsity(), cls.size(), eps,
                                          delta, c, cfg.seed);
    cfg.pac.keep_fw_trace = keep_trace;
  }
  return cfg;
}

SweepResult make_sweep_result(std::vector<std::string> columns,
                              std::vector<std::vector<double>> rows,
                              std::vector<std::string> group_columns,
                              std::vector<std::string> metric_columns) {
  SweepResult result;
  result.columns = std::move(columns);
  result.rows = std::move(rows);
  result.group_columns = std::move(group_columns);
  result.metric_columns = std::move(metric_columns);
  for (const std::vector<double>& row : result.rows)
    if (row.size() != result.columns.size())
      throw AlgorithmError("sweep row width differs from column header");

  std::vector<std::string> labels;
  labels.reserve(result.rows.size());
  std::vector<std::string> order;  // first-appearance group order
  for (const std::vector<double>& row : result.rows) {
    labels.push_back(group_label(result, row));
    if (std::find(order.begin(), order.end(), labels.back()) == order.end())
      order.push_back(labels.back());
  }
  for (const std::string& group : order) {
    for (const std::string& metric : result.metric_columns) {
      const auto it =
          std::find(result.columns.begin(), result.columns.end(), metric);
      if (it == result.columns.end())
        throw AlgorithmError("metric column missing from rows: " + metric);
      const std::size_t idx =
          static_cast<std::size_t>(std::distance(result.columns.begin(), it));
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t i = 0; i < result.rows.size(); ++i) {
        if (labels[i] != group) continue;
        sum += result.rows[i][idx];
        ++count;
      }
      const double mean = sum / static_cast<double>(count);
      double ss = 0.0;
      for (std::size_t i = 0; i < result.rows.size(); ++i) {
        if (labels[i] != group) continue;
        const double d = result.rows[i][idx] - mean;
        ss += d * d;
      }
      const double se =
          count > 1 ? std::sqrt(ss / static_cast<double>(count - 1) /
                                static_cast<double>(count))
                    : 0.0;
      result.aggregates.push_back({group, metric, mean, se, count});
    }
  }
  return result;
}

void write_sweep_result(const SweepResult& result, const std::string& out_dir,
                        const nlohmann::json& config_echo) {
  const SweepResult recheck = make_sweep_result(
      result.columns, result.rows, result.group_columns, result.metric_columns);
  if (recheck.aggregates.size() != result.aggregates.size())
    throw AlgorithmError("aggregates are not recomputable from rows");
  for (std::size_t i = 0; i < result.aggregates.size(); ++i) {
    const AggregateRow& a = result.aggregates[i];
    const AggregateRow& b = recheck.aggregates[i];
    if (a.group != b.group || a.metric != b.metric || a.mean != b.mean ||
        a.se != b.se || a.count != b.count)
      throw AlgorithmError("aggregates are not recomputable from rows");
  }
  fs::create_directories(out_dir);
  CsvWriter csv((fs::path(out_dir) / "rows.csv").string(), result.columns);
  for (const std::vector<double>& row : result.rows) csv.add_row(row);
  csv.write();
  json aggregates = json::array();
  for (const AggregateRow& a : result.aggregates)
    aggregates.push_back({{"group", a.group},
                          {"metric", a.metric},
                          {"mean", a.mean},
                          {"se", a.se},
                          {"count", a.count}});
  json summary = {{"version", 1},
                  {"config", config_echo},
                  {"aggregates", aggregates}};
  save_json(summary, (fs::path(out_dir) / "summary.json").string());
}

SweepResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentConfig effective = cfg;
  if (const char* env_out = std::getenv("SEMIBANDIT_OUT"); env_out && *env_out)
    effective.out_dir = env_out;
  fs::create_directories(effective.out_dir);
  SweepResult result;
  try {
    switch (effective.kind) {
      case ExperimentKind::kPac:
        result = run_pac_experiment(effective);
        break;
      case ExperimentKind::kPacSingleLabel:
        result = run_single_label_experiment(effective);
        break;
      case ExperimentKind::kRegret:
        result = run_regret_experiment(effective, false);
        break;
      case ExperimentKind::kRegretBaseline:
        result = run_regret_experiment(effective, true);
        break;
      case ExperimentKind::kLowerBoundSanity:
        result = run_lower_bound_experiment(effective);
        break;
      case ExperimentKind::kDiagnose: {
        auto [inst, cls] = load_or_generate(effective);
        diagnose(inst, cls, std::cout);
        return result;
      }
    }
  } catch (const HarnessError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::exception& e) {
    throw AlgorithmError(e.what());
  }
  write_sweep_result(result, effective.out_dir, effective.raw);
  return result;
}

SweepResult sparsity_sweep(const RegretFamilySpec& family,
                           const std::vector<double>& s_values,
                           const RegretParams& params, int trials,
                           std::uint64_t seed) {
  if (s_values.empty()) throw ConfigError("sparsity sweep needs at least one s value");
  const std::vector<std::string> columns = {
      "seed", "s", "algo", "terminal_regret", "regret_at_tenth", "min_p",
      "max_ratio"};
  std::vector<std::vector<double>> rows(
      s_values.size() * 2 * static_cast<std::size_t>(trials));
  // One flat task list so trials parallelize across the whole grid.
  struct Task {
    std::size_t s_index;
    bool baseline;
    int trial;
  };
  std::vector<Task> tasks;
  for (std::size_t si = 0; si < s_values.size(); ++si)
    for (int algo = 0; algo < 2; ++algo)
      for (int trial = 0; trial < trials; ++trial)
        tasks.push_back({si, algo == 1, trial});
  std::vector<std::pair<Instance, PolicyClass>> realized;
  realized.reserve(s_values.size());
  for (double s : s_values) realized.push_back(regret_family_instance(family, s));
  parallel_trials(static_cast<int>(tasks.size()), [&](int task_index) {
    const Task& task = tasks[static_cast<std::size_t>(task_index)];
    const Instance& inst = realized[task.s_index].first;
    const PolicyClass& cls = realized[task.s_index].second;
    const std::uint64_t seed_for_trial =
        trial_seed(seed, static_cast<std::uint64_t>(task.trial));
    RegretTrialOutcome out = regret_trial(inst, cls, params, task.baseline,
                                          seed_for_trial, false, "");
    rows[static_cast<std::size_t>(task_index)] = {
        static_cast<double>(seed_for_trial),
        s_values[task.s_index],
        task.baseline ? 1.0 : 0.0,
        out.terminal,
        out.at_tenth,
        out.min_p,
        out.max_ratio};
  });
  return make_sweep_result(columns, std::move(rows), {"s", "algo"},
                           {"terminal_regret", "regret_at_tenth", "max_ratio"});
}

SweepResult lower_bound_sanity(const LowerBoundParams& params, int trials,
                               std::uint64_t seed) {
  if (params.specs.empty()) throw ConfigError("lower-bound sanity needs at least one spec");
  const auto factor_label = [](double factor) {
    if (factor == std::floor(factor))
      return std::to_string(static_cast<long long>(factor));
    return format_double(factor);
  };
  std::vector<std::string> columns = {"spec", "K",   "m",
                                      "s",    "eps", "seed",
                                      "total_mean_abs_err", "violation_freq",
                                      "violation_bound"};
  for (double factor : kIdentificationHorizonFactors) {
    columns.push_back("horizon_x" + factor_label(factor));
    columns.push_back("success_x" + factor_label(factor));
  }
  std::vector<std::vector<double>> rows(params.specs.size() *
                                        static_cast<std::size_t>(trials));
  for (std::size_t spec_idx = 0; spec_idx < params.specs.size(); ++spec_idx) {
    const LowerBoundGridSpec& grid = params.specs[spec_idx];
    std::vector<int> good;
    for (int y = 0; y < grid.subset_size; ++y) good.push_back(y);
    const LowerBoundSpec spec{grid.capacity, grid.subset_size, grid.sparsity,
                              grid.eps,
                              ActionSubset(good, grid.capacity)};
    const Instance inst = lower_bound_instance(spec);
    double total_mean = 0.0;
    for (int y = 0; y < grid.capacity; ++y) total_mean += inst.mean_reward(0, y);
    const double mean_err = std::abs(total_mean - grid.sparsity / 2.0);
    const double bound =
        params.violation_horizon * std::exp(-grid.sparsity / 4.0);
    parallel_trials(trials, [&, spec_idx](int trial) {
      const std::uint64_t seed_for_trial = trial_seed(
          derive_seed(seed, spec_idx), static_cast<std::uint64_t>(trial));
      Rng master(seed_for_trial);
      Rng violation_rng = master.split(0);
      // Violation frequency over the fixed horizon.
      int violations = 0;
      for (int t = 0; t < params.violation_horizon; ++t) {
        auto [x, r] = sample_round(inst, violation_rng);
        (void)x;
        if (r.l1_norm() > grid.sparsity + 1e-12) ++violations;
      }
      std::vector<double> row = {
          static_cast<double>(spec_idx),
          static_cast<double>(grid.capacity),
          static_cast<double>(grid.subset_size),
          grid.sparsity,
          grid.eps,
          static_cast<double>(seed_for_trial),
          mean_err,
          static_cast<double>(violations) / params.violation_horizon,
          bound};
      // Naive identifier at horizons sweeping through s m / eps^2.
      for (std::size_t fi = 0; fi < kIdentificationHorizonFactors.size(); ++fi) {
        const double factor = kIdentificationHorizonFactors[fi];
        const int horizon =
            grid.eps > 0.0
                ? static_cast<int>(std::ceil(factor * grid.sparsity *
                                             grid.subset_size /
                                             (grid.eps * grid.eps)))
                : params.violation_horizon;
        Rng ident_rng = master.split(1 + fi);
        std::vector<double> sums(static_cast<std::size_t>(grid.capacity), 0.0);
        std::vector<int> counts(static_cast<std::size_t>(grid.capacity), 0);
        for (int t = 0; t < horizon; ++t) {
          auto [x, r] = sample_round(inst, ident_rng);
          (void)x;
          const ActionSubset a =
              sample_uniform_action(grid.capacity, grid.subset_size, ident_rng);
          for (int y : a.members()) {
            sums[static_cast<std::size_t>(y)] += r[y];
            counts[static_cast<std::size_t>(y)] += 1;
          }
        }
        std::vector<int> order(static_cast<std::size_t>(grid.capacity));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a_idx, int b_idx) {
          const double ma = counts[a_idx] ? sums[a_idx] / counts[a_idx] : 0.0;
          const double mb = counts[b_idx] ? sums[b_idx] / counts[b_idx] : 0.0;
          return ma > mb;
        });
        order.resize(static_cast<std::size_t>(grid.subset_size));
        std::sort(order.begin(), order.end());
        const bool success = order == spec.good_set.members();
        row.push_back(static_cast<double>(horizon));
        row.push_back(success ? 1.0 : 0.0);
      }
      rows[spec_idx * static_cast<std::size_t>(trials) +
           static_cast<std::size_t>(trial)] = std::move(row);
    });
  }
  std::vector<std::string> metrics = {"total_mean_abs_err", "violation_freq"};
  for (double factor : kIdentificationHorizonFactors)
    metrics.push_back("success_x" + factor_label(factor));
  return make_sweep_result(columns, std::move(rows), {"spec"}, metrics);
}

void diagnose(const Instance& inst, const PolicyClass& cls, std::ostream& out) {
  const SimplexWeights uniform = SimplexWeights::uniform(cls.size());
  const double gamma = 0.5;
  out << "policies: " << cls.size() << "  K=" << cls.capacity()
      << "  m=" << cls.subset_size() << "  s=" << inst.sparsity()
      << "  contexts=" << inst.num_contexts() << "\n";
  double best = -1.0;
  for (std::size_t j = 0; j < cls.size(); ++j)
    best = std::max(best, exact_policy_reward(inst, cls[j]));
  const std::vector<double> audit = phase2_weight_audit(inst, cls, uniform, gamma);
  out << "per-policy exact reward / gap / weight audit at uniform p (gamma=0.5):\n";
  for (std::size_t j = 0; j < cls.size(); ++j) {
    const double reward = exact_policy_reward(inst, cls[j]);
    out << "  policy " << j << ": reward=" << format_double(reward)
        << " gap=" << format_double(best - reward)
        << " audit=" << format_double(audit[j]) << "\n";
  }
  out << "smoothed marginals Q^gamma(y|x) at uniform p:\n";
  for (int x = 0; x < inst.num_contexts(); ++x) {
    out << "  context " << x << ":";
    for (int y = 0; y < cls.capacity(); ++y)
      out << " " << format_double(
                        smoothed_marginal(uniform, cls, Context{x}, y, gamma));
    out << "\n";
  }
}

std::pair<Instance, PolicyClass> regret_family_instance(
    const RegretFamilySpec& family, double sparsity) {
  const int capacity = family.capacity;
  const int m = family.subset_size;
  if (capacity <= 0 || m <= 0 || m > capacity)
    throw ConfigError("regret family: need 0 < m <= K");
  if (!(sparsity > 0.0) || sparsity > capacity)
    throw ConfigError("regret family: need 0 < s <= K");
  const int support =
      std::max(m, std::min(capacity, static_cast<int>(sparsity) + 1));
  const double value = sparsity / support;
  Rng rng(derive_seed(family.gen_seed,
                      static_cast<std::uint64_t>(sparsity * 1000.0)));

  std::vector<double> probs(static_cast<std::size_t>(family.n_contexts),
                            1.0 / family.n_contexts);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) acc += probs[i];
  probs.back() = 1.0 - acc;

  std::vector<RewardLaw> laws;
  std::vector<std::vector<int>> supports;
  for (int x = 0; x < family.n_contexts; ++x) {
    const ActionSubset sup = sample_uniform_action(capacity, support, rng);
    RewardLaw law;
    law.type = RewardLawType::kFixed;
    law.values.assign(static_cast<std::size_t>(capacity), 0.0);
    for (int y : sup.members()) law.values[static_cast<std::size_t>(y)] = value;
    laws.push_back(std::move(law));
    supports.push_back(sup.members());
  }

  std::vector<Policy> policies;
  {
    // Policy 0 plays the lowest-index support actions everywhere.
    std::vector<ActionSubset> table;
    for (const std::vector<int>& sup : supports)
      table.emplace_back(std::vector<int>(sup.begin(), sup.begin() + m), capacity);
    policies.emplace_back(std::move(table));
  }
  for (int j = 1; j < family.n_policies; ++j) {
    std::vector<ActionSubset> table;
    for (const std::vector<int>& sup : supports) {
      std::vector<int> complement;
      for (int y = 0; y < capacity; ++y)
        if (std::find(sup.begin(), sup.end(), y) == sup.end())
          complement.push_back(y);
      if (static_cast<int>(complement.size()) >= m) {
        // Off-support play keeps the gap to policy 0 at its maximum.
        for (int i = 0; i < m; ++i) {
          const std::size_t pick =
              static_cast<std::size_t>(i) +
              rng.below(complement.size() - static_cast<std::size_t>(i));
          std::swap(complement[static_cast<std::size_t>(i)], complement[pick]);
        }
        complement.resize(static_cast<std::size_t>(m));
        table.emplace_back(std::move(complement), capacity);
      } else {
        table.push_back(sample_uniform_action(capacity, m, rng));
      }
    }
    policies.emplace_back(std::move(table));
  }
  Instance inst(capacity, m, sparsity, std::move(probs), std::move(laws));
  PolicyClass cls(std::move(policies), capacity, m);
  return {std::move(inst), std::move(cls)};
}

}  // namespace semibandit
