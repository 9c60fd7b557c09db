#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "semibandit/harness.hpp"
#include "semibandit/io.hpp"
#include "test_support.hpp"

using namespace semibandit;
namespace st = semibandit::testing;
namespace fs = std::filesystem;
using nlohmann::json;

TEST_SUITE_BEGIN("harness");

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "semibandit_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json small_pac_config(const fs::path& out_dir) {
  return {
      {"kind", "pac"},
      {"seed", 5},
      {"trials", 3},
      {"out_dir", out_dir.string()},
      {"generator", {{"type", "random"}, {"K", 5}, {"m", 2}, {"s", 2.0},
                     {"contexts", 2}, {"policies", 4}, {"gen_seed", 9}}},
      {"pac", {{"n1", 60}, {"n2", 80}, {"fw_iterations", 25}, {"gamma", 0.5}}}};
}

}  // namespace

TEST_CASE("config parsing and validation") {
  CHECK_THROWS_AS(parse_experiment_config({{"kind", "nope"}}), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config({{"kind", "pac"}, {"trials", 0}}),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_experiment_config({{"kind", "pac"}, {"instance", "/no/such.json"}}),
      ConfigError);
  CHECK_THROWS_AS(load_experiment_config("/no/such/config.json"), ConfigError);
  // neither files nor a generator
  CHECK_THROWS_AS(
      run_experiment(parse_experiment_config({{"kind", "pac"}, {"trials", 1}})),
      ConfigError);

  const ExperimentConfig cfg =
      parse_experiment_config(small_pac_config(fs::temp_directory_path()));
  CHECK(cfg.kind == ExperimentKind::kPac);
  CHECK(cfg.trials == 3);
  CHECK(cfg.pac.n1 == 60);
}

TEST_CASE("theorem-shaped preset resolves against the generated class") {
  json j = small_pac_config(fs::temp_directory_path());
  j["pac"] = {{"preset", {{"c", 1e-5}, {"eps", 0.2}, {"delta", 0.1}}}};
  const ExperimentConfig cfg = parse_experiment_config(j);
  const PacConfig expect =
      theorem_shaped_config(5, 2, 2.0, 4, 0.2, 0.1, 1e-5, cfg.seed);
  CHECK(cfg.pac.n1 == expect.n1);
  CHECK(cfg.pac.n2 == expect.n2);
  CHECK(cfg.pac.fw_iterations == expect.fw_iterations);
}

TEST_CASE("sweep aggregates are recomputable and grouped") {
  SweepResult result = make_sweep_result(
      {"seed", "s", "value"},
      {{1, 1.0, 2.0}, {2, 1.0, 4.0}, {3, 2.0, 10.0}}, {"s"}, {"value"});
  REQUIRE(result.aggregates.size() == 2);
  CHECK(result.aggregates[0].group == "s=1");
  CHECK(result.aggregates[0].mean == doctest::Approx(3.0));
  CHECK(result.aggregates[0].count == 2);
  // se = sqrt(sample variance / n) = sqrt(2 / 2) = 1
  CHECK(result.aggregates[0].se == doctest::Approx(1.0));
  CHECK(result.aggregates[1].group == "s=2");
  CHECK(result.aggregates[1].se == 0.0);

  const fs::path dir = fresh_dir("agg");
  CHECK_NOTHROW(write_sweep_result(result, dir.string(), json::object()));
  // tampering with a row breaks the write-time recheck
  result.rows[0][2] = 99.0;
  CHECK_THROWS_AS(write_sweep_result(result, dir.string(), json::object()),
                  AlgorithmError);
}

TEST_CASE("pac experiment writes deterministic outputs") {
  const fs::path dir_a = fresh_dir("pac_a");
  const fs::path dir_b = fresh_dir("pac_b");
  const ExperimentConfig cfg_a = parse_experiment_config(small_pac_config(dir_a));
  const ExperimentConfig cfg_b = parse_experiment_config(small_pac_config(dir_b));
  const SweepResult ra = run_experiment(cfg_a);
  const SweepResult rb = run_experiment(cfg_b);
  CHECK(ra.rows.size() == 3);
  CHECK(read_file(dir_a / "rows.csv") == read_file(dir_b / "rows.csv"));
  CHECK(!read_file(dir_a / "rows.csv").empty());
  // header row present
  CHECK(read_file(dir_a / "rows.csv").substr(0, 4) == "seed");
  // summary is schema-versioned
  const json summary = load_json((dir_a / "summary.json").string());
  CHECK(summary.at("version") == 1);
}

TEST_CASE("pac diagnostics emit the FW trace and the report JSON") {
  const fs::path dir = fresh_dir("pac_trace");
  json j = small_pac_config(dir);
  j["trials"] = 1;
  j["pac"]["write_trace"] = true;
  run_experiment(parse_experiment_config(j));
  CHECK(fs::exists(dir / "fw_trace_trial0.csv"));
  const std::string trace = read_file(dir / "fw_trace_trial0.csv");
  CHECK(trace.substr(0, 9) == "iteration");
  const json report = load_json((dir / "report_trial0.json").string());
  CHECK(report.at("version") == 1);
  CHECK(report.at("erm_calls").get<int>() == 26);  // fw_iterations + 1
  CHECK(report.at("p_hat").size() == 4);
}

TEST_CASE("pac experiment on a singleton class reports zero gap") {
  const fs::path dir = fresh_dir("pac_singleton");
  json j = small_pac_config(dir);
  j["trials"] = 1;
  j["generator"]["policies"] = 1;
  const SweepResult result = run_experiment(parse_experiment_config(j));
  REQUIRE(result.rows.size() == 1);
  const std::size_t gap_col = 5;  // (seed, N1, N2, T, gamma, gap, ...)
  CHECK(result.columns[gap_col] == "gap");
  CHECK(result.rows[0][gap_col] == 0.0);
}

TEST_CASE("single-label experiment runs end to end") {
  const fs::path dir = fresh_dir("single_label");
  const json j = {
      {"kind", "pac-single-label"},
      {"seed", 3},
      {"trials", 2},
      {"out_dir", dir.string()},
      {"generator", {{"type", "list"}, {"K", 6}, {"m", 1}, {"s", 1.0},
                     {"contexts", 3}, {"policies", 4}, {"gen_seed", 2}}},
      {"pac", {{"n1", 400}, {"n2", 300}, {"fw_iterations", 30}, {"gamma", 0.5}}}};
  const SweepResult result = run_experiment(parse_experiment_config(j));
  CHECK(result.rows.size() == 2);
  // hypothesis 0 is consistent with the labels, so gaps should be zero here
  const std::size_t gap_col = 6;
  CHECK(result.columns[gap_col] == "gap");
  for (const auto& row : result.rows) CHECK(row[gap_col] == doctest::Approx(0.0));
}

TEST_CASE("regret experiment with a fixed loss file") {
  const fs::path dir = fresh_dir("regret_file");
  // Tiny instance and sequence written by hand.
  RegretFamilySpec family{6, 2, 1, 3, 4};
  auto [inst, cls] = regret_family_instance(family, 2.0);
  const fs::path inst_path = dir / "inst.json";
  const fs::path pols_path = dir / "pols.json";
  save_json(instance_to_json(inst), inst_path.string());
  save_json(policy_class_to_json(cls), pols_path.string());
  const fs::path loss_path = dir / "losses.csv";
  {
    std::ofstream out(loss_path);
    Rng env(9);
    for (int t = 0; t < 40; ++t) {
      auto [x, r] = sample_round(inst, env);
      out << x.id;
      for (double v : r.values()) out << "," << format_double(-v);
      out << "\n";
    }
  }
  const json j = {{"kind", "regret"},
                  {"seed", 1},
                  {"trials", 2},
                  {"out_dir", dir.string()},
                  {"instance", inst_path.string()},
                  {"policies", pols_path.string()},
                  {"regret", {{"horizon", 40}, {"nu", 0.0625},
                              {"loss_file", loss_path.string()}}}};
  const SweepResult result = run_experiment(parse_experiment_config(j));
  CHECK(result.rows.size() == 2);
  // a horizon beyond the file length errors as a runtime failure
  json over = j;
  over["regret"]["horizon"] = 99;
  CHECK_THROWS_AS(run_experiment(parse_experiment_config(over)), AlgorithmError);
}

TEST_CASE("sparsity sweep emits one aggregate row per (s, algo) pair") {
  RegretFamilySpec family{8, 2, 2, 4, 7};
  RegretParams params;
  params.horizon = 300;
  const SweepResult result = sparsity_sweep(family, {1.0, 2.0}, params, 2, 13);
  CHECK(result.rows.size() == 2 * 2 * 2);
  int terminal_aggregates = 0;
  for (const AggregateRow& a : result.aggregates)
    if (a.metric == "terminal_regret") ++terminal_aggregates;
  CHECK(terminal_aggregates == 4);  // 2 s-values x 2 algorithms
  // single s value: one row per algorithm
  const SweepResult single = sparsity_sweep(family, {1.0}, params, 2, 13);
  int singles = 0;
  for (const AggregateRow& a : single.aggregates)
    if (a.metric == "terminal_regret") ++singles;
  CHECK(singles == 2);
}

TEST_CASE("sparsity sweep at s = K shows no advantage for either algorithm") {
  // With s = K every action pays 1, all policies tie, and both algorithms
  // collect zero regret: the two bands overlap trivially.
  RegretFamilySpec family{8, 2, 2, 4, 3};
  RegretParams params;
  params.horizon = 500;
  const SweepResult result = sparsity_sweep(family, {8.0}, params, 3, 5);
  double sparse_mean = -1.0, sparse_se = 0.0, base_mean = -1.0, base_se = 0.0;
  for (const AggregateRow& a : result.aggregates) {
    if (a.metric != "terminal_regret") continue;
    if (a.group == "s=8,algo=0") {
      sparse_mean = a.mean;
      sparse_se = a.se;
    } else if (a.group == "s=8,algo=1") {
      base_mean = a.mean;
      base_se = a.se;
    }
  }
  CHECK(sparse_mean == doctest::Approx(0.0));
  CHECK(base_mean == doctest::Approx(0.0));
  // overlapping 2-se bands
  CHECK(std::abs(sparse_mean - base_mean) <= 2.0 * (sparse_se + base_se) + 1e-12);
}

TEST_CASE("regret_family_instance is matched and gapped") {
  RegretFamilySpec family{16, 2, 3, 6, 21};
  for (double s : {1.0, 4.0}) {
    auto [inst, cls] = regret_family_instance(family, s);
    CHECK(inst.sparsity() == s);
    CHECK(inst.guarantee() == SparsityGuarantee::kSure);
    // policy 0 is the maximizer; off-support policies earn zero
    CHECK(exact_gap_to_best(inst, cls, cls[0]) == doctest::Approx(0.0));
    for (std::size_t j = 1; j < cls.size(); ++j)
      CHECK(exact_policy_reward(inst, cls[j]) == doctest::Approx(0.0));
    // losses satisfy the squared-norm budget
    for (int x = 0; x < inst.num_contexts(); ++x) {
      double sq = 0.0, l1 = 0.0;
      for (int y = 0; y < inst.capacity(); ++y) {
        sq += inst.mean_reward(x, y) * inst.mean_reward(x, y);
        l1 += inst.mean_reward(x, y);
      }
      CHECK(sq <= s + 1e-12);
      CHECK(l1 <= s + 1e-9);
    }
  }
}

TEST_CASE("lower_bound_sanity grid") {
  LowerBoundParams params;
  params.specs = {{12, 2, 4.0, 0.0}, {12, 2, 4.0, 0.3}};
  params.violation_horizon = 200;
  const SweepResult result = lower_bound_sanity(params, 4, 3);
  CHECK(result.rows.size() == 8);
  // exact total-mean identity holds for every row
  const auto col = [&](const std::string& name) {
    return static_cast<std::size_t>(
        std::find(result.columns.begin(), result.columns.end(), name) -
        result.columns.begin());
  };
  for (const auto& row : result.rows) CHECK(row[col("total_mean_abs_err")] < 1e-12);
  // eps = 0: identification at chance level; eps = 0.3 at the longest
  // horizon: near-certain identification. Compare aggregate success rates.
  double success_eps0 = -1.0, success_big = -1.0;
  for (const AggregateRow& a : result.aggregates) {
    if (a.metric == "success_x100" && a.group == "spec=0") success_eps0 = a.mean;
    if (a.metric == "success_x100" && a.group == "spec=1") success_big = a.mean;
  }
  CHECK(success_eps0 >= 0.0);
  CHECK(success_big > success_eps0);
}

TEST_CASE("diagnose prints gaps and marginals") {
  Rng rng(19);
  auto [inst, cls] = random_sparse_instance(4, 2, 2.0, 2, 3, rng);
  std::ostringstream out;
  diagnose(inst, cls, out);
  const std::string text = out.str();
  CHECK(text.find("policy 0") != std::string::npos);
  CHECK(text.find("gap=") != std::string::npos);
  CHECK(text.find("smoothed marginals") != std::string::npos);
}

TEST_CASE("SEMIBANDIT_OUT overrides the output directory") {
  const fs::path dir = fresh_dir("env_override");
  const fs::path override_dir = fresh_dir("env_override_target");
  json j = small_pac_config(dir);
  j["trials"] = 1;
  setenv("SEMIBANDIT_OUT", override_dir.string().c_str(), 1);
  run_experiment(parse_experiment_config(j));
  unsetenv("SEMIBANDIT_OUT");
  CHECK(fs::exists(override_dir / "rows.csv"));
  CHECK(!fs::exists(dir / "rows.csv"));
}

TEST_SUITE_END();
