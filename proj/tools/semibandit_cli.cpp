#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "semibandit/harness.hpp"
#include "semibandit/io.hpp"

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PAC learning and regret minimization for sparse contextual "
               "combinatorial semi-bandits"};
  app.require_subcommand(1);

  std::string config_path;
  CLI::App* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "experiment config (JSON)")->required();

  std::string diag_instance, diag_policies;
  CLI::App* diag = app.add_subcommand(
      "diagnose", "print exact gaps, marginals and estimator audits");
  diag->add_option("instance", diag_instance, "instance JSON")->required();
  diag->add_option("policies", diag_policies, "policy class JSON")->required();

  CLI::App* gen = app.add_subcommand("gen", "generate instance fixtures");
  gen->require_subcommand(1);
  semibandit::GeneratorSpec spec;
  spec.capacity = 8;
  spec.subset_size = 2;
  spec.sparsity = 2.0;
  spec.n_contexts = 2;
  spec.n_policies = 4;
  std::string gen_out, gen_policies_out;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--K", spec.capacity, "number of actions");
    sub->add_option("--m", spec.subset_size, "subset size");
    sub->add_option("--s", spec.sparsity, "sparsity budget");
    sub->add_option("--seed", spec.gen_seed, "generator seed");
    sub->add_option("--policies", spec.n_policies, "policy class size");
    sub->add_option("-o,--out", gen_out, "instance output path")->required();
    sub->add_option("--policies-out", gen_policies_out,
                    "policy class output path");
  };
  CLI::App* gen_random = gen->add_subcommand("random", "random sparse instance");
  add_common(gen_random);
  gen_random->add_option("--contexts", spec.n_contexts, "context universe size");
  CLI::App* gen_lb = gen->add_subcommand("lower-bound", "hard Bernoulli instance");
  add_common(gen_lb);
  gen_lb->add_option("--eps", spec.eps, "suboptimality parameter");
  CLI::App* gen_list = gen->add_subcommand("list", "list classification instance");
  add_common(gen_list);
  gen_list->add_option("--contexts", spec.n_contexts, "context universe size");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const semibandit::ExperimentConfig cfg =
          semibandit::load_experiment_config(config_path);
      semibandit::run_experiment(cfg);
      return 0;
    }
    if (*diag) {
      const semibandit::Instance inst = semibandit::load_instance(diag_instance);
      const semibandit::PolicyClass cls =
          semibandit::load_policy_class(diag_policies);
      semibandit::diagnose(inst, cls, std::cout);
      return 0;
    }
    spec.type = (*gen_random) ? "random" : (*gen_lb) ? "lower-bound" : "list";
    const auto [inst, cls] = semibandit::realize_generator_spec(spec);
    semibandit::save_json(semibandit::instance_to_json(inst), gen_out);
    if (!gen_policies_out.empty())
      semibandit::save_json(semibandit::policy_class_to_json(cls),
                            gen_policies_out);
    return 0;
  } catch (const semibandit::HarnessError& e) {
    std::cerr << "error[" << e.code() << "]: " << e.what() << "\n";
    return e.code() == "config" ? kExitConfigError : kExitRuntimeError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error[config]: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error[runtime]: " << e.what() << "\n";
    return kExitRuntimeError;
  }
}
