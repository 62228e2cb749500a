// darts: command-line front end over the harness commands.
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "darts/harness.hpp"

int main(int argc, char** argv) {
  using namespace darts;
  CLI::App app{"Differentiable architecture search toolkit"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  std::string config, out_dir;
  auto* search_cmd = app.add_subcommand("search", "Run architecture search from a config file");
  search_cmd->add_option("--config", config, "Flat key = value config file")->required();
  search_cmd->add_option("--out", out_dir, "Output directory")->required();

  ToyBilevelOptions toy;
  std::string toy_mode = "second-order";
  std::string toy_trajectory;
  std::optional<double> toy_xi, toy_eta_w, toy_eta_alpha;
  auto* toy_cmd = app.add_subcommand("toy-bilevel", "Scalar bilevel problem with a known optimum");
  toy_cmd->add_option("--mode", toy_mode, "second-order, first-order or joint")
      ->check(CLI::IsMember({"second-order", "first-order", "joint"}));
  toy_cmd->add_option("--xi", toy_xi, "Unroll step (default 0.5, or 0 for first-order)");
  toy_cmd->add_option("--steps", toy.steps, "Iterations")->capture_default_str();
  toy_cmd->add_option("--eta-w", toy_eta_w, "Weight learning rate (default 0.5)");
  toy_cmd->add_option("--eta-alpha", toy_eta_alpha, "Architecture learning rate (default 0.1)");
  toy_cmd->add_option("--trajectory", toy_trajectory, "Write the trajectory CSV here");

  DeriveOptions derive;
  std::string derive_alpha, derive_spec, derive_config, derive_out;
  auto* derive_cmd = app.add_subcommand("derive", "Discretize an alpha snapshot into a genotype");
  derive_cmd->add_option("--alpha", derive_alpha, "Alpha TSV snapshot")->required();
  auto* spec_opt = derive_cmd->add_option("--spec", derive_spec, "Cell spec JSON");
  auto* cfg_opt = derive_cmd->add_option("--config", derive_config, "Config file supplying the cell");
  spec_opt->excludes(cfg_opt);
  derive_cmd->add_option("--out", derive_out, "Genotype JSON output");

  std::string eval_genotype, eval_config, eval_out;
  auto* eval_cmd = app.add_subcommand("evaluate", "Retrain a genotype and report test metrics");
  eval_cmd->add_option("--genotype", eval_genotype, "Genotype JSON")->required();
  eval_cmd->add_option("--config", eval_config, "Task config")->required();
  eval_cmd->add_option("--out", eval_out, "Metrics output file");

  std::string rs_config, rs_out;
  std::optional<std::size_t> rs_samples;
  auto* rs_cmd = app.add_subcommand("random-search", "Best of N sampled genotypes");
  rs_cmd->add_option("--config", rs_config, "Task config")->required();
  rs_cmd->add_option("--samples", rs_samples, "Number of samples (default: random_samples key)");
  rs_cmd->add_option("--out", rs_out, "Output directory")->required();

  SpaceQuery query;
  auto* count_cmd = app.add_subcommand("count", "Exact search-space sizes");
  count_cmd->add_option("--intermediates", query.intermediates, "Intermediate nodes n")->capture_default_str();
  count_cmd->add_option("--ops", query.nonzero_ops, "Non-zero operations p")->capture_default_str();
  count_cmd->add_option("--k", query.k, "Inputs kept per node")->capture_default_str();
  count_cmd->add_option("--multiplicity", query.multiplicity, "Independent cells")->capture_default_str();

  FidelityOptions fidelity;
  auto* gc_cmd = app.add_subcommand("grad-check", "Second-order gradient against finite differences");
  gc_cmd->add_option("--seed", fidelity.seed, "Seed")->capture_default_str();
  gc_cmd->add_option("--networks", fidelity.networks, "Random networks")->capture_default_str();
  gc_cmd->add_option("--intermediates", fidelity.intermediates, "Intermediate nodes")->capture_default_str();
  gc_cmd->add_option("--hidden", fidelity.hidden, "Hidden width")->capture_default_str();
  gc_cmd->add_option("--dims", fidelity.dims, "Input features")->capture_default_str();
  gc_cmd->add_option("--xi", fidelity.xi, "Unroll step")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (*search_cmd) return cmd_search(config, out_dir, std::cout, std::cerr);
  if (*toy_cmd) {
    toy.mode = mode_from_name(toy_mode);
    toy.xi = toy_xi;
    toy.eta_w = toy_eta_w;
    toy.eta_alpha = toy_eta_alpha;
    toy.trajectory_path = toy_trajectory;
    return cmd_toy_bilevel(toy, std::cout, std::cerr);
  }
  if (*derive_cmd) {
    derive.alpha_path = derive_alpha;
    derive.spec_path = derive_spec;
    derive.config_path = derive_config;
    derive.out_path = derive_out;
    return cmd_derive(derive, std::cout, std::cerr);
  }
  if (*eval_cmd) return cmd_evaluate(eval_genotype, eval_config, eval_out, std::cout, std::cerr);
  if (*rs_cmd) return cmd_random_search(rs_config, rs_samples, rs_out, std::cout, std::cerr);
  if (*count_cmd) return cmd_count(query, std::cout, std::cerr);
  if (*gc_cmd) return cmd_grad_check(fidelity, std::cout, std::cerr);
  return kExitConfig;
}
