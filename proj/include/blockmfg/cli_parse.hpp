#pragma once

// Command-line / config-file parsing for the experiment tool. Config files
// are plain key=value lines using the long option names; explicit flags win
// over file values. Parsing is a library function so tests can cover it
// without spawning processes.

#include <CLI11.hpp>

#include <string>
#include <vector>

#include "blockmfg/experiment.hpp"

namespace blockmfg {

inline ExperimentConfig parse_cli(const std::vector<std::string>& args) {
  ExperimentConfig cfg;
  CLI::App app{"mean field equilibrium experiments for Nakamoto block graphs"};
  app.fallthrough(true);
  app.set_config("--config", "", "key=value configuration file");
  app.allow_config_extras(CLI::config_extras_mode::error);

  app.add_option("--n-agents", cfg.model.n_agents, "number of agents");
  app.add_option("--max-blocks", cfg.model.max_blocks, "maximum blocks in the global graph");
  app.add_option("--alpha", cfg.model.timing.alpha, "per-time-step block generation probability");
  app.add_option("--delta", cfg.model.timing.delta, "per-time-step block delivery probability");
  app.add_option("--gamma", cfg.model.gamma, "discount factor");
  app.add_option("--epsilon", cfg.model.epsilon, "prune threshold complement");
  app.add_option("--reward", cfg.model.reward_per_block, "reward per critical-path block");
  app.add_option("--initial-policy", cfg.initial_policy,
                 "lcr | root | random | path to a policy file");
  app.add_option("--rho", cfg.rho_grid, "coverage fractions for the delay conversion");
  app.add_option("--delta-grid", cfg.delta_grid, "delta values for the sweep command");
  app.add_option("--seed", cfg.seed, "random seed (simulate / random policy)");
  app.add_option("--block-steps", cfg.block_steps, "simulated block steps (simulate)");
  app.add_option("--threads", cfg.threads, "worker threads (0 = machine parallelism)");
  app.add_option("--out", cfg.out_dir, "output directory");
  app.add_option("--mu-mode", cfg.mu_mode, "auto | best-response | symmetric");
  app.add_option("--action-mass", cfg.action_mass_name,
                 "candidate action mass convention: spread | concentrate");
  app.add_flag("--skip-basins", cfg.skip_basins, "skip basin counting in exhaustive");

  for (const char* name : {"enumerate", "solve", "sweep", "exhaustive", "simulate"})
    app.add_subcommand(name)->fallthrough(true);
  app.require_subcommand(0, 1);

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }
  for (const auto* sub : app.get_subcommands()) cfg.command = sub->get_name();
  cfg.model.validate();  // range errors name the offending field
  cfg.mu();              // validates the mode string
  cfg.action_mass();
  for (double r : cfg.rho_grid)
    if (!(r > 0.0 && r < 1.0)) throw ConfigError("rho values must lie in (0,1)");
  for (double d : cfg.delta_grid)
    if (!(d > 0.0 && d <= 1.0)) throw ConfigError("delta-grid values must lie in (0,1]");
  return cfg;
}

}  // namespace blockmfg
