#pragma once

// Experiment configuration and the subcommand implementations behind the CLI:
// enumerate, solve, sweep, exhaustive, simulate. Kept out of the binary so
// tests can drive the exact code paths the tool runs.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "blockmfg/analysis.hpp"
#include "blockmfg/csv.hpp"
#include "blockmfg/oracle.hpp"

namespace blockmfg {

struct ExperimentConfig {
  std::string command;
  ModelConfig model;
  std::string initial_policy = "lcr";  // lcr | root | random | path to a policy file
  std::vector<double> rho_grid{0.5, 0.9, 0.99};
  std::vector<double> delta_grid{0.005, 0.0075, 0.01, 0.0125, 0.015, 0.02};
  std::uint64_t seed = 1;
  long block_steps = 100000;
  unsigned threads = 0;  // 0 = machine parallelism
  std::string out_dir = ".";
  // auto = best-response inside `solve` (the algorithmic loop), symmetric
  // everywhere a population metric is being measured
  std::string mu_mode = "auto";
  std::string action_mass_name = "spread";
  bool skip_basins = false;

  MuMode mu() const {
    if (mu_mode == "auto") return command == "solve" ? MuMode::kBestResponse : MuMode::kSymmetric;
    if (mu_mode == "best-response") return MuMode::kBestResponse;
    if (mu_mode == "symmetric") return MuMode::kSymmetric;
    throw ConfigError("mu-mode must be auto, best-response or symmetric");
  }

  ActionMass action_mass() const {
    if (action_mass_name == "spread") return ActionMass::kSpread;
    if (action_mass_name == "concentrate") return ActionMass::kConcentrate;
    throw ConfigError("action-mass must be spread or concentrate");
  }

  FixedPointOptions fp_options() const {
    FixedPointOptions o;
    o.mode = mu();
    o.threads = threads;
    return o;
  }
};

inline void log_line(const std::string& msg) {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  std::cerr << "[" << buf << "] " << msg << "\n";
}

inline LocalPolicy resolve_policy(const GraphCatalog& cat, const ExperimentConfig& cfg) {
  if (cfg.initial_policy == "lcr") return lcr_policy(cat);
  if (cfg.initial_policy == "root") return root_policy(cat);
  if (cfg.initial_policy == "random") {
    std::mt19937_64 rng(cfg.seed);
    return random_policy(cat, rng);
  }
  std::ifstream f(cfg.initial_policy);
  if (!f) throw ConfigError("cannot read policy file: " + cfg.initial_policy);
  LocalPolicy p = load_policy(cat, f);
  validate_policy(cat, cfg.model.max_blocks, p);
  return p;
}

inline std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

// ---- enumerate: class/state catalogues plus the class-vs-labeled counts ----

inline long count_labeled_rooted_trees(int n) {
  // trees on n labeled nodes rooted at node 0: n^(n-2) by Cayley; computed
  // by enumeration elsewhere as an oracle, closed form here for the table
  long r = 1;
  for (int i = 0; i < n - 2; ++i) r *= n;
  return n == 1 ? 1 : r;
}

inline int run_enumerate(const ExperimentConfig& cfg) {
  GraphCatalog cat(cfg.model.max_blocks);
  StateSpace ss(cat, cfg.model.max_blocks);
  {
    std::ofstream f(out_path(cfg, "classes.txt"));
    for (int id = 0; id < cat.num_classes(); ++id) {
      const GraphClass& g = cat.cls(id);
      f << id << " size=" << g.size << " code=" << g.code << " name=" << g.name << " orbits=";
      for (int x = 0; x < g.size; ++x) f << (x ? "," : "") << g.orbit[x];
      f << "\n";
    }
  }
  {
    std::ofstream f(out_path(cfg, "states.txt"));
    for (StateId s = 0; s < ss.size(); ++s) {
      const GameState& st = ss.state(s);
      f << s << " graph=" << cat.cls(st.graph).name << " recv=";
      for (int i = 0; i < cat.cls(st.graph).size; ++i) f << (st.recv >> i & 1);
      f << " own=";
      for (int i = 0; i < cat.cls(st.graph).size; ++i) f << (st.own >> i & 1);
      f << "\n";
    }
  }
  {
    CsvWriter w({"size", "classes", "labeled_graphs", "states"});
    for (int n = 1; n <= cfg.model.max_blocks; ++n) {
      long states_n = 0;
      for (ClassId id : cat.classes_of_size(n)) states_n += ss.states_with_graph(id);
      w.write_row({std::to_string(n), std::to_string(cat.classes_of_size(n).size()),
                   std::to_string(count_labeled_rooted_trees(n)), std::to_string(states_n)});
    }
    w.save(out_path(cfg, "graph_counts.csv"));
  }
  log_line("enumerate: " + std::to_string(cat.num_classes()) + " classes, " +
           std::to_string(ss.size()) + " states");
  std::cout << "classes=" << cat.num_classes() << " states=" << ss.size() << "\n";
  return 0;
}

// ---- solve: best-response iteration from the initial policy ----

inline int run_solve(const ExperimentConfig& cfg) {
  GraphCatalog cat(cfg.model.max_blocks);
  StateSpace ss(cat, cfg.model.max_blocks);
  LocalPolicy start = resolve_policy(cat, cfg);
  auto [result, trace] = best_response_iteration(ss, start, cfg.model, cfg.fp_options());
  {
    std::ofstream f(out_path(cfg, "policy.txt"));
    save_policy(cat, cfg.model.max_blocks, result, f);
  }
  {
    std::ofstream f(out_path(cfg, "solve_trace.txt"));
    f << "outer_iterations " << trace.outer_iterations << "\n";
    for (std::size_t i = 0; i < trace.policies.size(); ++i)
      f << "policy[" << i << "] " << trace.policies[i] << "\n";
  }
  EquilibriumReport eq = is_equilibrium(ss, result, cfg.model, cfg.fp_options());
  log_line("solve: converged in " + std::to_string(trace.outer_iterations) +
           " outer iterations; equilibrium=" + (eq.is_equilibrium ? std::string("yes") : "no"));
  std::cout << "policy=" << encode_policy(cat, cfg.model.max_blocks, result)
            << " outer_iterations=" << trace.outer_iterations
            << " equilibrium=" << (eq.is_equilibrium ? 1 : 0) << " gap=" << csv_num(eq.gap)
            << "\n";
  return 0;
}

// ---- sweep: delay vs efficiency ----

inline int run_sweep(const ExperimentConfig& cfg) {
  GraphCatalog cat(cfg.model.max_blocks);
  StateSpace ss(cat, cfg.model.max_blocks);
  LocalPolicy pol = resolve_policy(cat, cfg);
  auto rows = delay_sweep(ss, pol, cfg.model, cfg.delta_grid, cfg.rho_grid, cfg.fp_options());
  CsvWriter w({"delta", "rho", "delay_steps", "theoretical", "measured", "rel_error"});
  for (const EfficiencyReport& r : rows)
    w.write_row({csv_num(r.delta), csv_num(r.rho), std::to_string(r.delay), csv_num(r.theoretical),
                 csv_num(r.measured), csv_num(r.rel_error)});
  w.save(out_path(cfg, "sweep.csv"));
  int failures = 0;
  for (const auto& r : rows)
    if (!r.error.empty()) ++failures;
  log_line("sweep: " + std::to_string(rows.size()) + " rows, " + std::to_string(failures) +
           " failed solves");
  std::cout << "rows=" << rows.size() << " failures=" << failures << "\n";
  return failures == 0 ? 0 : 1;
}

// ---- exhaustive: every policy at M<=4 ----

inline int run_exhaustive(const ExperimentConfig& cfg) {
  GraphCatalog cat(cfg.model.max_blocks);
  StateSpace ss(cat, cfg.model.max_blocks);
  auto reports = exhaustive_search(ss, cfg.model, cfg.fp_options());
  BasinSummary basins;
  if (!cfg.skip_basins) basins = basin_frequencies(ss, cfg.model, reports, cfg.fp_options());
  CsvWriter w({"policy", "is_equilibrium", "efficiency", "basin_count"});
  for (const PolicyReport& r : reports)
    w.write_row({r.policy, std::to_string(r.is_equilibrium ? 1 : 0), csv_num(r.efficiency),
                 std::to_string(r.basin_count)});
  w.save(out_path(cfg, "policies.csv"));
  ExhaustiveSummary s = summarize_exhaustive(ss, cfg.model, reports);
  log_line("exhaustive: " + std::to_string(s.total_policies) + " policies, " +
           std::to_string(s.equilibria) + " equilibria, best_is_lcr=" +
           std::to_string(s.best_is_lcr));
  std::cout << "policies=" << s.total_policies << " equilibria=" << s.equilibria
            << " failures=" << s.failures << " best_efficiency=" << csv_num(s.best_efficiency)
            << " best_is_lcr=" << (s.best_is_lcr ? 1 : 0)
            << " unique_best=" << (s.unique_best ? 1 : 0);
  if (!cfg.skip_basins) std::cout << " non_convergent=" << basins.non_convergent;
  std::cout << "\n";
  return 0;
}

// ---- simulate: agent-based oracle ----

inline int run_simulate(const ExperimentConfig& cfg) {
  GraphCatalog cat(cfg.model.max_blocks);
  LocalPolicy pol = resolve_policy(cat, cfg);
  OracleParams op;
  op.n_agents = cfg.model.n_agents;
  op.max_blocks = cfg.model.max_blocks;
  op.timing = cfg.model.timing;
  op.epsilon = cfg.model.epsilon;
  op.block_steps = cfg.block_steps;
  op.seed = cfg.seed;
  op.action_mass = cfg.model.action_mass;
  OracleReport rep = monte_carlo_oracle(cat, op, pol);
  CsvWriter w({"metric", "estimate", "std_error"});
  w.write_row({"efficiency", csv_num(rep.efficiency.estimate), csv_num(rep.efficiency.std_error)});
  w.write_row({"prune_rate", csv_num(rep.prune_rate.estimate), csv_num(rep.prune_rate.std_error)});
  w.write_row({"reset_rate", csv_num(rep.reset_rate.estimate), csv_num(rep.reset_rate.std_error)});
  for (ClassId c = 0; c < cat.num_classes(); ++c) {
    if (rep.local_graph_freq[c].empty() || rep.graph_visits[c] == 0) continue;
    for (std::size_t k = 0; k < rep.local_graph_freq[c].size(); ++k) {
      const OracleCell& cell = rep.local_graph_freq[c][k];
      // class codes are comma-free, unlike the display names
      w.write_row({"mu[" + cat.cls(c).code + "][" + std::to_string(k) + "]",
                   csv_num(cell.estimate), csv_num(cell.std_error)});
    }
  }
  w.save(out_path(cfg, "oracle.csv"));
  log_line("simulate: " + std::to_string(cfg.block_steps) + " block steps, efficiency=" +
           csv_num(rep.efficiency.estimate));
  std::cout << "efficiency=" << csv_num(rep.efficiency.estimate)
            << " se=" << csv_num(rep.efficiency.std_error)
            << " prune_rate=" << csv_num(rep.prune_rate.estimate)
            << " reset_rate=" << csv_num(rep.reset_rate.estimate) << "\n";
  return 0;
}

inline int run(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  cfg.model.action_mass = cfg.action_mass();
  cfg.model.validate();
  if (cfg.command == "enumerate") return run_enumerate(cfg);
  if (cfg.command == "solve") return run_solve(cfg);
  if (cfg.command == "sweep") return run_sweep(cfg);
  if (cfg.command == "exhaustive") return run_exhaustive(cfg);
  if (cfg.command == "simulate") return run_simulate(cfg);
  throw ConfigError("unknown command: " + cfg.command);
}

}  // namespace blockmfg
