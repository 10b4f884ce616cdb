#pragma once

// Steady-state metrics and the two headline experiments: the delay /
// efficiency sweep and the exhaustive equilibrium search over the M=4
// policy space.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "blockmfg/equilibrium.hpp"

namespace blockmfg {

// Fraction of permanently removed blocks that were finalized onto the
// critical path, in stationary expectation. Resets remove the whole graph
// and finalize nothing.
inline double pow_efficiency(const MarkovChain& chain, const std::vector<double>& v) {
  double critical = 0.0, removed = 0.0;
  for (std::size_t s = 0; s < chain.rows.size(); ++s) {
    if (v[s] <= 0.0) continue;
    critical += v[s] * chain.rows[s].pruned_critical;
    removed += v[s] * chain.rows[s].pruned_total;
  }
  if (removed <= 0.0)
    throw UndefinedEfficiencyError("no blocks are ever removed in the recurrent class");
  return critical / removed;
}

struct EfficiencyReport {
  double delta = 0.0;
  double rho = 0.0;
  long delay = 0;
  double theoretical = 0.0;
  double measured = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
  std::string error;  // non-empty when the solve for this delta failed
};

// For each delta: solve the mean field under the given policy (symmetric
// play) and measure stationary efficiency; report against 1/(1 + alpha *
// delay(rho)) for each rho. Solver failures are recorded per row and the
// sweep continues.
inline std::vector<EfficiencyReport> delay_sweep(const StateSpace& ss, const LocalPolicy& pol,
                                                 const ModelConfig& base,
                                                 const std::vector<double>& deltas,
                                                 const std::vector<double>& rhos,
                                                 FixedPointOptions opts = {}) {
  std::vector<EfficiencyReport> out;
  opts.mode = MuMode::kSymmetric;
  for (double d : deltas) {
    ModelConfig cfg = base;
    cfg.timing.delta = d;
    double measured = std::numeric_limits<double>::quiet_NaN();
    std::string error;
    try {
      FixedPointResult fp = fixed_point(ss, pol, cfg, opts);
      measured = pow_efficiency(fp.chain, fp.stationary);
    } catch (const std::exception& e) {
      error = e.what();
    }
    for (double rho : rhos) {
      EfficiencyReport r;
      r.delta = d;
      r.rho = rho;
      r.delay = delay_steps(d, rho);
      r.theoretical = 1.0 / (1.0 + cfg.timing.alpha * static_cast<double>(r.delay));
      r.measured = measured;
      r.abs_error = std::abs(measured - r.theoretical);
      r.rel_error = r.abs_error / r.theoretical;
      r.error = error;
      out.push_back(r);
    }
  }
  return out;
}

struct PolicyReport {
  std::uint64_t index = 0;
  std::string policy;
  bool is_equilibrium = false;
  double gap = 0.0;
  double efficiency = 0.0;
  long basin_count = -1;  // -1 until basin frequencies are computed
  std::string error;
};

struct ExhaustiveSummary {
  std::uint64_t total_policies = 0;
  int equilibria = 0;
  int failures = 0;
  std::uint64_t best_index = 0;
  double best_efficiency = 0.0;
  double second_best_efficiency = 0.0;
  bool best_is_lcr = false;
  bool unique_best = false;
};

// Every deterministic local policy at max_blocks <= 4: equilibrium flag and
// stationary efficiency under symmetric play. Larger horizons are rejected;
// the policy count grows super-exponentially (about 1.7e8 at five blocks).
inline std::vector<PolicyReport> exhaustive_search(const StateSpace& ss, const ModelConfig& cfg,
                                                   FixedPointOptions opts = {},
                                                   double tie_tol = 1e-9) {
  if (cfg.max_blocks > 4)
    throw ConfigError("exhaustive search is limited to max_blocks <= 4; the policy space "
                      "explodes combinatorially beyond that");
  const GraphCatalog& cat = ss.catalog();
  PolicySpace space(cat, cfg.max_blocks);
  const std::uint64_t total = space.count();
  std::vector<PolicyReport> reports(total);
  unsigned threads = opts.threads;
  FixedPointOptions inner = opts;
  inner.threads = 1;  // parallelism lives across policies
  parallel_for(static_cast<std::size_t>(total), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      PolicyReport& rep = reports[i];
      rep.index = i;
      LocalPolicy pol = space.at(cat, i);
      rep.policy = encode_policy(cat, cfg.max_blocks, pol);
      try {
        FixedPointResult fp = fixed_point(ss, pol, cfg, inner);
        try {
          rep.efficiency = pow_efficiency(fp.chain, fp.stationary);
        } catch (const UndefinedEfficiencyError&) {
          rep.efficiency = 0.0;  // nothing finalized and nothing reset: zero throughput
        }
        ClassActionValues cav = class_action_values(ss, pol, fp.mu, cfg, inner);
        double gap = 0.0;
        for (int n = 1; n <= cfg.max_blocks; ++n) {
          for (ClassId id : cat.classes_of_size(n)) {
            BlockMask full = (BlockMask{1} << cat.cls(id).size) - 1;
            int mine = policy_target(cat, id, full, pol);
            gap = std::max(gap, cav.best[id] - cav.q[id][mine]);
          }
        }
        rep.gap = gap;
        rep.is_equilibrium = gap <= tie_tol;
      } catch (const std::exception& e) {
        rep.error = e.what();
      }
    }
  });
  return reports;
}

inline ExhaustiveSummary summarize_exhaustive(const StateSpace& ss, const ModelConfig& cfg,
                                              const std::vector<PolicyReport>& reports) {
  ExhaustiveSummary s;
  s.total_policies = reports.size();
  const std::string lcr_enc =
      encode_policy(ss.catalog(), cfg.max_blocks, lcr_policy(ss.catalog()));
  double best = -1.0, second = -1.0;
  for (const PolicyReport& r : reports) {
    if (!r.error.empty()) {
      ++s.failures;
      continue;
    }
    if (!r.is_equilibrium) continue;
    ++s.equilibria;
    if (r.efficiency > best) {
      second = best;
      best = r.efficiency;
      s.best_index = r.index;
      s.best_is_lcr = r.policy == lcr_enc;
    } else if (r.efficiency > second) {
      second = r.efficiency;
    }
  }
  s.best_efficiency = best;
  s.second_best_efficiency = second;
  s.unique_best = best > second;
  return s;
}

struct BasinSummary {
  std::map<std::string, long> counts;  // converged-to policy encoding -> number of starts
  long non_convergent = 0;
};

// Run the best-response iteration from every policy and tally the attractors.
// Fills basin_count on the matching report rows.
inline BasinSummary basin_frequencies(const StateSpace& ss, const ModelConfig& cfg,
                                      std::vector<PolicyReport>& reports,
                                      FixedPointOptions opts = {}) {
  const GraphCatalog& cat = ss.catalog();
  PolicySpace space(cat, cfg.max_blocks);
  unsigned threads = opts.threads;
  FixedPointOptions inner = opts;
  inner.threads = 1;
  std::vector<std::string> target(reports.size());
  std::vector<char> failed(reports.size(), 0);
  parallel_for(reports.size(), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      LocalPolicy pol = space.at(cat, i);
      try {
        auto [result, trace] = best_response_iteration(ss, pol, cfg, inner);
        target[i] = encode_policy(cat, cfg.max_blocks, result);
      } catch (const std::exception&) {
        failed[i] = 1;
      }
    }
  });
  BasinSummary out;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (failed[i]) {
      ++out.non_convergent;
      continue;
    }
    ++out.counts[target[i]];
  }
  for (PolicyReport& r : reports) {
    auto it = out.counts.find(r.policy);
    r.basin_count = it == out.counts.end() ? 0 : it->second;
  }
  return out;
}

}  // namespace blockmfg
