#pragma once

// Mean field fixed point and equilibrium machinery.
//
// The mean field consistent with a population policy is computed by iterating
// mu -> extract(stationary(chain(mu))). Two inner modes exist: the agent can
// best-respond inside the loop (the algorithmic reading) or follow the
// population policy symmetrically; at a fixed point of the outer best-response
// iteration both coincide replay for replay, because ties always retain the
// incumbent action.

#include <set>
#include <string>
#include <vector>

#include "blockmfg/solver.hpp"
#include "blockmfg/stationary.hpp"

namespace blockmfg {

enum class MuMode {
  kBestResponse,  // re-solve the agent's policy every mu iteration
  kSymmetric,     // agent plays the population policy
};

struct FixedPointOptions {
  MuMode mode = MuMode::kBestResponse;
  double tol = 1e-8;
  int max_iters = 200;
  double visited_floor = 1e-7;  // graph mass below this keeps the fallback row
  double stationary_tol = 1e-12;
  double tie_tol = 1e-9;
  unsigned threads = 0;
};

struct FixedPointResult {
  MeanField mu;
  MarkovChain chain;               // rebuilt under the converged mu
  std::vector<double> stationary;  // stationary distribution of that chain
  std::vector<double> residuals;   // sup-norm change per iteration
  int iterations = 0;
};

inline FixedPointResult fixed_point(const StateSpace& ss, const LocalPolicy& nra,
                                    const ModelConfig& cfg, FixedPointOptions opts = {}) {
  validate_policy(ss.catalog(), cfg.max_blocks, nra);
  MeanField mu0 = initial_estimate(ss.catalog(), cfg.max_blocks, cfg.timing);
  MeanField mu = mu0;
  FullPolicy symmetric = lift_policy(ss, nra);
  FixedPointResult out;
  bool damp = false;
  double prev_res = -1.0;

  // In best-response mode the agent re-optimizes against each intermediate
  // mu; exact ties keep the population action so an equilibrium policy
  // reproduces the symmetric chain.
  auto step_chain = [&](const MeanField& m) {
    KernelBuilder kb(ss, nra, m, cfg);
    if (opts.mode == MuMode::kSymmetric) return kb.build_chain(symmetric, opts.threads);
    Kernel k = kb.build_kernel(opts.threads);
    ValueIterationResult vi =
        value_iteration(k, cfg.gamma, 1e-9, opts.threads, 500000, &symmetric, opts.tie_tol);
    return kb.build_chain(vi.policy, opts.threads);
  };

  for (int it = 0; it < opts.max_iters; ++it) {
    MarkovChain chain = step_chain(mu);
    std::vector<double> v = stationary_distribution(chain, ss.initial_state(), opts.stationary_tol);
    MeanField next = extract_mean_field(ss, v, mu0, opts.visited_floor);
    double res = next.sup_distance(mu);
    out.residuals.push_back(res);
    out.iterations = it + 1;
    if (res < opts.tol) {
      out.mu = std::move(next);
      // rebuild so the returned chain and distribution reflect the returned mu
      out.chain = step_chain(out.mu);
      out.stationary = stationary_distribution(out.chain, ss.initial_state(), opts.stationary_tol);
      return out;
    }
    if (prev_res >= 0.0 && res >= prev_res) damp = true;  // oscillation guard
    prev_res = res;
    if (damp) {
      for (std::size_t g = 0; g < mu.rows.size(); ++g)
        for (std::size_t c = 0; c < mu.rows[g].size(); ++c)
          mu.rows[g][c] = 0.5 * (mu.rows[g][c] + next.rows[g][c]);
    } else {
      mu = std::move(next);
    }
  }
  throw IterationLimitError("mean field iteration hit the cap without converging", out.residuals);
}

// Action values of every block at the full-information state of each class,
// under the agent's optimal value function for (nra policy, mu).
struct ClassActionValues {
  std::vector<std::vector<double>> q;  // per class id, per block index
  std::vector<double> best;            // per class id
};

inline ClassActionValues class_action_values(const StateSpace& ss, const LocalPolicy& nra,
                                             const MeanField& mu, const ModelConfig& cfg,
                                             const FixedPointOptions& opts) {
  const GraphCatalog& cat = ss.catalog();
  KernelBuilder kb(ss, nra, mu, cfg);
  Kernel k = kb.build_kernel(opts.threads);
  FullPolicy symmetric = lift_policy(ss, nra);
  ValueIterationResult vi =
      value_iteration(k, cfg.gamma, 1e-9, opts.threads, 500000, &symmetric, opts.tie_tol);
  ClassActionValues out;
  out.q.resize(cat.num_classes());
  out.best.assign(cat.num_classes(), 0.0);
  for (int n = 1; n <= cfg.max_blocks; ++n) {
    for (ClassId id : cat.classes_of_size(n)) {
      StateId s = ss.full_info_state(id);
      out.q[id].assign(cat.cls(id).size, 0.0);
      bool first = true;
      for (std::size_t i = 0; i < k.actions[s].size(); ++i) {
        double q = action_value(k.rows[s][i], vi.values, cfg.gamma);
        out.q[id][k.actions[s][i]] = q;
        if (first || q > out.best[id]) out.best[id] = q;
        first = false;
      }
    }
  }
  return out;
}

struct BestResponseTrace {
  std::vector<std::string> policies;  // encoded policy per outer iteration (including start)
  int outer_iterations = 0;
};

// Iterated best response over local policies. One step: solve the mean
// field of the incumbent, value-iterate, and re-derive the local policy from
// the full-information states; a class keeps its incumbent action whenever
// that action still attains the optimal value within tie_tol (deviations
// need a strict improvement). Convergence = the step returns the incumbent.
inline std::pair<LocalPolicy, BestResponseTrace> best_response_iteration(
    const StateSpace& ss, const LocalPolicy& initial, const ModelConfig& cfg,
    FixedPointOptions opts = {}, int max_outer = 50) {
  const GraphCatalog& cat = ss.catalog();
  LocalPolicy current = initial;
  BestResponseTrace trace;
  trace.policies.push_back(encode_policy(cat, cfg.max_blocks, current));
  std::set<std::string> seen{trace.policies.back()};
  for (int outer = 0; outer < max_outer; ++outer) {
    FixedPointResult fp = fixed_point(ss, current, cfg, opts);
    ClassActionValues cav = class_action_values(ss, current, fp.mu, cfg, opts);
    LocalPolicy next = current;
    for (int n = 1; n <= cfg.max_blocks; ++n) {
      for (ClassId id : cat.classes_of_size(n)) {
        const GraphClass& g = cat.cls(id);
        BlockMask full = (BlockMask{1} << g.size) - 1;
        int incumbent = policy_target(cat, id, full, current);
        if (cav.q[id][incumbent] >= cav.best[id] - opts.tie_tol) continue;
        int arg = 0;
        for (int x = 1; x < g.size; ++x)
          if (cav.q[id][x] > cav.q[id][arg]) arg = x;
        next.action[id] = g.orbit_rep[arg];
      }
    }
    trace.outer_iterations = outer + 1;
    if (next == current) return {current, trace};
    std::string enc = encode_policy(cat, cfg.max_blocks, next);
    trace.policies.push_back(enc);
    if (!seen.insert(enc).second)
      throw PolicyCycleError("best response cycled through " +
                             std::to_string(trace.policies.size()) + " policies without converging");
    current = std::move(next);
  }
  throw PolicyCycleError("best response iteration hit the outer cap");
}

struct EquilibriumReport {
  bool is_equilibrium = false;
  double gap = 0.0;  // worst shortfall of the candidate action against the best response
};

// Tie-tolerant equilibrium test: under the mean field the candidate induces
// (with everyone, agent included, following it), the candidate's action must
// attain the optimal action value at every full-information state.
inline EquilibriumReport is_equilibrium(const StateSpace& ss, const LocalPolicy& candidate,
                                        const ModelConfig& cfg, FixedPointOptions opts = {},
                                        double tie_tol = 1e-9) {
  const GraphCatalog& cat = ss.catalog();
  opts.mode = MuMode::kSymmetric;
  opts.tie_tol = tie_tol;
  FixedPointResult fp = fixed_point(ss, candidate, cfg, opts);
  ClassActionValues cav = class_action_values(ss, candidate, fp.mu, cfg, opts);
  EquilibriumReport rep;
  for (int n = 1; n <= cfg.max_blocks; ++n) {
    for (ClassId id : cat.classes_of_size(n)) {
      BlockMask full = (BlockMask{1} << cat.cls(id).size) - 1;
      int mine = policy_target(cat, id, full, candidate);
      rep.gap = std::max(rep.gap, cav.best[id] - cav.q[id][mine]);
    }
  }
  rep.is_equilibrium = rep.gap <= tie_tol;
  return rep;
}

}  // namespace blockmfg
