#pragma once

// Value iteration under the fully observable value approximation, and the
// projection of a full policy back to a local policy (read off the states
// where the agent has received everything and owns nothing).

#include <cmath>
#include <vector>

#include "blockmfg/dynamics.hpp"

namespace blockmfg {

struct ValueIterationResult {
  std::vector<double> values;
  FullPolicy policy;
  int sweeps = 0;
  double residual = 0.0;
};

inline double action_value(const KernelRow& row, const std::vector<double>& values, double gamma) {
  double acc = 0.0;
  for (const Transition& t : row.transitions) acc += t.prob * values[t.to];
  return row.reward + gamma * acc;
}

// Jacobi sweeps against the previous table until the sup-norm change drops
// below tol. Greedy tie-break: lowest block index (actions are listed in
// ascending order), unless a preferred action per state is supplied, in
// which case the preferred action wins whenever it ties for the maximum
// within tie_tol.
inline ValueIterationResult value_iteration(const Kernel& kernel, double gamma, double tol = 1e-9,
                                            unsigned threads = 0, long max_sweeps = 500000,
                                            const FullPolicy* preferred = nullptr,
                                            double tie_tol = 1e-9) {
  const std::size_t n = kernel.rows.size();
  ValueIterationResult out;
  out.values.assign(n, 0.0);
  std::vector<double> next(n, 0.0);
  for (long sweep = 0; sweep < max_sweeps; ++sweep) {
    parallel_for(n, threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t s = lo; s < hi; ++s) {
        double best = -1.0;
        for (const KernelRow& row : kernel.rows[s]) {
          double q = action_value(row, out.values, gamma);
          if (q > best) best = q;
        }
        next[s] = best;
      }
    });
    double res = 0.0;
    for (std::size_t s = 0; s < n; ++s) res = std::max(res, std::abs(next[s] - out.values[s]));
    out.values.swap(next);
    out.residual = res;
    out.sweeps = static_cast<int>(sweep + 1);
    if (res < tol) break;
  }
  if (out.residual >= tol)
    throw IterationLimitError("value iteration failed to contract to tolerance");

  out.policy.action.assign(n, -1);
  for (std::size_t s = 0; s < n; ++s) {
    if (kernel.actions[s].size() == 1 && kernel.actions[s][0] == -1) continue;  // null local graph
    bool first = true;
    double best = 0.0;
    double preferred_q = 0.0;
    bool has_pref = false;
    for (std::size_t i = 0; i < kernel.rows[s].size(); ++i) {
      double q = action_value(kernel.rows[s][i], out.values, gamma);
      if (first || q > best) {
        first = false;
        best = q;
        out.policy.action[s] = kernel.actions[s][i];
      }
      if (preferred && kernel.actions[s][i] == preferred->action[s]) {
        has_pref = true;
        preferred_q = q;
      }
    }
    if (has_pref && preferred_q >= best - tie_tol) out.policy.action[s] = preferred->action[s];
  }
  return out;
}

// Local policy implied by a full policy: for each candidate class, the action
// taken in the state whose graph is that class with every block received and
// none owned, collapsed to its orbit representative.
inline LocalPolicy extract_local_policy(const StateSpace& ss, int max_blocks,
                                        const FullPolicy& full) {
  const GraphCatalog& cat = ss.catalog();
  LocalPolicy pol;
  pol.action.assign(cat.num_classes(), -1);
  for (int n = 1; n <= max_blocks; ++n) {
    for (ClassId id : cat.classes_of_size(n)) {
      StateId s = ss.full_info_state(id);
      int a = full.action[s];
      if (a < 0) throw ConfigError("full policy has no action at a full-information state");
      pol.action[id] = cat.cls(id).orbit_rep[a];
    }
  }
  return pol;
}

}  // namespace blockmfg
