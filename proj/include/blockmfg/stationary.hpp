#pragma once

// Stationary analysis of a built chain: reachable set, recurrent class
// detection (iterative Tarjan), and the stationary distribution restricted
// to the recurrent class reachable from the initial state. Small classes use
// a direct sparse solve; large ones use power iteration on the half-lazy
// chain (same fixed point, immune to periodicity).

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "blockmfg/dynamics.hpp"

namespace blockmfg {

inline std::vector<StateId> reachable_states(const MarkovChain& chain, StateId init) {
  std::vector<char> seen(chain.rows.size(), 0);
  std::vector<StateId> stack{init}, out;
  seen[init] = 1;
  while (!stack.empty()) {
    StateId s = stack.back();
    stack.pop_back();
    out.push_back(s);
    for (const Transition& t : chain.rows[s].transitions) {
      if (t.prob > 0.0 && !seen[t.to]) {
        seen[t.to] = 1;
        stack.push_back(t.to);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace detail {

// Tarjan over the reachable subgraph, iterative to cope with long chains.
// Returns the sink components (no edges leaving the component).
inline std::vector<std::vector<StateId>> sink_components(const MarkovChain& chain,
                                                         const std::vector<StateId>& reach) {
  const int n = static_cast<int>(reach.size());
  std::vector<int> local(chain.rows.size(), -1);
  for (int i = 0; i < n; ++i) local[reach[i]] = i;

  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<char> on_stack(n, 0);
  std::vector<int> stack;
  int next_index = 0, next_comp = 0;
  std::vector<std::vector<int>> comps;

  struct Frame {
    int v;
    std::size_t edge;
  };
  for (int start = 0; start < n; ++start) {
    if (index[start] >= 0) continue;
    std::vector<Frame> call{{start, 0}};
    while (!call.empty()) {
      Frame& f = call.back();
      int v = f.v;
      if (f.edge == 0) {
        index[v] = low[v] = next_index++;
        stack.push_back(v);
        on_stack[v] = 1;
      }
      const auto& ts = chain.rows[reach[v]].transitions;
      bool descended = false;
      while (f.edge < ts.size()) {
        const Transition& t = ts[f.edge++];
        if (t.prob <= 0.0) continue;
        int w = local[t.to];
        if (index[w] < 0) {
          call.push_back({w, 0});
          descended = true;
          break;
        }
        if (on_stack[w]) low[v] = std::min(low[v], index[w]);
      }
      if (descended) continue;
      if (low[v] == index[v]) {
        comps.emplace_back();
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = next_comp;
          comps.back().push_back(w);
        } while (w != v);
        ++next_comp;
      }
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
    }
  }

  std::vector<char> has_exit(comps.size(), 0);
  for (int v = 0; v < n; ++v)
    for (const Transition& t : chain.rows[reach[v]].transitions)
      if (t.prob > 0.0 && comp[local[t.to]] != comp[v]) has_exit[comp[v]] = 1;

  std::vector<std::vector<StateId>> sinks;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    if (has_exit[c]) continue;
    std::vector<StateId> members;
    members.reserve(comps[c].size());
    for (int v : comps[c]) members.push_back(reach[v]);
    std::sort(members.begin(), members.end());
    sinks.push_back(std::move(members));
  }
  return sinks;
}

inline double residual_inf(const MarkovChain& chain, const std::vector<StateId>& members,
                           const std::vector<int>& local, const std::vector<double>& v) {
  std::vector<double> next(members.size(), 0.0);
  for (std::size_t i = 0; i < members.size(); ++i)
    for (const Transition& t : chain.rows[members[i]].transitions) next[local[t.to]] += v[i] * t.prob;
  double r = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i) r = std::max(r, std::abs(next[i] - v[i]));
  return r;
}

inline bool direct_solve(const MarkovChain& chain, const std::vector<StateId>& members,
                         const std::vector<int>& local, std::vector<double>& v) {
  const int m = static_cast<int>(members.size());
  std::vector<Eigen::Triplet<double>> trips;
  for (int i = 0; i < m; ++i) {
    trips.emplace_back(0, i, 1.0);  // normalization row
    for (const Transition& t : chain.rows[members[i]].transitions) {
      int j = local[t.to];
      if (j != 0) trips.emplace_back(j, i, t.prob);
    }
    if (i != 0) trips.emplace_back(i, i, -1.0);
  }
  Eigen::SparseMatrix<double> A(m, m);
  A.setFromTriplets(trips.begin(), trips.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) return false;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  b[0] = 1.0;
  Eigen::VectorXd x = lu.solve(b);
  if (lu.info() != Eigen::Success) return false;
  v.assign(m, 0.0);
  double sum = 0.0;
  for (int i = 0; i < m; ++i) {
    v[i] = std::max(x[i], 0.0);
    sum += v[i];
  }
  if (!(sum > 0.0)) return false;
  for (double& x2 : v) x2 /= sum;
  return true;
}

inline bool power_iterate(const MarkovChain& chain, const std::vector<StateId>& members,
                          const std::vector<int>& local, std::vector<double>& v, double tol,
                          long max_iters) {
  const std::size_t m = members.size();
  if (v.empty()) v.assign(m, 1.0 / static_cast<double>(m));
  std::vector<double> next(m);
  for (long it = 0; it < max_iters; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (const Transition& t : chain.rows[members[i]].transitions)
        next[local[t.to]] += v[i] * t.prob;
    double res = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      res = std::max(res, std::abs(next[i] - v[i]));
      next[i] = 0.5 * (next[i] + v[i]);  // half-lazy step: keeps periodic chains converging
      sum += next[i];
    }
    for (std::size_t i = 0; i < m; ++i) v[i] = next[i] / sum;
    if (res < tol) return true;
  }
  return false;
}

}  // namespace detail

// v with v P = v, sum 1, residual < tol, supported on the recurrent class
// reachable from `init`. Throws ReducibleChainError when several recurrent
// classes are reachable (the long-run behavior would depend on sample paths).
inline std::vector<double> stationary_distribution(const MarkovChain& chain, StateId init,
                                                   double tol = 1e-12) {
  auto reach = reachable_states(chain, init);
  auto sinks = detail::sink_components(chain, reach);
  if (sinks.empty()) throw ReducibleChainError("no recurrent class found");
  if (sinks.size() > 1) {
    std::string msg = "multiple recurrent classes reachable from the initial state:";
    for (const auto& s : sinks)
      msg += " {size " + std::to_string(s.size()) + ", first state " + std::to_string(s[0]) + "}";
    throw ReducibleChainError(msg);
  }
  const std::vector<StateId>& members = sinks[0];
  std::vector<int> local(chain.rows.size(), -1);
  for (std::size_t i = 0; i < members.size(); ++i) local[members[i]] = static_cast<int>(i);

  std::vector<double> v;
  const std::size_t m = members.size();
  bool ok = false;
  if (m < 10000) {
    ok = detail::direct_solve(chain, members, local, v) &&
         detail::residual_inf(chain, members, local, v) < tol;
    if (!ok) ok = detail::power_iterate(chain, members, local, v, tol, 2000000);
  } else {
    ok = detail::power_iterate(chain, members, local, v, tol, 500000);
    if (!ok && m <= 60000) {
      ok = detail::direct_solve(chain, members, local, v) &&
           detail::residual_inf(chain, members, local, v) < tol;
      if (!ok) ok = detail::power_iterate(chain, members, local, v, tol, 500000);
    }
  }
  if (!ok)
    throw IterationLimitError("stationary distribution did not reach the residual target");

  std::vector<double> full(chain.rows.size(), 0.0);
  for (std::size_t i = 0; i < m; ++i) full[members[i]] = v[i];
  return full;
}

}  // namespace blockmfg
