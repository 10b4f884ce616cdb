#pragma once

// Agent-based validation oracle: N explicit agents, each with its own
// received-block set, simulated at block-step granularity. No mean field
// anywhere — the prune condition counts actual agent intentions, the block
// generator is drawn uniformly among agents that can act, and every missing
// (block, agent) pair gets an independent single-step delivery trial. The
// prune / reset / append order mirrors the transition kernel so the two
// routes are comparable.

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "blockmfg/policy.hpp"
#include "blockmfg/states.hpp"
#include "blockmfg/timing.hpp"

namespace blockmfg {

struct OracleParams {
  int n_agents = 1000;
  int max_blocks = 5;
  TimingParams timing{0.001, 0.01};
  double epsilon = 0.01;
  long block_steps = 100000;
  std::uint64_t seed = 1;
  int batches = 32;  // batch-means blocks for standard errors
  // target selection mirror; kSpread = each agent acts on its actual view
  ActionMass action_mass = ActionMass::kSpread;
};

// The finite population makes the prune condition a thresholded count. With
// the empirical trigger the simulator prunes on the realized intentions of
// the N agents; fluctuations of order 1/sqrt(N) around the threshold bias
// the long-run flow relative to the infinite-population chain. The
// mean-field trigger evaluates the same condition from a supplied mean
// field, which is the chain's own semantics; generation, ownership and
// delivery remain fully empirical either way.
enum class PruneTrigger { kEmpirical, kMeanField };

struct OracleCell {
  double estimate = 0.0;
  double std_error = 0.0;
  long samples = 0;
};

struct OracleReport {
  OracleCell efficiency;
  OracleCell prune_rate;
  OracleCell reset_rate;
  long blocks_removed = 0;
  long blocks_critical = 0;
  // per graph class: visit count and per-candidate local graph frequencies
  std::vector<long> graph_visits;
  std::vector<std::vector<OracleCell>> local_graph_freq;
};

// One-step row validation: place the tracked agent in an explicit state,
// draw the rest of the population from the mean field row of that graph,
// run a single mirrored block step with explicit agents and record the
// tracked agent's successor state. Estimates the same distribution the
// transition kernel computes in closed form for that (state, action) row.
inline std::vector<std::pair<StateId, double>> oracle_transition_check(
    const StateSpace& ss, StateId source, const LocalPolicy& pol,
    const std::vector<std::vector<double>>& mu_rows, const OracleParams& p, long replicas) {
  const GraphCatalog& cat = ss.catalog();
  const int N = p.n_agents;
  const double p1 = single_step_reception(p.timing);
  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const GameState& src = ss.state(source);
  const GraphClass& g0 = cat.cls(src.graph);

  // cumulative mass over concrete received subsets (candidates spread
  // uniformly across their orbits), null first
  std::vector<std::pair<double, BlockMask>> pop;
  {
    const auto& row = mu_rows[src.graph];
    double acc = row[0];
    pop.emplace_back(acc, 0);
    for (std::size_t c = 1; c < g0.candidates.size(); ++c) {
      const CandidateLocal& cand = g0.candidates[c];
      for (BlockMask m : cand.masks) {
        acc += row[c] / static_cast<double>(cand.masks.size());
        pop.emplace_back(acc, m);
      }
    }
  }

  std::map<StateId, long> counts;
  std::vector<BlockMask> recv(N);
  std::vector<int> targets(N);
  for (long rep = 0; rep < replicas; ++rep) {
    ClassId g = src.graph;
    const GraphClass* gc = &g0;
    int n = gc->size;
    recv[0] = src.recv;
    BlockMask own0 = src.own;
    for (int a = 1; a < N; ++a) {
      double x = unit(rng) * pop.back().first;
      auto it = std::lower_bound(pop.begin(), pop.end(), x,
                                 [](const auto& e, double v) { return e.first < v; });
      recv[a] = it->second;
    }

    int active = 0;
    std::vector<int> count(n, 0);
    for (int a = 0; a < N; ++a) {
      BlockMask lm = 0;
      if (recv[a] & 1) {
        lm = 1;
        for (int i = 1; i < n; ++i)
          if ((recv[a] >> i & 1) && (lm >> gc->parents[i] & 1)) lm |= BlockMask{1} << i;
      }
      targets[a] = lm == 0 ? -1 : policy_target(cat, g, lm, pol);
      if (targets[a] >= 0) {
        ++count[targets[a]];
        ++active;
      }
    }
    int prune_x = -1, prune_size = n + 1;
    for (int x = 1; x < n && active > 0; ++x) {
      int inside = 0;
      for (int b = 0; b < n; ++b)
        if (gc->subtree[x] >> b & 1) inside += count[b];
      if (inside > (1.0 - p.epsilon) * active && popcount32(gc->subtree[x]) < prune_size) {
        prune_size = popcount32(gc->subtree[x]);
        prune_x = x;
      }
    }
    bool was_reset = false;
    if (prune_x >= 0) {
      const GammaEntry& ge = gc->gamma[prune_x];
      for (int a = 0; a < N; ++a) {
        BlockMask r2 = 0;
        for (int i = 0; i < n; ++i)
          if ((ge.kept >> i & 1) && (recv[a] >> i & 1)) r2 |= BlockMask{1} << ge.relabel[i];
        recv[a] = r2;
      }
      BlockMask o2 = 0;
      for (int i = 0; i < n; ++i)
        if ((ge.kept >> i & 1) && (own0 >> i & 1)) o2 |= BlockMask{1} << ge.relabel[i];
      own0 = o2;
      for (int a = 0; a < N; ++a)
        targets[a] = (targets[a] >= 0 && (ge.kept >> targets[a] & 1)) ? ge.relabel[targets[a]] : -1;
      g = ge.cls;
      gc = &cat.cls(g);
      n = gc->size;
      active = 0;
      for (int a = 0; a < N; ++a)
        if (targets[a] >= 0) ++active;
    } else if (n == p.max_blocks) {
      was_reset = true;
      g = cat.classes_of_size(1)[0];
      recv[0] = 1;
      own0 = 0;
    }
    if (!was_reset) {
      if (active == 0) throw DegenerateStateError("oracle row check: no agent can act");
      int pick = static_cast<int>(unit(rng) * active);
      if (pick >= active) pick = active - 1;
      int generator = -1;
      for (int a = 0; a < N; ++a) {
        if (targets[a] < 0) continue;
        if (pick-- == 0) {
          generator = a;
          break;
        }
      }
      const ExtendEntry& ee = gc->extend[targets[generator]];
      {
        BlockMask r2 = 0, o2 = 0;
        for (int i = 0; i < n; ++i) {
          if (recv[0] >> i & 1) r2 |= BlockMask{1} << ee.relabel[i];
          if (own0 >> i & 1) o2 |= BlockMask{1} << ee.relabel[i];
        }
        recv[0] = r2;
        own0 = o2;
      }
      if (generator == 0) {
        recv[0] |= BlockMask{1} << ee.new_block;
        own0 |= BlockMask{1} << ee.new_block;
      }
      g = ee.cls;
      gc = &cat.cls(g);
      n = gc->size;
      BlockMask missing = ~recv[0] & ((BlockMask{1} << n) - 1);
      while (missing) {
        BlockMask bit = missing & (~missing + 1);
        if (unit(rng) < p1) recv[0] |= bit;
        missing ^= bit;
      }
    }
    ++counts[ss.id_of(g, recv[0], own0)];
  }

  std::vector<std::pair<StateId, double>> out;
  for (auto [sid, c] : counts)
    out.emplace_back(sid, static_cast<double>(c) / static_cast<double>(replicas));
  return out;
}

inline OracleReport monte_carlo_oracle(const GraphCatalog& cat, const OracleParams& p,
                                       const LocalPolicy& pol,
                                       PruneTrigger trigger = PruneTrigger::kEmpirical,
                                       const std::vector<std::vector<double>>* mu_rows = nullptr) {
  if (p.n_agents < 2 || p.n_agents > 10000) throw ConfigError("oracle: n_agents out of range");
  if (p.block_steps < 1 || p.block_steps > 10000000L)
    throw ConfigError("oracle: block_steps out of range");
  if (trigger == PruneTrigger::kMeanField && !mu_rows)
    throw ConfigError("oracle: mean-field prune trigger needs a mean field");
  const int N = p.n_agents;
  const int M = p.max_blocks;
  const double p1 = single_step_reception(p.timing);
  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // per class: the mixture mass each block attracts under the supplied mean
  // field (population part only), for the mean-field trigger
  std::vector<std::vector<double>> mf_mass;
  if (trigger == PruneTrigger::kMeanField) {
    mf_mass.resize(cat.num_classes());
    for (ClassId g = 0; g < cat.num_classes(); ++g) {
      const GraphClass& gc = cat.cls(g);
      if (gc.size > M) continue;
      mf_mass[g].assign(gc.size, 0.0);
      const auto& row = (*mu_rows)[g];
      for (std::size_t c = 1; c < gc.candidates.size(); ++c) {
        const CandidateLocal& cand = gc.candidates[c];
        if (row[c] <= 0.0) continue;
        if (p.action_mass == ActionMass::kConcentrate) {
          mf_mass[g][policy_target(cat, g, cand.rep_mask, pol)] += row[c];
        } else {
          double w = row[c] / static_cast<double>(cand.masks.size());
          for (BlockMask m : cand.masks) mf_mass[g][policy_target(cat, g, m, pol)] += w;
        }
      }
    }
  }

  // cached policy targets per (class, root-connected mask)
  std::vector<std::vector<int>> target_cache(cat.num_classes());
  auto target_of = [&](ClassId g, BlockMask lm) {
    auto& cache = target_cache[g];
    if (cache.empty()) cache.assign(std::size_t{1} << cat.cls(g).size, -2);
    int& t = cache[lm];
    if (t == -2) {
      BlockMask m = lm;
      if (p.action_mass == ActionMass::kConcentrate) {
        const MaskView& mv = cat.cls(g).mask_views.at(lm);
        m = cat.cls(g).candidates[mv.candidate].rep_mask;
      }
      t = policy_target(cat, g, m, pol);
    }
    return t;
  };

  ClassId g = cat.classes_of_size(1)[0];
  std::vector<BlockMask> recv(N, 1);  // everyone starts synchronized on genesis
  BlockMask own0 = 0;                 // agent 0 is the tracked agent

  OracleReport rep;
  rep.graph_visits.assign(cat.num_classes(), 0);
  std::vector<std::vector<long>> cand_counts(cat.num_classes());
  for (ClassId c = 0; c < cat.num_classes(); ++c)
    if (cat.cls(c).size <= M) cand_counts[c].assign(cat.cls(c).candidates.size(), 0);

  const int B = p.batches;
  std::vector<double> batch_removed(B, 0.0), batch_critical(B, 0.0), batch_prunes(B, 0.0),
      batch_resets(B, 0.0), batch_steps(B, 0.0);
  std::vector<std::vector<std::vector<long>>> batch_cand(B);
  std::vector<std::vector<long>> batch_gvisits(B);
  for (int b = 0; b < B; ++b) {
    batch_cand[b] = cand_counts;
    batch_gvisits[b].assign(cat.num_classes(), 0);
  }

  std::vector<int> targets(N);
  std::vector<int> count;
  for (long step = 0; step < p.block_steps; ++step) {
    const int batch = static_cast<int>(step * B / p.block_steps);
    const GraphClass* gc = &cat.cls(g);
    int n = gc->size;

    // intended targets
    int active = 0;
    count.assign(n, 0);
    for (int a = 0; a < N; ++a) {
      BlockMask lm = 0;
      if (recv[a] & 1) {
        lm = 1;
        for (int i = 1; i < n; ++i)
          if ((recv[a] >> i & 1) && (lm >> gc->parents[i] & 1)) lm |= BlockMask{1} << i;
      }
      if (lm == 0) {
        targets[a] = -1;
        continue;
      }
      targets[a] = target_of(g, lm);
      ++count[targets[a]];
      ++active;
    }

    // prune: smallest descendant subgraph holding more than (1-eps) of the
    // appending mass -- the realized intentions under the empirical trigger,
    // the tracked agent plus the mean-field mixture under the mirror trigger
    int prune_x = -1, prune_size = n + 1;
    if (trigger == PruneTrigger::kEmpirical) {
      if (active > 0) {
        for (int x = 1; x < n; ++x) {
          int inside = 0;
          for (int b2 = 0; b2 < n; ++b2)
            if (gc->subtree[x] >> b2 & 1) inside += count[b2];
          if (inside > (1.0 - p.epsilon) * active) {
            int sz = popcount32(gc->subtree[x]);
            if (sz < prune_size) {
              prune_size = sz;
              prune_x = x;
            }
          }
        }
      }
    } else {
      const std::vector<double>& nm = mf_mass[g];
      double w_ra = targets[0] >= 0 ? 1.0 / N : 0.0;
      double w_nra = static_cast<double>(N - 1) / N;
      double nra_total = 0.0;
      for (double m : nm) nra_total += m;
      double acting = w_ra + w_nra * nra_total;
      if (acting > 0.0) {
        for (int x = 1; x < n; ++x) {
          double inside = (targets[0] >= 0 && (gc->subtree[x] >> targets[0] & 1)) ? w_ra : 0.0;
          for (int b2 = 0; b2 < n; ++b2)
            if (gc->subtree[x] >> b2 & 1) inside += w_nra * nm[b2];
          if (inside / acting > 1.0 - p.epsilon) {
            int sz = popcount32(gc->subtree[x]);
            if (sz < prune_size) {
              prune_size = sz;
              prune_x = x;
            }
          }
        }
      }
    }

    bool was_reset = false;
    if (prune_x >= 0) {
      const GammaEntry& ge = gc->gamma[prune_x];
      rep.blocks_removed += n - prune_size;
      rep.blocks_critical += gc->ancestor_count(prune_x);
      batch_removed[batch] += n - prune_size;
      batch_critical[batch] += gc->ancestor_count(prune_x);
      batch_prunes[batch] += 1;
      for (int a = 0; a < N; ++a) {
        BlockMask r2 = 0;
        for (int i = 0; i < n; ++i)
          if ((ge.kept >> i & 1) && (recv[a] >> i & 1)) r2 |= BlockMask{1} << ge.relabel[i];
        recv[a] = r2;
      }
      {
        BlockMask o2 = 0;
        for (int i = 0; i < n; ++i)
          if ((ge.kept >> i & 1) && (own0 >> i & 1)) o2 |= BlockMask{1} << ge.relabel[i];
        own0 = o2;
      }
      for (int a = 0; a < N; ++a)
        targets[a] = (targets[a] >= 0 && (ge.kept >> targets[a] & 1)) ? ge.relabel[targets[a]] : -1;
      g = ge.cls;
      gc = &cat.cls(g);
      n = gc->size;
      active = 0;
      for (int a = 0; a < N; ++a)
        if (targets[a] >= 0) ++active;
    } else if (n == M) {
      // reset: abandon the stuck graph, everyone restarts on a fresh genesis
      rep.blocks_removed += M;
      batch_removed[batch] += M;
      batch_resets[batch] += 1;
      was_reset = true;
      g = cat.classes_of_size(1)[0];
      gc = &cat.cls(g);
      n = 1;
      std::fill(recv.begin(), recv.end(), BlockMask{1});
      own0 = 0;
    }

    if (!was_reset) {
      if (active == 0)
        throw DegenerateStateError("oracle: no agent can act");  // unreachable from a synced start
      // pick the generator uniformly among active agents
      int pick = static_cast<int>(unit(rng) * active);
      if (pick >= active) pick = active - 1;
      int generator = -1;
      for (int a = 0; a < N; ++a) {
        if (targets[a] < 0) continue;
        if (pick-- == 0) {
          generator = a;
          break;
        }
      }
      const ExtendEntry& ee = gc->extend[targets[generator]];
      const GraphClass* g2 = &cat.cls(ee.cls);
      BlockMask newbit = BlockMask{1} << ee.new_block;
      for (int a = 0; a < N; ++a) {
        BlockMask r2 = 0;
        for (int i = 0; i < n; ++i)
          if (recv[a] >> i & 1) r2 |= BlockMask{1} << ee.relabel[i];
        recv[a] = r2;
      }
      {
        BlockMask o2 = 0;
        for (int i = 0; i < n; ++i)
          if (own0 >> i & 1) o2 |= BlockMask{1} << ee.relabel[i];
        own0 = o2;
      }
      recv[generator] |= newbit;
      if (generator == 0) own0 |= newbit;
      g = ee.cls;
      gc = g2;
      n = gc->size;

      // reception trials for every missing (block, agent) pair
      const BlockMask all = (BlockMask{1} << n) - 1;
      for (int a = 0; a < N; ++a) {
        BlockMask missing = ~recv[a] & all;
        while (missing) {
          BlockMask bit = missing & (~missing + 1);
          if (unit(rng) < p1) recv[a] |= bit;
          missing ^= bit;
        }
      }
    }

    // sample the post-step configuration
    ++rep.graph_visits[g];
    ++batch_gvisits[batch][g];
    for (int a = 0; a < N; ++a) {
      BlockMask lm = 0;
      if (recv[a] & 1) {
        lm = 1;
        for (int i = 1; i < n; ++i)
          if ((recv[a] >> i & 1) && (lm >> gc->parents[i] & 1)) lm |= BlockMask{1} << i;
      }
      int cand = lm == 0 ? 0 : gc->mask_views.at(lm).candidate;
      ++cand_counts[g][cand];
      ++batch_cand[batch][g][cand];
    }
  }

  // ---- reduce ----
  auto batch_se = [&](auto num_of, auto den_of, double& est, double& se) {
    double num = 0.0, den = 0.0;
    std::vector<double> ratios;
    for (int b = 0; b < B; ++b) {
      num += num_of(b);
      den += den_of(b);
      if (den_of(b) > 0.0) ratios.push_back(num_of(b) / den_of(b));
    }
    est = den > 0.0 ? num / den : 0.0;
    if (ratios.size() >= 2) {
      double mean = 0.0;
      for (double r : ratios) mean += r;
      mean /= ratios.size();
      double var = 0.0;
      for (double r : ratios) var += (r - mean) * (r - mean);
      var /= (ratios.size() - 1);
      se = std::sqrt(var / ratios.size());
    } else {
      se = 0.0;
    }
  };

  double steps_per_batch = static_cast<double>(p.block_steps) / B;
  batch_se([&](int b) { return batch_critical[b]; }, [&](int b) { return batch_removed[b]; },
           rep.efficiency.estimate, rep.efficiency.std_error);
  rep.efficiency.samples = rep.blocks_removed;
  batch_se([&](int b) { return batch_prunes[b]; }, [&](int b) { return steps_per_batch; },
           rep.prune_rate.estimate, rep.prune_rate.std_error);
  rep.prune_rate.samples = p.block_steps;
  batch_se([&](int b) { return batch_resets[b]; }, [&](int b) { return steps_per_batch; },
           rep.reset_rate.estimate, rep.reset_rate.std_error);
  rep.reset_rate.samples = p.block_steps;

  rep.local_graph_freq.resize(cat.num_classes());
  for (ClassId c = 0; c < cat.num_classes(); ++c) {
    if (cand_counts[c].empty()) continue;
    rep.local_graph_freq[c].resize(cand_counts[c].size());
    for (std::size_t k = 0; k < cand_counts[c].size(); ++k) {
      OracleCell& cell = rep.local_graph_freq[c][k];
      batch_se([&](int b) { return static_cast<double>(batch_cand[b][c][k]); },
               [&](int b) { return static_cast<double>(batch_gvisits[b][c]) * N; }, cell.estimate,
               cell.std_error);
      cell.samples = rep.graph_visits[c] * N;
    }
  }

  return rep;
}

}  // namespace blockmfg
