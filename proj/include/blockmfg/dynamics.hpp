#pragma once

// Transition kernel over game states. One block step per transition:
//
//   1. resolve the representative agent's action on its local graph;
//   2. evaluate the prune condition on the current graph (threshold 1-eps on
//      the kappa-normalized append mass into each descendant subgraph); a
//      prune finalizes the ancestors of the prune point, pays the reward and
//      replaces the graph by the subgraph;
//   3. if no prune fired and the graph already holds max_blocks blocks, the
//      state resets to the initialization state with probability 1;
//   4. otherwise exactly one block is appended: the per-block append mass
//      mixes the agent's action (weight 1/N) with the non-representative
//      mixture ((N-1)/N), renormalized over the acting mass; ownership of the
//      new block splits proportionally, and every still-missing block gets an
//      independent single-step reception trial.
//
// Successors are canonicalized and merged, so every row is a distribution.

#include <optional>
#include <vector>

#include "blockmfg/mean_field.hpp"
#include "blockmfg/policy.hpp"

namespace blockmfg {

struct ModelConfig {
  int n_agents = 1000;
  int max_blocks = 5;
  TimingParams timing{0.001, 0.01};
  double gamma = 0.99;
  double epsilon = 0.01;
  double reward_per_block = 1.0;
  ActionMass action_mass = ActionMass::kSpread;

  void validate() const {
    if (n_agents < 2) throw ConfigError("n_agents must be >= 2");
    if (max_blocks < 2 || max_blocks > kGraphHardCap)
      throw ConfigError("max_blocks must be in [2, " + std::to_string(kGraphHardCap) + "]");
    timing.validate();
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must be in [0,1)");
    if (!(epsilon >= 0.0 && epsilon < 0.5)) throw ConfigError("epsilon must be in [0,0.5)");
    if (!(reward_per_block > 0.0)) throw ConfigError("reward must be positive");
  }
};

struct Transition {
  StateId to;
  double prob;
};

// Expansion of one (state, action) pair. The prune outcome is decided before
// the append, so reward and removal counts are shared by every successor.
struct KernelRow {
  double reward = 0.0;
  int pruned_critical = 0;  // finalized critical-path blocks (ancestors of the prune point)
  int pruned_total = 0;     // blocks permanently removed (prune or reset)
  bool is_reset = false;
  int prune_target = -1;    // block index in the source graph, -1 = no prune
  std::vector<Transition> transitions;

  double prob_sum() const {
    double s = 0.0;
    for (const auto& t : transitions) s += t.prob;
    return s;
  }
};

struct MarkovChain {
  std::vector<int> action;     // RA action per state (-1 = none)
  std::vector<KernelRow> rows;  // one row per state
};

// All-action kernel for value iteration.
struct Kernel {
  std::vector<std::vector<int>> actions;           // per state
  std::vector<std::vector<KernelRow>> rows;        // parallel to actions
};

// Per-block append mass of the non-representative population for one graph
// class: candidate mass spreads uniformly over the concrete subsets of its
// orbit, each targeting its own policy block. Sums to 1 - mu(null).
inline std::vector<double> nra_action_distribution(const GraphCatalog& cat, ClassId gid,
                                                   const LocalPolicy& pol,
                                                   const std::vector<double>& mu_row,
                                                   ActionMass convention = ActionMass::kSpread) {
  const GraphClass& g = cat.cls(gid);
  std::vector<double> mass(g.size, 0.0);
  for (std::size_t c = 1; c < g.candidates.size(); ++c) {
    const CandidateLocal& cand = g.candidates[c];
    if (mu_row[c] <= 0.0) continue;
    if (convention == ActionMass::kConcentrate) {
      mass[policy_target(cat, gid, cand.rep_mask, pol)] += mu_row[c];
    } else {
      double w = mu_row[c] / static_cast<double>(cand.masks.size());
      for (BlockMask m : cand.masks) mass[policy_target(cat, gid, m, pol)] += w;
    }
  }
  return mass;
}

// Paper-form ownership probability at the level of a successor class:
// indicator of the agent's action inside Phi over the total mass inside Phi.
inline double ownership_split(const GraphCatalog& cat, ClassId g, int action, ClassId g_next,
                              const LocalPolicy& pol, const std::vector<double>& mu_row,
                              const ModelConfig& cfg) {
  BlockMask phi = cat.phi(g, g_next);
  double ra = (action >= 0 && (phi >> action & 1)) ? 1.0 : 0.0;
  if (ra == 0.0) return 0.0;
  std::vector<double> nra = nra_action_distribution(cat, g, pol, mu_row, cfg.action_mass);
  double nmass = 0.0;
  for (int x = 0; x < cat.cls(g).size; ++x)
    if (phi >> x & 1) nmass += nra[x];
  return ra / (ra + static_cast<double>(cfg.n_agents - 1) * nmass);
}

// Reception outcomes for a set of missing blocks: every zero bit flips
// independently with probability p1.
inline std::vector<std::pair<BlockMask, double>> reception_split(BlockMask missing, double p1) {
  std::vector<std::pair<BlockMask, double>> out;
  // iterate subsets of `missing`
  BlockMask sub = missing;
  for (;;) {
    double p = 1.0;
    for (BlockMask rest = missing; rest;) {
      BlockMask bit = rest & (~rest + 1);
      p *= (sub & bit) ? p1 : 1.0 - p1;
      rest ^= bit;
    }
    out.emplace_back(sub, p);
    if (sub == 0) break;
    sub = (sub - 1) & missing;
  }
  return out;
}

// Critical-path blocks owed to the agent when pruning at x: owned ancestors.
inline int reward_count(const GraphClass& g, BlockMask own, int prune_x) {
  return popcount32(g.ancestor_mask[prune_x] & own);
}

class KernelBuilder {
 public:
  KernelBuilder(const StateSpace& ss, const LocalPolicy& nra_policy, const MeanField& mu,
                const ModelConfig& cfg)
      : ss_(&ss), cat_(&ss.catalog()), pol_(&nra_policy), cfg_(cfg) {
    cfg.validate();
    p1_ = single_step_reception(cfg.timing);
    nra_mass_.resize(cat_->num_classes());
    nra_total_.assign(cat_->num_classes(), 0.0);
    for (int n = 1; n <= cfg.max_blocks; ++n) {
      for (ClassId gid : cat_->classes_of_size(n)) {
        nra_mass_[gid] =
            nra_action_distribution(*cat_, gid, nra_policy, mu.row(gid), cfg.action_mass);
        for (double m : nra_mass_[gid]) nra_total_[gid] += m;
      }
    }
  }

  const ModelConfig& config() const { return cfg_; }
  const StateSpace& states() const { return *ss_; }

  // Prune point implied by (state, action), or -1. The root never counts:
  // its subgraph is the whole graph and pruning there removes nothing.
  int evaluate_prune(StateId s, int action) const {
    const GameState& st = ss_->state(s);
    const GraphClass& g = cat_->cls(st.graph);
    double w_ra = action >= 0 ? 1.0 / cfg_.n_agents : 0.0;
    double w_nra = static_cast<double>(cfg_.n_agents - 1) / cfg_.n_agents;
    double acting = w_ra + w_nra * nra_total_[st.graph];
    if (acting <= 0.0) return -1;  // nobody acts; the append step will reject
    const std::vector<double>& nm = nra_mass_[st.graph];
    int best = -1;
    int best_size = g.size + 1;
    for (int x = 1; x < g.size; ++x) {
      BlockMask sub = g.subtree[x];
      double mass = (action >= 0 && (sub >> action & 1)) ? w_ra : 0.0;
      for (int b = 0; b < g.size; ++b)
        if (sub >> b & 1) mass += w_nra * nm[b];
      mass /= acting;
      if (mass > 1.0 - cfg_.epsilon) {
        int size = popcount32(sub);
        if (size < best_size) {
          best_size = size;
          best = x;
        }
      }
    }
    return best;
  }

  KernelRow expand(StateId s, int action) const {
    KernelRow row;
    const GameState& st = ss_->state(s);
    ClassId gid = st.graph;
    BlockMask recv = st.recv, own = st.own;

    int prune_x = evaluate_prune(s, action);
    row.prune_target = prune_x;
    if (prune_x >= 0) {
      const GraphClass& g = cat_->cls(gid);
      row.pruned_critical = g.ancestor_count(prune_x);
      row.pruned_total = g.size - popcount32(g.subtree[prune_x]);
      row.reward = cfg_.reward_per_block * reward_count(g, own, prune_x);
      const GammaEntry& ge = g.gamma[prune_x];
      BlockMask r2 = 0, o2 = 0;
      for (int i = 0; i < g.size; ++i) {
        if (!(ge.kept >> i & 1)) continue;
        if (recv >> i & 1) r2 |= BlockMask{1} << ge.relabel[i];
        if (own >> i & 1) o2 |= BlockMask{1} << ge.relabel[i];
      }
      action = (action >= 0 && (ge.kept >> action & 1)) ? ge.relabel[action] : -1;
      gid = ge.cls;
      recv = r2;
      own = o2;
    } else if (cat_->cls(gid).size == cfg_.max_blocks) {
      row.is_reset = true;
      row.pruned_total = cfg_.max_blocks;
      row.transitions.push_back({ss_->initial_state(), 1.0});
      return row;
    }

    append_from(gid, recv, own, action, row);
    return row;
  }

  std::vector<int> available_actions(StateId s) const {
    BlockMask lm = ss_->local_mask(s);
    if (lm == 0) return {-1};
    std::vector<int> acts;
    for (int x = 0; x < cat_->cls(ss_->state(s).graph).size; ++x)
      if (lm >> x & 1) acts.push_back(x);
    return acts;
  }

  MarkovChain build_chain(const FullPolicy& ra, unsigned threads = 0) const {
    MarkovChain chain;
    chain.action = ra.action;
    chain.rows.resize(ss_->size());
    parallel_for(ss_->size(), threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t s = lo; s < hi; ++s)
        chain.rows[s] = expand(static_cast<StateId>(s), ra.action[s]);
    });
    return chain;
  }

  Kernel build_kernel(unsigned threads = 0) const {
    Kernel k;
    k.actions.resize(ss_->size());
    k.rows.resize(ss_->size());
    parallel_for(ss_->size(), threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t s = lo; s < hi; ++s) {
        k.actions[s] = available_actions(static_cast<StateId>(s));
        k.rows[s].reserve(k.actions[s].size());
        for (int a : k.actions[s]) k.rows[s].push_back(expand(static_cast<StateId>(s), a));
      }
    });
    return k;
  }

  // Distribution over (append block, successor class) from a post-prune
  // graph, with the kappa renormalization over the acting mass.
  struct AppendOutcome {
    int block;
    ClassId next_cls;
    double prob;
    double ra_share;  // probability the agent generated the block, given this append
  };
  std::vector<AppendOutcome> append_distribution(ClassId gid, int action) const {
    const GraphClass& g = cat_->cls(gid);
    double w_ra = action >= 0 ? 1.0 / cfg_.n_agents : 0.0;
    double w_nra = static_cast<double>(cfg_.n_agents - 1) / cfg_.n_agents;
    double acting = w_ra + w_nra * nra_total_[gid];
    if (acting <= 0.0)
      throw DegenerateStateError("no agent can act: representative idle and the mean field is all-null for class " +
                                 g.name);
    const std::vector<double>& nm = nra_mass_[gid];
    std::vector<AppendOutcome> out;
    for (int x = 0; x < g.size; ++x) {
      double m_ra = action == x ? w_ra : 0.0;
      double m_nra = w_nra * nm[x];
      double p = (m_ra + m_nra) / acting;
      if (p <= 0.0) continue;
      out.push_back({x, g.extend[x].cls, p, m_ra / (m_ra + m_nra)});
    }
    return out;
  }

 private:
  void append_from(ClassId gid, BlockMask recv, BlockMask own, int action, KernelRow& row) const {
    const GraphClass& g = cat_->cls(gid);
    auto outcomes = append_distribution(gid, action);
    std::vector<std::pair<StateId, double>> acc;
    for (const AppendOutcome& oc : outcomes) {
      const ExtendEntry& ee = g.extend[oc.block];
      const GraphClass& g2 = cat_->cls(ee.cls);
      BlockMask base_r = 0, base_o = 0;
      for (int i = 0; i < g.size; ++i) {
        if (recv >> i & 1) base_r |= BlockMask{1} << ee.relabel[i];
        if (own >> i & 1) base_o |= BlockMask{1} << ee.relabel[i];
      }
      BlockMask newbit = BlockMask{1} << ee.new_block;
      for (int ra_gen = 0; ra_gen < 2; ++ra_gen) {
        double pg = oc.prob * (ra_gen ? oc.ra_share : 1.0 - oc.ra_share);
        if (pg <= 0.0) continue;
        BlockMask r0 = base_r | (ra_gen ? newbit : 0);
        BlockMask o0 = base_o | (ra_gen ? newbit : 0);
        BlockMask missing = ~r0 & ((BlockMask{1} << g2.size) - 1);
        for (const auto& [flip, pr] : reception_split(missing, p1_)) {
          acc.emplace_back(ss_->id_of(ee.cls, r0 | flip, o0), pg * pr);
        }
      }
    }
    std::sort(acc.begin(), acc.end());
    for (const auto& [sid, p] : acc) {
      if (!row.transitions.empty() && row.transitions.back().to == sid)
        row.transitions.back().prob += p;
      else
        row.transitions.push_back({sid, p});
    }
  }

  const StateSpace* ss_;
  const GraphCatalog* cat_;
  const LocalPolicy* pol_;
  ModelConfig cfg_;
  double p1_ = 0.0;
  std::vector<std::vector<double>> nra_mass_;
  std::vector<double> nra_total_;
};

}  // namespace blockmfg
