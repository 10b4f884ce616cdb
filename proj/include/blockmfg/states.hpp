#pragma once

// Canonical game states: (global graph class, received flags, owned flags)
// for the representative agent, deduplicated under the joint action of the
// graph automorphism group on both flag vectors. Owning a block implies
// having received it, so each block carries one of three statuses.

#include <cstdint>
#include <map>
#include <vector>

#include "blockmfg/graphs.hpp"

namespace blockmfg {

using StateId = int;

struct GameState {
  ClassId graph = -1;
  BlockMask recv = 0;
  BlockMask own = 0;
};

class StateSpace {
 public:
  StateSpace(const GraphCatalog& catalog, int max_blocks)
      : catalog_(&catalog), max_blocks_(max_blocks) {
    if (max_blocks > catalog.max_blocks())
      throw ConfigError("state space larger than the graph catalog");
    build();
  }

  const GraphCatalog& catalog() const { return *catalog_; }
  int max_blocks() const { return max_blocks_; }
  int size() const { return static_cast<int>(states_.size()); }
  const GameState& state(StateId id) const { return states_[id]; }

  // Canonical id for any (graph, recv, own) triple; flags need not be in
  // canonical position.
  StateId id_of(ClassId g, BlockMask recv, BlockMask own) const {
    const GraphClass& c = catalog_->cls(g);
    if ((own & ~recv) != 0) throw ConfigError("owned block without reception");
    StateId id = lut_[g][(std::size_t{recv} << c.size) | own];
    return id;
  }

  StateId initial_state() const { return initial_; }

  // maximal root-connected received subset; 0 when the root is unreceived
  BlockMask local_mask(StateId id) const { return local_mask_[id]; }

  // candidate index of the state's local graph within its graph class
  // (0 = null candidate)
  int local_candidate(StateId id) const { return local_candidate_[id]; }

  // class of the local graph, -1 when null
  ClassId local_class(StateId id) const { return local_class_[id]; }

  // Information set of the representative agent: all states sharing the
  // observation (local graph class + ownership pattern on it, canonically).
  const std::vector<StateId>& sigma_class(StateId id) const {
    return sigma_classes_[sigma_of_[id]];
  }

  int states_with_graph(ClassId g) const { return per_class_count_[g]; }

  // id of the full-information unowned state (graph = l, all received,
  // nothing owned) — the representative state read during local-policy
  // extraction.
  StateId full_info_state(ClassId l) const {
    const GraphClass& c = catalog_->cls(l);
    return id_of(l, (BlockMask{1} << c.size) - 1, 0);
  }

 private:
  void build() {
    lut_.assign(catalog_->num_classes(), {});
    per_class_count_.assign(catalog_->num_classes(), 0);
    for (int n = 1; n <= max_blocks_; ++n) {
      for (ClassId gid : catalog_->classes_of_size(n)) {
        const GraphClass& g = catalog_->cls(gid);
        lut_[gid].assign(std::size_t{1} << (2 * g.size), -1);
        for (BlockMask recv = 0; recv < (BlockMask{1} << g.size); ++recv) {
          for (BlockMask own = 0; own <= recv; ++own) {
            if (own & ~recv) continue;
            std::size_t key = (std::size_t{recv} << g.size) | own;
            if (lut_[gid][key] >= 0) continue;
            auto [crecv, cown] = canonical_flags(g, recv, own);
            std::size_t ckey = (std::size_t{crecv} << g.size) | cown;
            if (lut_[gid][ckey] < 0) {
              lut_[gid][ckey] = static_cast<StateId>(states_.size());
              states_.push_back(GameState{gid, crecv, cown});
              ++per_class_count_[gid];
            }
            lut_[gid][key] = lut_[gid][ckey];
          }
        }
      }
    }
    initial_ = id_of(catalog_->classes_of_size(1)[0], 1, 0);

    local_mask_.resize(states_.size());
    local_candidate_.resize(states_.size());
    local_class_.resize(states_.size());
    sigma_of_.resize(states_.size());
    std::map<std::pair<ClassId, BlockMask>, int> sigma_index;
    for (StateId s = 0; s < size(); ++s) {
      const GameState& st = states_[s];
      const GraphClass& g = catalog_->cls(st.graph);
      BlockMask lm = compute_local_mask(g, st.recv);
      local_mask_[s] = lm;
      if (lm == 0) {
        local_candidate_[s] = 0;
        local_class_[s] = -1;
      } else {
        const MaskView& mv = g.mask_views.at(lm);
        local_candidate_[s] = mv.candidate;
        local_class_[s] = mv.cls;
      }
      auto key = sigma_key(g, lm, st.own);
      auto [it, inserted] = sigma_index.emplace(key, static_cast<int>(sigma_classes_.size()));
      if (inserted) sigma_classes_.push_back({});
      sigma_of_[s] = it->second;
      sigma_classes_[it->second].push_back(s);
    }
  }

  static BlockMask compute_local_mask(const GraphClass& g, BlockMask recv) {
    if (!(recv & 1)) return 0;
    BlockMask m = 1;
    for (int i = 1; i < g.size; ++i)  // parents precede children in canonical order
      if ((recv >> i & 1) && (m >> g.parents[i] & 1)) m |= BlockMask{1} << i;
    return m;
  }

  static std::pair<BlockMask, BlockMask> canonical_flags(const GraphClass& g, BlockMask recv,
                                                         BlockMask own) {
    std::uint64_t best = ~std::uint64_t{0};
    BlockMask br = recv, bo = own;
    for (const auto& a : g.automorphisms) {
      BlockMask r2 = 0, o2 = 0;
      for (int i = 0; i < g.size; ++i) {
        if (recv >> i & 1) r2 |= BlockMask{1} << a[i];
        if (own >> i & 1) o2 |= BlockMask{1} << a[i];
      }
      std::uint64_t key = (std::uint64_t{r2} << g.size) | o2;
      if (key < best) {
        best = key;
        br = r2;
        bo = o2;
      }
    }
    return {br, bo};
  }

  // observation key: local class plus ownership projected into the local
  // graph's canonical frame, minimized over the local automorphisms
  std::pair<ClassId, BlockMask> sigma_key(const GraphClass& g, BlockMask lm, BlockMask own) const {
    if (lm == 0) return {-1, 0};
    const MaskView& mv = g.mask_views.at(lm);
    const GraphClass& lc = catalog_->cls(mv.cls);
    BlockMask local_own = 0;
    for (int j = 0; j < lc.size; ++j)
      if (own >> mv.embed[j] & 1) local_own |= BlockMask{1} << j;
    BlockMask best = local_own;
    for (const auto& a : lc.automorphisms) {
      BlockMask o2 = 0;
      for (int i = 0; i < lc.size; ++i)
        if (local_own >> i & 1) o2 |= BlockMask{1} << a[i];
      best = std::min(best, o2);
    }
    return {mv.cls, best};
  }

  const GraphCatalog* catalog_;
  int max_blocks_;
  StateId initial_ = -1;
  std::vector<GameState> states_;
  std::vector<std::vector<StateId>> lut_;  // per class: (recv << n | own) -> id
  std::vector<int> per_class_count_;
  std::vector<BlockMask> local_mask_;
  std::vector<int> local_candidate_;
  std::vector<ClassId> local_class_;
  std::vector<int> sigma_of_;
  std::vector<std::vector<StateId>> sigma_classes_;
};

}  // namespace blockmfg
