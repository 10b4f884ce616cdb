#pragma once

// Local policies map a local block graph (a graph class) to the block that
// gets appended to; full policies map a game state to a block. Actions are
// always orbit representatives: topologically identical blocks collapse to
// one choice, and the member actually targeted inside a concrete labeled
// view is the lowest-index block of the orbit's image ("lowest hash").

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "blockmfg/states.hpp"

namespace blockmfg {

struct LocalPolicy {
  // action[c] = chosen orbit-representative block of class c; -1 for classes
  // outside the policy's horizon
  std::vector<int> action;

  bool operator==(const LocalPolicy&) const = default;
};

// How the append mass of a candidate local graph maps onto concrete blocks.
// kSpread distributes it uniformly over the orbit of received subsets the
// candidate aggregates (each subset targets its own view's policy block);
// kConcentrate puts everything on the representative subset's target.
enum class ActionMass { kSpread, kConcentrate };

struct FullPolicy {
  std::vector<int> action;  // per state id; -1 = no action (null local graph)
};

namespace detail {
// Block of the concrete root-connected view `mask` targeted under `pol`:
// lowest global index in the image of the policy's action orbit.
inline int mask_target_impl(const GraphCatalog& cat, const GraphClass& g, BlockMask mask,
                            const LocalPolicy& pol) {
  const MaskView& mv = g.mask_views.at(mask);
  const GraphClass& lc = cat.cls(mv.cls);
  int a = pol.action[mv.cls];
  int best = -1;
  for (int j = 0; j < lc.size; ++j) {
    if (lc.orbit[j] != lc.orbit[a]) continue;
    int global = mv.embed[j];
    if (best < 0 || global < best) best = global;
  }
  return best;
}
}  // namespace detail

inline int policy_target(const GraphCatalog& cat, ClassId g, BlockMask mask,
                         const LocalPolicy& pol) {
  if (mask == 0) return -1;
  const GraphClass& gc = cat.cls(g);
  int t = detail::mask_target_impl(cat, gc, mask, pol);
  if (t < 0) throw ConfigError("policy undefined for local class " + cat.cls(gc.mask_views.at(mask).cls).name);
  return t;
}

inline void validate_policy(const GraphCatalog& cat, int max_blocks, const LocalPolicy& pol) {
  for (int n = 1; n <= max_blocks; ++n) {
    for (ClassId id : cat.classes_of_size(n)) {
      const GraphClass& c = cat.cls(id);
      if (id >= static_cast<ClassId>(pol.action.size()) || pol.action[id] < 0)
        throw ConfigError("policy missing an action for class " + c.name);
      int a = pol.action[id];
      if (a >= c.size) throw ConfigError("policy action out of range for class " + c.name);
      if (c.orbit_rep[a] != a)
        throw ConfigError("policy action must be the orbit representative in class " + c.name);
    }
  }
}

inline LocalPolicy lcr_policy(const GraphCatalog& cat) {
  LocalPolicy p;
  p.action.assign(cat.num_classes(), -1);
  for (int id = 0; id < cat.num_classes(); ++id) p.action[id] = cat.cls(id).lcr_tip();
  return p;
}

inline LocalPolicy root_policy(const GraphCatalog& cat) {
  LocalPolicy p;
  p.action.assign(cat.num_classes(), 0);
  return p;
}

inline LocalPolicy random_policy(const GraphCatalog& cat, std::mt19937_64& rng) {
  LocalPolicy p;
  p.action.assign(cat.num_classes(), -1);
  for (int id = 0; id < cat.num_classes(); ++id) {
    const GraphClass& c = cat.cls(id);
    std::vector<int> reps;
    for (int x = 0; x < c.size; ++x)
      if (c.orbit_rep[x] == x) reps.push_back(x);
    p.action[id] = reps[std::uniform_int_distribution<std::size_t>(0, reps.size() - 1)(rng)];
  }
  return p;
}

// Full policy induced by a local policy: every state acts on its local view.
inline FullPolicy lift_policy(const StateSpace& ss, const LocalPolicy& pol) {
  const GraphCatalog& cat = ss.catalog();
  FullPolicy f;
  f.action.assign(ss.size(), -1);
  for (StateId s = 0; s < ss.size(); ++s) {
    BlockMask lm = ss.local_mask(s);
    if (lm == 0) continue;
    f.action[s] = policy_target(cat, ss.state(s).graph, lm, pol);
  }
  return f;
}

// ---- deterministic policy space enumeration (classes of size <= M) ----

struct PolicySpace {
  std::vector<ClassId> classes;            // class ids in the policy domain
  std::vector<std::vector<int>> choices;   // orbit representatives per class

  PolicySpace(const GraphCatalog& cat, int max_blocks) {
    for (int n = 1; n <= max_blocks; ++n) {
      for (ClassId id : cat.classes_of_size(n)) {
        const GraphClass& c = cat.cls(id);
        classes.push_back(id);
        std::vector<int> reps;
        for (int x = 0; x < c.size; ++x)
          if (c.orbit_rep[x] == x) reps.push_back(x);
        choices.push_back(std::move(reps));
      }
    }
  }

  std::uint64_t count() const {
    std::uint64_t t = 1;
    for (const auto& c : choices) t *= c.size();
    return t;
  }

  LocalPolicy at(const GraphCatalog& cat, std::uint64_t index) const {
    LocalPolicy p;
    p.action.assign(cat.num_classes(), -1);
    for (std::size_t i = classes.size(); i-- > 0;) {
      p.action[classes[i]] = choices[i][index % choices[i].size()];
      index /= choices[i].size();
    }
    return p;
  }

  std::uint64_t index_of(const LocalPolicy& pol) const {
    std::uint64_t idx = 0;
    for (std::size_t i = 0; i < classes.size(); ++i) {
      const auto& ch = choices[i];
      std::size_t d = 0;
      while (d < ch.size() && ch[d] != pol.action[classes[i]]) ++d;
      idx = idx * ch.size() + d;
    }
    return idx;
  }
};

// ---- text serialization: one line per class, "code action" ----

inline std::string encode_policy(const GraphCatalog& cat, int max_blocks, const LocalPolicy& pol) {
  std::string out;
  for (int n = 1; n <= max_blocks; ++n) {
    for (ClassId id : cat.classes_of_size(n)) {
      if (!out.empty()) out += "-";
      out += std::to_string(pol.action[id]);
    }
  }
  return out;
}

inline void save_policy(const GraphCatalog& cat, int max_blocks, const LocalPolicy& pol,
                        std::ostream& os) {
  for (int n = 1; n <= max_blocks; ++n)
    for (ClassId id : cat.classes_of_size(n))
      os << cat.cls(id).code << " " << pol.action[id] << "\n";
}

inline LocalPolicy load_policy(const GraphCatalog& cat, std::istream& is) {
  LocalPolicy p;
  p.action.assign(cat.num_classes(), -1);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string code;
    int act = -1;
    if (!(ls >> code >> act)) throw ConfigError("malformed policy line: " + line);
    ClassId id = cat.id_of_code(code);
    if (id < 0) throw ConfigError("unknown graph class code in policy file: " + code);
    const GraphClass& c = cat.cls(id);
    if (act < 0 || act >= c.size) throw ConfigError("policy action out of range for " + c.name);
    p.action[id] = c.orbit_rep[act];
  }
  return p;
}

}  // namespace blockmfg
