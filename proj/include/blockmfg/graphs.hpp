#pragma once

// Nakamoto graphs: rooted trees in which every non-root block references
// exactly one earlier block. The catalog enumerates one canonical
// representative per isomorphism class (up to a hard cap of 8 blocks),
// precomputes the automorphism group, block orbits, single-block extensions,
// descendant subgraphs and the root-connected candidate local graphs of each
// class. Everything is immutable after construction.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "blockmfg/common.hpp"

namespace blockmfg {

using ClassId = int;
using BlockMask = std::uint32_t;
using Permutation = std::vector<int>;  // image[i] = where block i maps

constexpr int kGraphHardCap = 8;

namespace detail {

struct TreeView {
  std::vector<int> parents;  // -1 for root
  std::vector<std::vector<int>> children;
  int root = -1;

  explicit TreeView(const std::vector<int>& par) : parents(par), children(par.size()) {
    const int n = static_cast<int>(par.size());
    if (n == 0) throw MalformedGraphError("empty parent array");
    for (int i = 0; i < n; ++i) {
      if (par[i] < 0) {
        if (root >= 0) throw MalformedGraphError("multiple roots");
        root = i;
      } else {
        if (par[i] >= n) throw MalformedGraphError("parent index out of range");
        children[par[i]].push_back(i);
      }
    }
    if (root < 0) throw MalformedGraphError("no root (cycle)");
    // reachability from the root doubles as the cycle check
    std::vector<int> stack{root};
    std::vector<char> seen(n, 0);
    int count = 0;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      if (seen[v]) throw MalformedGraphError("cycle detected");
      seen[v] = 1;
      ++count;
      for (int c : children[v]) stack.push_back(c);
    }
    if (count != n) throw MalformedGraphError("disconnected blocks (cycle)");
  }
};

inline int subtree_size(const TreeView& t, int v) {
  int s = 1;
  for (int c : t.children[v]) s += subtree_size(t, c);
  return s;
}

inline std::string subtree_code(const TreeView& t, int v) {
  std::vector<std::string> cs;
  cs.reserve(t.children[v].size());
  for (int c : t.children[v]) cs.push_back(subtree_code(t, c));
  std::sort(cs.begin(), cs.end());
  std::string out = "(";
  for (auto& s : cs) out += s;
  out += ")";
  return out;
}

// Child ordering used for canonical indices and display names: larger
// subtrees first, ties broken by code string.
struct ChildOrder {
  const TreeView& t;
  const std::vector<int>& sizes;
  const std::vector<std::string>& codes;
  bool operator()(int a, int b) const {
    if (sizes[a] != sizes[b]) return sizes[a] > sizes[b];
    return codes[a] < codes[b];
  }
};

}  // namespace detail

// Canonical form of a labeled rooted tree: code string, canonical parent
// array (preorder, root = 0, parent index < child index) and the relabel
// map old index -> canonical index.
struct CanonicalForm {
  std::string code;
  std::vector<int> parents;
  std::vector<int> relabel;
};

inline CanonicalForm canonical_form(const std::vector<int>& parents) {
  detail::TreeView t(parents);
  const int n = static_cast<int>(parents.size());
  std::vector<int> sizes(n);
  std::vector<std::string> codes(n);
  for (int v = 0; v < n; ++v) {
    sizes[v] = detail::subtree_size(t, v);
    codes[v] = detail::subtree_code(t, v);
  }
  detail::ChildOrder ord{t, sizes, codes};
  std::vector<int> relabel(n, -1);
  std::vector<int> canon_parents(n, -1);
  int next = 0;
  std::vector<int> stack{t.root};
  // explicit preorder with ordered children
  struct Frame {
    int v;
  };
  std::vector<int> order;
  order.reserve(n);
  std::vector<int> work{t.root};
  while (!work.empty()) {
    int v = work.back();
    work.pop_back();
    relabel[v] = next++;
    order.push_back(v);
    auto ch = t.children[v];
    std::sort(ch.begin(), ch.end(), ord);
    // push in reverse so the first child is visited first
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) work.push_back(*it);
  }
  for (int v = 0; v < n; ++v)
    if (t.parents[v] >= 0) canon_parents[relabel[v]] = relabel[t.parents[v]];
  return CanonicalForm{codes[t.root], std::move(canon_parents), std::move(relabel)};
}

// Display name following the nested-size convention, e.g. g_4.(2.1,1).
inline std::string display_name(const std::vector<int>& parents) {
  detail::TreeView t(parents);
  const int n = static_cast<int>(parents.size());
  std::vector<int> sizes(n);
  std::vector<std::string> codes(n);
  for (int v = 0; v < n; ++v) {
    sizes[v] = detail::subtree_size(t, v);
    codes[v] = detail::subtree_code(t, v);
  }
  detail::ChildOrder ord{t, sizes, codes};
  std::function<std::string(int)> part = [&](int v) -> std::string {
    std::string out = std::to_string(sizes[v]);
    auto ch = t.children[v];
    if (ch.empty()) return out;
    std::sort(ch.begin(), ch.end(), ord);
    out += ".";
    if (ch.size() == 1) return out + part(ch[0]);
    out += "(";
    for (std::size_t i = 0; i < ch.size(); ++i) {
      if (i) out += ",";
      out += part(ch[i]);
    }
    out += ")";
    return out;
  };
  return "g_" + part(t.root);
}

// One candidate local block graph of a global class: an orbit of
// root-connected block subsets under the global automorphism group.
// Candidate 0 is always the null graph (root not received).
struct CandidateLocal {
  ClassId cls = -1;                 // canonical class of the induced subtree; -1 for null
  BlockMask rep_mask = 0;           // lexicographically least mask of the orbit
  std::vector<BlockMask> masks;     // all masks in the orbit
  std::vector<int> embed;           // local canonical index -> global block (for rep_mask)
};

struct ExtendEntry {
  ClassId cls = -1;          // class after appending a child to this block
  std::vector<int> relabel;  // old block index -> index in the new class
  int new_block = -1;        // index of the appended block in the new class
};

struct GammaEntry {
  ClassId cls = -1;          // class of x + descendants with x as root
  BlockMask kept = 0;        // surviving old block indices
  std::vector<int> relabel;  // old index -> new index, -1 if dropped
};

// Induced subtree class and embedding for one specific root-connected mask.
struct MaskView {
  ClassId cls = -1;
  int candidate = 0;
  std::vector<int> embed;  // local canonical index -> global block
};

struct GraphClass {
  ClassId id = -1;
  int size = 0;
  std::vector<int> parents;  // canonical, parents[0] = -1
  std::vector<std::vector<int>> children;
  std::vector<int> depth;
  std::vector<BlockMask> subtree;       // block + strict descendants
  std::vector<BlockMask> ancestor_mask; // strict ancestors
  std::vector<int> orbit;               // orbit label per block (dense, 0-based)
  std::vector<int> orbit_rep;           // lowest-index block of each block's orbit
  std::string code;
  std::string name;
  std::vector<Permutation> automorphisms;
  std::vector<ExtendEntry> extend;      // per block; cls = -1 past the cap
  std::vector<GammaEntry> gamma;        // per block
  std::vector<CandidateLocal> candidates;
  std::unordered_map<BlockMask, MaskView> mask_views;  // every root-connected mask

  int descendant_count(int x) const { return popcount32(subtree[x]) - 1; }
  int ancestor_count(int x) const { return popcount32(ancestor_mask[x]); }
  // blocks that are neither ancestors nor descendants of x
  int cousin_count(int x) const { return size - 1 - descendant_count(x) - ancestor_count(x); }

  int lcr_tip() const {
    int best = 0;
    for (int i = 1; i < size; ++i)
      if (depth[i] > depth[best]) best = i;
    return best;  // preorder guarantees the lowest index among deepest blocks is found first
  }
};

namespace detail {

inline void enumerate_automorphisms(const std::vector<int>& parents,
                                    const std::vector<std::vector<int>>& children,
                                    const std::vector<std::string>& codes, int v, int w,
                                    std::vector<int>& image, std::vector<char>& used,
                                    const std::function<void()>& emit_at_root);

// recursively match subtree(v) onto subtree(w); codes[v] == codes[w] assumed
inline void match_subtree(const std::vector<std::vector<int>>& children,
                          const std::vector<std::string>& codes, int v, int w,
                          std::vector<int>& image, std::vector<char>& used,
                          const std::function<void()>& done) {
  image[v] = w;
  const auto& cv = children[v];
  const auto& cw = children[w];
  std::function<void(std::size_t)> step = [&](std::size_t i) {
    if (i == cv.size()) {
      done();
      return;
    }
    int c = cv[i];
    for (int d : cw) {
      if (used[d] || codes[c] != codes[d]) continue;
      used[d] = 1;
      match_subtree(children, codes, c, d, image, used, [&] { step(i + 1); });
      used[d] = 0;
    }
  };
  step(0);
}

}  // namespace detail

inline std::vector<Permutation> enumerate_automorphisms(const std::vector<int>& parents) {
  detail::TreeView t(parents);
  const int n = static_cast<int>(parents.size());
  std::vector<std::string> codes(n);
  for (int v = 0; v < n; ++v) codes[v] = detail::subtree_code(t, v);
  std::vector<Permutation> out;
  std::vector<int> image(n, -1);
  std::vector<char> used(n, 0);
  detail::match_subtree(t.children, codes, t.root, t.root, image, used,
                        [&] { out.push_back(image); });
  return out;
}

class GraphCatalog {
 public:
  explicit GraphCatalog(int max_blocks) : max_blocks_(max_blocks) {
    if (max_blocks < 1) throw ConfigError("max_blocks must be >= 1");
    if (max_blocks > kGraphHardCap)
      throw ConfigError("max_blocks exceeds the hard cap of " + std::to_string(kGraphHardCap));
    build();
  }

  int max_blocks() const { return max_blocks_; }
  int num_classes() const { return static_cast<int>(classes_.size()); }
  const GraphClass& cls(ClassId id) const { return classes_[id]; }
  const std::vector<ClassId>& classes_of_size(int n) const { return by_size_[n]; }

  // total classes with size <= n
  int num_classes_up_to(int n) const {
    int c = 0;
    for (int s = 1; s <= n && s <= max_blocks_; ++s) c += static_cast<int>(by_size_[s].size());
    return c;
  }

  ClassId id_of_code(const std::string& code) const {
    auto it = code_index_.find(code);
    return it == code_index_.end() ? -1 : it->second;
  }

  // Canonicalize an arbitrary labeled rooted tree and locate its class.
  std::pair<ClassId, std::vector<int>> canonicalize(const std::vector<int>& parents) const {
    CanonicalForm cf = canonical_form(parents);
    auto it = code_index_.find(cf.code);
    if (it == code_index_.end())
      throw MalformedGraphError("graph has more blocks than the catalog covers");
    return {it->second, std::move(cf.relabel)};
  }

  // Blocks of g whose extension lands in g_next's class. Empty (not an error)
  // when the sizes do not line up.
  BlockMask phi(ClassId g, ClassId g_next) const {
    const GraphClass& c = classes_[g];
    if (classes_[g_next].size != c.size + 1) return 0;
    BlockMask m = 0;
    for (int x = 0; x < c.size; ++x)
      if (c.extend[x].cls == g_next) m |= BlockMask{1} << x;
    return m;
  }

 private:
  void build() {
    by_size_.assign(max_blocks_ + 1, {});
    // size-1 seed
    add_class({-1});
    for (int n = 2; n <= max_blocks_; ++n) {
      std::map<std::string, std::vector<int>> found;  // code -> canonical parents
      for (ClassId id : by_size_[n - 1]) {
        const GraphClass& g = classes_[id];
        for (int x = 0; x < g.size; ++x) {
          if (g.orbit_rep[x] != x) continue;  // one extension per orbit is enough
          std::vector<int> par = g.parents;
          par.push_back(x);
          CanonicalForm cf = canonical_form(par);
          found.emplace(cf.code, cf.parents);
        }
      }
      for (auto& [code, par] : found) add_class(par);
    }
    // second pass: extend/gamma tables need ids of other classes
    for (auto& g : classes_) {
      fill_extend(g);
      fill_gamma(g);
      fill_candidates(g);
    }
  }

  void add_class(std::vector<int> parents) {
    GraphClass g;
    g.id = static_cast<ClassId>(classes_.size());
    g.size = static_cast<int>(parents.size());
    g.parents = std::move(parents);
    g.children.assign(g.size, {});
    g.depth.assign(g.size, 0);
    for (int i = 1; i < g.size; ++i) {
      g.children[g.parents[i]].push_back(i);
      g.depth[i] = g.depth[g.parents[i]] + 1;
    }
    g.subtree.assign(g.size, 0);
    for (int i = g.size - 1; i >= 0; --i) {
      g.subtree[i] = BlockMask{1} << i;
      for (int c : g.children[i]) g.subtree[i] |= g.subtree[c];
    }
    g.ancestor_mask.assign(g.size, 0);
    for (int i = 1; i < g.size; ++i)
      g.ancestor_mask[i] = g.ancestor_mask[g.parents[i]] | (BlockMask{1} << g.parents[i]);
    CanonicalForm cf = canonical_form(g.parents);
    g.code = cf.code;
    g.name = display_name(g.parents);
    g.automorphisms = enumerate_automorphisms(g.parents);

    // orbits: two blocks coincide iff their parents share an orbit and their
    // subtrees share a code; parents precede children in canonical order
    {
      detail::TreeView t(g.parents);
      std::vector<std::string> codes(g.size);
      for (int v = 0; v < g.size; ++v) codes[v] = detail::subtree_code(t, v);
      g.orbit.assign(g.size, -1);
      std::map<std::pair<int, std::string>, int> seen;
      for (int v = 0; v < g.size; ++v) {
        std::pair<int, std::string> key{v == 0 ? -1 : g.orbit[g.parents[v]], codes[v]};
        auto [it, inserted] = seen.emplace(key, static_cast<int>(seen.size()));
        g.orbit[v] = it->second;
      }
      g.orbit_rep.assign(g.size, -1);
      std::vector<int> first(seen.size(), -1);
      for (int v = 0; v < g.size; ++v) {
        if (first[g.orbit[v]] < 0) first[g.orbit[v]] = v;
        g.orbit_rep[v] = first[g.orbit[v]];
      }
    }

    code_index_[g.code] = g.id;
    by_size_[g.size].push_back(g.id);
    classes_.push_back(std::move(g));
  }

  void fill_extend(GraphClass& g) {
    g.extend.assign(g.size, {});
    if (g.size + 1 > max_blocks_) return;
    for (int x = 0; x < g.size; ++x) {
      std::vector<int> par = g.parents;
      par.push_back(x);
      CanonicalForm cf = canonical_form(par);
      ExtendEntry e;
      e.cls = code_index_.at(cf.code);
      e.relabel.assign(g.size, -1);
      for (int i = 0; i < g.size; ++i) e.relabel[i] = cf.relabel[i];
      e.new_block = cf.relabel[g.size];
      g.extend[x] = std::move(e);
    }
  }

  void fill_gamma(GraphClass& g) {
    g.gamma.assign(g.size, {});
    for (int x = 0; x < g.size; ++x) {
      BlockMask keep = g.subtree[x];
      std::vector<int> members;
      for (int i = 0; i < g.size; ++i)
        if (keep >> i & 1) members.push_back(i);
      std::vector<int> local_index(g.size, -1);
      for (std::size_t i = 0; i < members.size(); ++i) local_index[members[i]] = static_cast<int>(i);
      std::vector<int> par(members.size(), -1);
      for (std::size_t i = 0; i < members.size(); ++i)
        if (members[i] != x) par[i] = local_index[g.parents[members[i]]];
      CanonicalForm cf = canonical_form(par);
      GammaEntry e;
      e.cls = code_index_.at(cf.code);
      e.kept = keep;
      e.relabel.assign(g.size, -1);
      for (std::size_t i = 0; i < members.size(); ++i) e.relabel[members[i]] = cf.relabel[i];
      g.gamma[x] = std::move(e);
    }
  }

  void fill_candidates(GraphClass& g) {
    // all root-connected masks
    std::vector<BlockMask> down;
    for (BlockMask m = 1; m < (BlockMask{1} << g.size); ++m) {
      if (!(m & 1)) continue;
      bool ok = true;
      for (int i = 1; i < g.size && ok; ++i)
        if ((m >> i & 1) && !(m >> g.parents[i] & 1)) ok = false;
      if (ok) down.push_back(m);
    }
    // orbit of each mask under the automorphism group
    std::map<BlockMask, BlockMask> orbit_rep_of;
    for (BlockMask m : down) {
      BlockMask best = m;
      for (const auto& a : g.automorphisms) {
        BlockMask im = 0;
        for (int i = 0; i < g.size; ++i)
          if (m >> i & 1) im |= BlockMask{1} << a[i];
        best = std::min(best, im);
      }
      orbit_rep_of[m] = best;
    }
    g.candidates.clear();
    g.candidates.push_back(CandidateLocal{});  // null candidate
    std::map<BlockMask, int> candidate_of_rep;
    for (BlockMask m : down) {
      BlockMask rep = orbit_rep_of[m];
      auto [it, inserted] = candidate_of_rep.emplace(rep, 0);
      if (inserted) {
        CandidateLocal c;
        c.rep_mask = rep;
        auto mv = make_mask_view(g, rep);
        c.cls = mv.cls;
        c.embed = mv.embed;
        it->second = static_cast<int>(g.candidates.size());
        g.candidates.push_back(std::move(c));
      }
      g.candidates[it->second].masks.push_back(m);
    }
    for (BlockMask m : down) {
      MaskView mv = make_mask_view(g, m);
      mv.candidate = candidate_of_rep.at(orbit_rep_of[m]);
      g.mask_views.emplace(m, std::move(mv));
    }
  }

  MaskView make_mask_view(const GraphClass& g, BlockMask m) const {
    std::vector<int> members;
    for (int i = 0; i < g.size; ++i)
      if (m >> i & 1) members.push_back(i);
    std::vector<int> local_index(g.size, -1);
    for (std::size_t i = 0; i < members.size(); ++i) local_index[members[i]] = static_cast<int>(i);
    std::vector<int> par(members.size(), -1);
    for (std::size_t i = 0; i < members.size(); ++i)
      if (members[i] != 0) par[i] = local_index[g.parents[members[i]]];
    CanonicalForm cf = canonical_form(par);
    MaskView mv;
    mv.cls = code_index_.at(cf.code);
    mv.embed.assign(members.size(), -1);
    for (std::size_t i = 0; i < members.size(); ++i) mv.embed[cf.relabel[i]] = members[i];
    return mv;
  }

  int max_blocks_;
  std::vector<GraphClass> classes_;
  std::vector<std::vector<ClassId>> by_size_;
  std::unordered_map<std::string, ClassId> code_index_;
};

}  // namespace blockmfg
