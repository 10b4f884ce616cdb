#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "blockmfg/analysis.hpp"

using namespace blockmfg;

namespace {

ClassId by_name(const GraphCatalog& cat, const std::string& name) {
  for (int id = 0; id < cat.num_classes(); ++id)
    if (cat.cls(id).name == name) return id;
  REQUIRE(false);
  return -1;
}

ModelConfig defaults(int max_blocks) {
  ModelConfig cfg;
  cfg.max_blocks = max_blocks;
  return cfg;
}

FixedPointOptions sym_opts() {
  FixedPointOptions o;
  o.mode = MuMode::kSymmetric;
  o.threads = 1;
  return o;
}

}  // namespace

TEST_SUITE_BEGIN("solver");

TEST_CASE("policy space size matches the orbit-action product") {
  GraphCatalog cat(4);
  PolicySpace space(cat, 4);
  CHECK(space.count() == 1152);
  std::map<std::string, int> counts;
  for (std::size_t i = 0; i < space.classes.size(); ++i)
    counts[cat.cls(space.classes[i]).name] = static_cast<int>(space.choices[i].size());
  std::map<std::string, int> expected{{"g_1", 1},         {"g_2.1", 2},       {"g_3.(1,1)", 2},
                                      {"g_3.2.1", 3},     {"g_4.(1,1,1)", 2}, {"g_4.(2.1,1)", 4},
                                      {"g_4.3.(1,1)", 3}, {"g_4.3.2.1", 4}};
  CHECK(counts == expected);
  // round trip through the mixed-radix index
  LocalPolicy lcr = lcr_policy(cat);
  CHECK(space.at(cat, space.index_of(lcr)) == lcr);
  std::set<std::string> seen;
  for (std::uint64_t i = 0; i < space.count(); i += 37)
    CHECK(seen.insert(encode_policy(cat, 4, space.at(cat, i))).second);
}

TEST_CASE("policy io round trip") {
  GraphCatalog cat(4);
  LocalPolicy lcr = lcr_policy(cat);
  std::stringstream buf;
  save_policy(cat, 4, lcr, buf);
  LocalPolicy back = load_policy(cat, buf);
  CHECK(back == lcr);
  std::stringstream bad("zzz 0\n");
  CHECK_THROWS_AS(load_policy(cat, bad), ConfigError);
}

TEST_CASE("policy targets use the lowest-index orbit member") {
  GraphCatalog cat(4);
  LocalPolicy lcr = lcr_policy(cat);
  const GraphClass& fork = cat.cls(by_name(cat, "g_3.(1,1)"));
  CHECK(policy_target(cat, fork.id, 0b111, lcr) == 1);
  CHECK(policy_target(cat, fork.id, 0b101, lcr) == 2);  // only leaf in view
  CHECK(policy_target(cat, fork.id, 0b001, lcr) == 0);
}

TEST_CASE("myopic values vanish without reachable rewards") {
  GraphCatalog cat(4);
  StateSpace ss(cat, 4);
  ModelConfig cfg = defaults(4);
  cfg.gamma = 0.0;
  LocalPolicy lcr = lcr_policy(cat);
  MeanField mu = initial_estimate(cat, 4, cfg.timing);
  KernelBuilder kb(ss, lcr, mu, cfg);
  Kernel k = kb.build_kernel(1);
  ValueIterationResult vi = value_iteration(k, cfg.gamma);
  CHECK(vi.values[ss.initial_state()] == 0.0);  // nothing owned, nothing pruned this step
  for (StateId s = 0; s < ss.size(); ++s) CHECK(vi.values[s] >= 0.0);
  // a state owning the about-to-finalize ancestor has positive myopic value
  const GraphClass& g2 = cat.cls(by_name(cat, "g_2.1"));
  MeanField conc = mu;
  std::fill(conc.rows[g2.id].begin(), conc.rows[g2.id].end(), 0.0);
  conc.rows[g2.id][g2.mask_views.at(0b11).candidate] = 1.0;
  KernelBuilder kb2(ss, lcr, conc, cfg);
  Kernel k2 = kb2.build_kernel(1);
  ValueIterationResult vi2 = value_iteration(k2, cfg.gamma);
  CHECK(vi2.values[ss.id_of(g2.id, 0b11, 0b01)] > 0.0);
}

TEST_CASE("zero-reward environments leave every action tied") {
  GraphCatalog cat(3);
  StateSpace ss(cat, 3);
  ModelConfig cfg = defaults(3);
  LocalPolicy root = root_policy(cat);
  FixedPointResult fp = fixed_point(ss, root, cfg, sym_opts());
  KernelBuilder kb(ss, root, fp.mu, cfg);
  Kernel k = kb.build_kernel(1);
  ValueIterationResult vi = value_iteration(k, cfg.gamma);
  for (StateId s = 0; s < ss.size(); ++s) CHECK(vi.values[s] == doctest::Approx(0.0));
  EquilibriumReport rep = is_equilibrium(ss, root, cfg, sym_opts());
  CHECK(rep.is_equilibrium);  // weakly dominated: sustained entirely by ties
}

TEST_CASE("value iteration contracts geometrically") {
  GraphCatalog cat(3);
  StateSpace ss(cat, 3);
  ModelConfig cfg = defaults(3);
  LocalPolicy lcr = lcr_policy(cat);
  MeanField mu = initial_estimate(cat, 3, cfg.timing);
  KernelBuilder kb(ss, lcr, mu, cfg);
  Kernel k = kb.build_kernel(1);
  // manual sweeps tracking the residual ratio
  std::vector<double> v(ss.size(), 0.0), next(ss.size(), 0.0);
  double prev_res = -1.0;
  for (int sweep = 0; sweep < 60; ++sweep) {
    double res = 0.0;
    for (StateId s = 0; s < ss.size(); ++s) {
      double best = -1.0;
      for (const KernelRow& row : k.rows[s]) best = std::max(best, action_value(row, v, cfg.gamma));
      res = std::max(res, std::abs(best - v[s]));
      next[s] = best;
    }
    v.swap(next);
    if (sweep > 10 && prev_res > 1e-14) CHECK(res <= prev_res * (cfg.gamma + 1e-9));
    prev_res = res;
  }
}

TEST_CASE("lcr full policy projects back to lcr") {
  GraphCatalog cat(4);
  StateSpace ss(cat, 4);
  ModelConfig cfg = defaults(4);
  LocalPolicy lcr = lcr_policy(cat);
  FullPolicy lifted = lift_policy(ss, lcr);
  LocalPolicy back = extract_local_policy(ss, 4, lifted);
  CHECK(back == lcr);
  // re-expansion agrees on every full-information unowned state
  for (int n = 1; n <= 4; ++n) {
    for (ClassId id : cat.classes_of_size(n)) {
      StateId s = ss.full_info_state(id);
      BlockMask full = (BlockMask{1} << cat.cls(id).size) - 1;
      CHECK(lifted.action[s] == policy_target(cat, id, full, back));
    }
  }
}

TEST_CASE("lcr is a best-response fixed point at m4 defaults") {
  GraphCatalog cat(4);
  StateSpace ss(cat, 4);
  ModelConfig cfg = defaults(4);
  LocalPolicy lcr = lcr_policy(cat);
  auto [result, trace] = best_response_iteration(ss, lcr, cfg, sym_opts());
  CHECK(result == lcr);
  CHECK(trace.outer_iterations == 1);
  // and under the best-response mean field mode as well
  FixedPointOptions br;
  br.threads = 1;
  auto [result2, trace2] = best_response_iteration(ss, lcr, cfg, br);
  CHECK(result2 == lcr);
  CHECK(trace2.outer_iterations == 1);
}

TEST_CASE("always-root converges to itself through universal ties") {
  GraphCatalog cat(3);
  StateSpace ss(cat, 3);
  ModelConfig cfg = defaults(3);
  LocalPolicy root = root_policy(cat);
  auto [result, trace] = best_response_iteration(ss, root, cfg, sym_opts());
  CHECK(result == root);  // lowest-index tie break keeps the root everywhere
}

TEST_CASE("near-lcr policies fall back to lcr") {
  GraphCatalog cat(4);
  StateSpace ss(cat, 4);
  ModelConfig cfg = defaults(4);
  LocalPolicy start = lcr_policy(cat);
  // perturb one class: append to the root of the two-chain instead
  start.action[by_name(cat, "g_2.1")] = 0;
  auto [result, trace] = best_response_iteration(ss, start, cfg, sym_opts());
  CHECK(result == lcr_policy(cat));
}

TEST_CASE("lcr is an equilibrium with zero gap") {
  GraphCatalog cat(4);
  StateSpace ss(cat, 4);
  ModelConfig cfg = defaults(4);
  EquilibriumReport rep = is_equilibrium(ss, lcr_policy(cat), cfg, sym_opts());
  CHECK(rep.is_equilibrium);
  CHECK(rep.gap <= 1e-12);
}

TEST_CASE("solves are deterministic") {
  GraphCatalog cat(4);
  StateSpace ss(cat, 4);
  ModelConfig cfg = defaults(4);
  LocalPolicy lcr = lcr_policy(cat);
  FixedPointResult a = fixed_point(ss, lcr, cfg, sym_opts());
  FixedPointResult b = fixed_point(ss, lcr, cfg, sym_opts());
  CHECK(a.mu.sup_distance(b.mu) == 0.0);
  KernelBuilder ka(ss, lcr, a.mu, cfg), kb(ss, lcr, b.mu, cfg);
  ValueIterationResult va = value_iteration(ka.build_kernel(1), cfg.gamma);
  ValueIterationResult vb = value_iteration(kb.build_kernel(1), cfg.gamma);
  CHECK(va.policy.action == vb.policy.action);
  for (StateId s = 0; s < ss.size(); ++s) CHECK(va.values[s] == vb.values[s]);
}

TEST_SUITE_END();
