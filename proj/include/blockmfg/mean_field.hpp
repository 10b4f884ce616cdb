#pragma once

// The mean field is, per global graph class, a probability distribution over
// the candidate local block graphs of that class (candidate 0 = null graph).
// A candidate aggregates a whole automorphism orbit of concrete received
// subsets; within the orbit the mass is spread uniformly over the member
// masks when the kernel needs per-block append weights.

#include <cmath>
#include <vector>

#include "blockmfg/states.hpp"
#include "blockmfg/timing.hpp"

namespace blockmfg {

struct MeanField {
  // rows[g][c] = P(candidate c | global graph class g); empty row for
  // classes outside the horizon
  std::vector<std::vector<double>> rows;

  const std::vector<double>& row(ClassId g) const { return rows[g]; }

  double sup_distance(const MeanField& other) const {
    double d = 0.0;
    for (std::size_t g = 0; g < rows.size(); ++g)
      for (std::size_t c = 0; c < rows[g].size(); ++c)
        d = std::max(d, std::abs(rows[g][c] - other.rows[g][c]));
    return d;
  }

  void check_normalized(double tol = 1e-10) const {
    for (const auto& r : rows) {
      if (r.empty()) continue;
      double s = 0.0;
      for (double x : r) {
        if (x < -tol) throw ConfigError("mean field entry below zero");
        s += x;
      }
      if (std::abs(s - 1.0) > tol) throw ConfigError("mean field row does not normalize");
    }
  }
};

// Marginal probability that block x of class g sits in an agent's local
// graph, implied by a mean field row (uniform spread within each orbit).
inline double block_membership_marginal(const GraphClass& g, const std::vector<double>& mu_row,
                                        int x) {
  double m = 0.0;
  for (std::size_t c = 1; c < g.candidates.size(); ++c) {
    const CandidateLocal& cand = g.candidates[c];
    int hits = 0;
    for (BlockMask mask : cand.masks)
      if (mask >> x & 1) ++hits;
    m += mu_row[c] * static_cast<double>(hits) / static_cast<double>(cand.masks.size());
  }
  return m;
}

// Initial estimate: per-block membership weight halfway between the
// reception bounds implied by generation order (a block predates its
// descendants; its cousins may fall on either side), multiplied over the
// members and complements of each concrete subset, then renormalized over
// the candidate set of the class.
inline MeanField initial_estimate(const GraphCatalog& cat, int max_blocks,
                                  const TimingParams& timing) {
  MeanField mu;
  mu.rows.resize(cat.num_classes());
  for (int n = 1; n <= max_blocks; ++n) {
    for (ClassId gid : cat.classes_of_size(n)) {
      const GraphClass& g = cat.cls(gid);
      std::vector<double> w(g.size);
      for (int x = 0; x < g.size; ++x) {
        int d = g.descendant_count(x);
        int c = g.cousin_count(x);
        double p_d = reception_cdf(timing, d + 1);
        double p_c = reception_cdf(timing, c + d + 1);
        w[x] = 0.5 * (p_d + p_c);
      }
      std::vector<double>& row = mu.rows[gid];
      row.assign(g.candidates.size(), 0.0);
      {
        double p = 1.0;
        for (int x = 0; x < g.size; ++x) p *= 1.0 - w[x];
        row[0] = p;  // null graph: nothing received
      }
      for (std::size_t c = 1; c < g.candidates.size(); ++c) {
        double total = 0.0;
        for (BlockMask mask : g.candidates[c].masks) {
          double p = 1.0;
          for (int x = 0; x < g.size; ++x) p *= (mask >> x & 1) ? w[x] : 1.0 - w[x];
          total += p;
        }
        row[c] = total;
      }
      double s = 0.0;
      for (double v : row) s += v;
      for (double& v : row) v /= s;
    }
  }
  return mu;
}

// Conditional distribution over candidates extracted from a stationary
// distribution v: mass of states with graph g and local candidate c, divided
// by the mass of graph g. Classes whose stationary mass falls below
// `visited_floor` keep the fallback row (their conditional would be
// numerical noise).
inline MeanField extract_mean_field(const StateSpace& ss, const std::vector<double>& v,
                                    const MeanField& fallback, double visited_floor = 1e-7) {
  const GraphCatalog& cat = ss.catalog();
  MeanField mu;
  mu.rows.resize(cat.num_classes());
  std::vector<double> graph_mass(cat.num_classes(), 0.0);
  for (ClassId g = 0; g < cat.num_classes(); ++g)
    if (!fallback.rows[g].empty()) mu.rows[g].assign(fallback.rows[g].size(), 0.0);
  for (StateId s = 0; s < ss.size(); ++s) {
    double m = v[s];
    if (m <= 0.0) continue;
    ClassId g = ss.state(s).graph;
    graph_mass[g] += m;
    mu.rows[g][ss.local_candidate(s)] += m;
  }
  for (ClassId g = 0; g < cat.num_classes(); ++g) {
    if (mu.rows[g].empty()) continue;
    if (graph_mass[g] < visited_floor) {
      mu.rows[g] = fallback.rows[g];
    } else {
      for (double& x : mu.rows[g]) x /= graph_mass[g];
    }
  }
  return mu;
}

}  // namespace blockmfg
