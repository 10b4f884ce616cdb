#pragma once

// Block-step and block-propagation probability laws.
//
// Two clocks drive the system: per time step a block is generated with
// probability alpha, and each outstanding (block, agent) pair is delivered
// with probability delta. State transitions happen once per block step (the
// random number of time steps until the next generation), so everything the
// model needs reduces to a handful of distributions over block steps.

#include <cmath>
#include <stdexcept>

#include "blockmfg/common.hpp"

namespace blockmfg {

struct TimingParams {
  double alpha = 0.001;  // P(block generated in a time step)
  double delta = 0.01;   // P(outstanding block delivered to an agent in a time step)

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in (0,1)");
    // delta = 1 (instant delivery) is allowed as the synchronous limit
    if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("delta must be in (0,1]");
  }
};

// P(block step takes exactly k time steps): geometric with success alpha.
inline double block_step_pmf(const TimingParams& p, long k) {
  if (k < 1) return 0.0;
  return std::exp(static_cast<double>(k - 1) * std::log1p(-p.alpha)) * p.alpha;
}

// P(y block steps take exactly k time steps): negative binomial,
// C(k-1, k-y) (1-alpha)^(k-y) alpha^y for k >= y.
inline double multi_block_step_pmf(const TimingParams& p, long y, long k) {
  if (y < 1) throw std::invalid_argument("multi_block_step_pmf: y must be >= 1");
  if (k < y) return 0.0;
  double log_choose = std::lgamma(static_cast<double>(k)) -
                      std::lgamma(static_cast<double>(k - y + 1)) -
                      std::lgamma(static_cast<double>(y));
  return std::exp(log_choose + static_cast<double>(k - y) * std::log1p(-p.alpha) +
                  static_cast<double>(y) * std::log(p.alpha));
}

// E[(1-delta)^K] for K geometric(alpha): the per-block-step survival factor.
// P(H <= h) = 1 - q^h follows because h block steps are a sum of h iid
// geometric durations.
inline double reception_survival_factor(const TimingParams& p) {
  return p.alpha * (1.0 - p.delta) / (1.0 - (1.0 - p.alpha) * (1.0 - p.delta));
}

// P(H <= h): probability an agent receives an outstanding block within h
// block steps of its generation.
inline double reception_cdf(const TimingParams& p, long h) {
  if (h <= 0) return 0.0;
  double q = reception_survival_factor(p);
  return 1.0 - std::pow(q, static_cast<double>(h));
}

// P(H = h) for h >= 1; geometric in block steps with success 1 - q.
inline double reception_pmf(const TimingParams& p, long h) {
  if (h < 1) throw std::invalid_argument("reception_pmf: h must be >= 1");
  return reception_cdf(p, h) - reception_cdf(p, h - 1);
}

// Single-block-step delivery probability. Used pervasively by the transition
// kernel; simplifies to delta / (alpha + delta - alpha*delta).
inline double single_step_reception(const TimingParams& p) {
  return 1.0 - reception_survival_factor(p);
}

// Smallest number of time steps after which a rho fraction of agents has
// received a block: ceil(ln(1-rho) / ln(1-delta)). rho = 1 is rejected
// because full coverage takes unbounded time under Bernoulli delivery.
inline long delay_steps(double delta, double rho) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delay_steps: delta must be in (0,1)");
  if (!(rho > 0.0 && rho < 1.0))
    throw ConfigError("delay_steps: rho must be in (0,1); coverage of the full population is unbounded");
  double est = std::log1p(-rho) / std::log1p(-delta);
  long k = static_cast<long>(std::ceil(est - 1e-9));
  if (k < 1) k = 1;
  // guard against floating error at the boundary
  while (1.0 - std::exp(static_cast<double>(k) * std::log1p(-delta)) < rho) ++k;
  while (k > 1 && 1.0 - std::exp(static_cast<double>(k - 1) * std::log1p(-delta)) >= rho) --k;
  return k;
}

// Truncated series evaluation of the reception CDF, kept public as the slow
// reference route for the closed form above. Stops once the remaining tail
// mass of the block-step law drops below tail_tol.
inline double reception_cdf_series(const TimingParams& p, long h, double tail_tol = 1e-14) {
  if (h <= 0) return 0.0;
  double acc = 0.0;
  long double mass = 0.0;  // extended precision so the tail criterion stays meaningful near 1
  for (long k = h;; ++k) {
    double w = multi_block_step_pmf(p, h, k);
    acc += (1.0 - std::exp(static_cast<double>(k) * std::log1p(-p.delta))) * w;
    mass += w;
    if (1.0 - static_cast<double>(mass) < tail_tol) break;
    if (k > h + 100000000L) throw IterationLimitError("reception_cdf_series: truncation did not terminate");
  }
  return acc;
}

}  // namespace blockmfg
