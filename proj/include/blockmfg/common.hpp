#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace blockmfg {

// Error taxonomy. Everything derives from std::runtime_error so callers can
// catch broadly; the distinct types exist because some callers (the exhaustive
// search, the delta sweep) need to record a failure kind and keep going.
struct MalformedGraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateStateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IterationLimitError : std::runtime_error {
  explicit IterationLimitError(const std::string& msg, std::vector<double> residuals = {})
      : std::runtime_error(msg), residual_trace(std::move(residuals)) {}
  std::vector<double> residual_trace;
};
struct PolicyCycleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ReducibleChainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UndefinedEfficiencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Static partition of [0, n) across at most `threads` workers. Each worker
// writes to disjoint indices, so results do not depend on the thread count.
inline void parallel_for(std::size_t n, unsigned threads,
                         const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  unsigned t = threads == 0 ? hw : threads;
  if (t > n) t = static_cast<unsigned>(n);
  if (t <= 1) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(t);
  std::size_t chunk = (n + t - 1) / t;
  for (unsigned i = 0; i < t; ++i) {
    std::size_t lo = i * chunk;
    std::size_t hi = lo + chunk < n ? lo + chunk : n;
    if (lo >= hi) break;
    pool.emplace_back([=, &body] { body(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

inline int popcount32(std::uint32_t m) { return __builtin_popcount(m); }

}  // namespace blockmfg
