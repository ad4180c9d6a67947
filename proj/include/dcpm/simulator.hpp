#pragma once

#include <cstdint>
#include <functional>

#include "dcpm/types.hpp"

namespace dcpm {

/// Called with (b, i) after every event; i is the idle count when the
/// queue is empty and the negated queue length otherwise. Must return a
/// feasible action -i+ <= a <= C - b - i+ (any intermediate setup count
/// is allowed).
using PolicyFn = std::function<int(int, int)>;

struct SimMetrics {
  double e_wait = 0.0;    // time-average waiting jobs
  double e_power = 0.0;   // time-average c_power*idle + c_power'*setup
  double e_reward = 0.0;  // -(c_perf*e_wait + e_power)
  double drop_fraction = 0.0;
  double ci_wait = 0.0;   // 95% batch-means half-widths (32 batches)
  double ci_power = 0.0;
  double ci_reward = 0.0;
  long long events = 0;
  double sim_time = 0.0;  // post-warmup simulated time
};

/// Event-driven simulation with exponential races (single mt19937_64
/// stream; identical seed gives bit-identical metrics). The first
/// warmup_fraction of events is excluded from all integrals. Throws
/// std::runtime_error when the policy returns an infeasible action.
SimMetrics simulate(const SystemParams& params, const PolicyFn& policy,
                    long long horizon_events, std::uint64_t seed,
                    double warmup_fraction = 0.1);

}  // namespace dcpm
