#pragma once

#include <functional>
#include <iosfwd>

#include "dcpm/aggregation.hpp"
#include "dcpm/types.hpp"

namespace dcpm {

struct ThresholdConfig {
  double static_on = 1.0;  // C_s, rounded to nearest integer on use
  int k = 1;               // waiting-job threshold
};

/// rho + sqrt(rho).
double static_on_threshold(const SystemParams& params);

/// Keep C_s servers on; once waiting jobs reach k, power on every Off
/// server. Result is clamped into the feasible range [-i+, C - b - i+].
int bulk_policy(StateBI s, const ThresholdConfig& cfg,
                const SystemParams& params);

/// Same as bulk_policy except the bulk turn-on branch sets up one
/// server per waiting job (|i|) instead of C - b.
int staggered_policy(StateBI s, const ThresholdConfig& cfg,
                     const SystemParams& params);

/// Materializes a per-state policy vector for `model` from a callable.
/// Actions not present in the model's action set are projected: negative
/// ones to the nearest allowed shed count, positive ones toward the bulk
/// action.
Policy policy_from_fn(const CtmdpModel& model,
                      const std::function<int(StateBI)>& fn);

/// Maps a policy on level states down to concrete states: (b, i) finds
/// its level, the level action scales by K_I, and the result is clamped
/// and projected into the concrete model's action set.
Policy lift_aggregated_policy(const Policy& agg_policy,
                              const CtmdpModel& agg_model,
                              const LevelScheme& scheme,
                              const CtmdpModel& concrete);

/// CSV (b, i, action) — level coordinates play the same roles for
/// aggregated models.
void dump_policy_csv(std::ostream& os, const CtmdpModel& model,
                     const Policy& policy);

}  // namespace dcpm
