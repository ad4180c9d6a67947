#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "dcpm/types.hpp"

namespace dcpm {

/// BulkReduced keeps only {-i+, ..., 0} and the bulk turn-on action
/// C - b - i+ (the grid the optimal policy lives on). Full keeps every
/// intermediate setup count, which fixed-threshold policies need for
/// exact evaluation.
enum class ActionGrid { BulkReduced, Full };

/// All (b, i) with i in [-Q, 0], b in [0, C] plus i in [1, C],
/// b in [0, C - i]; ordered i-major then b-minor.
std::vector<StateBI> enumerate_states(const SystemParams& params);

std::vector<int> action_set(StateBI s, const SystemParams& params,
                            ActionGrid grid = ActionGrid::BulkReduced);

/// Merged sparse transition-rate row for (s, a); targets carry strictly
/// positive rates and the full-queue arrival self-loop is kept.
std::vector<std::pair<StateBI, double>> rate_row(StateBI s, int a,
                                                 const SystemParams& params);

/// Total output rate a+ gamma + b mu + lambda.
double psi(StateBI s, int a, const SystemParams& params);

/// -(c_perf |i-| + c_power i+ + c_power' a+) / psi(s, a).
double reward(StateBI s, int a, const SystemParams& params);

CtmdpModel build_basic_ctmdp(const SystemParams& params,
                             ActionGrid grid = ActionGrid::BulkReduced,
                             std::size_t state_cap = 10'000'000);

}  // namespace dcpm
