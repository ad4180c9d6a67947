#pragma once

#include <cstddef>
#include <vector>

#include "dcpm/types.hpp"

namespace dcpm {

/// Uniformized discrete-time MDP in flat CSR form. State-action k of
/// state s lives at index sa_offset[s] + k; its transition row spans
/// [row_offset[sa], row_offset[sa+1]) in col/prob.
struct DtmdpUniform {
  double c = 0.0;  // uniformization constant
  std::size_t n_states = 0;
  std::vector<std::size_t> sa_offset;
  std::vector<int> sa_action;
  std::vector<double> sa_reward;  // r * psi / c
  std::vector<std::size_t> row_offset;
  std::vector<int> col;
  std::vector<double> prob;
};

/// c = margin * max_{s,a}(psi - self-loop rate); the diagonal picks up
/// the remaining probability mass so every row sums to 1.
DtmdpUniform uniformize(const CtmdpModel& model, double margin = 1.05);

struct SolveResult {
  double gain = 0.0;           // average reward per unit time (CT units)
  std::vector<double> bias;    // relative values, bias[0] == 0
  Policy policy;               // greedy actions, smallest action on ties
  long iterations = 0;
  double span = 0.0;           // final Bellman-residual span, CT units
};

/// Relative value iteration with reference state 0. `tol` bounds the
/// span of successive value differences in continuous-time units
/// (i.e. c * DT-span). Throws std::runtime_error on non-convergence.
SolveResult relative_value_iteration(const DtmdpUniform& dtmdp,
                                     double tol = 1e-9,
                                     long max_iters = 1'000'000);

struct PolicyEvalResult {
  double gain = 0.0;
  double e_wait = 0.0;   // E[|i-|]
  double e_power = 0.0;  // E[c_power i+ + c_power' a+]
  std::vector<double> stationary;  // full-size; zero off the recurrent class
};

/// Exact stationary analysis of the CTMC induced by `policy`, restricted
/// to the recurrent class reachable from state (0,0). Throws
/// std::runtime_error when the reachable set has more than one recurrent
/// class, std::invalid_argument when the policy leaves the action set.
PolicyEvalResult evaluate_policy(const CtmdpModel& model, const Policy& policy,
                                 const SystemParams& params);

struct SizeCount {
  long long n_states = 0;
  long long n_state_actions = 0;
  double complexity = 0.0;  // the per-step complexity expression
};

/// Counting-convention sizes of the basic model (each i > 0 state
/// contributes i + 2 actions) by direct enumeration.
SizeCount count_basic(const SystemParams& params);

/// Closed forms (Q+1)(C+1) + C(C+1)/2 and 2(Q+1)(C+1) + C(C+1)(C+8)/6.
SizeCount count_basic_closed_form(const SystemParams& params);

/// Multi-level sizes from the level grid, complexity
/// L^2 (Q/K_I + L^2)(Q/K_I + L).
SizeCount count_multilevel(const SystemParams& params, int L);

}  // namespace dcpm
