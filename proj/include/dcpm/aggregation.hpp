#pragma once

#include <utility>
#include <vector>

#include "dcpm/types.hpp"

namespace dcpm {

/// Partition of the busy range [0, C] into L levels of size K_B (edge
/// levels absorb the Poisson tails below beta_lo and above beta_hi) and
/// of the I/W range into levels of size K_I.
struct LevelScheme {
  int L = 0;
  int K_B = 0;
  int K_I = 0;
  int beta_lo = 0;
  int beta_hi = 0;
  int neg_levels = 0;
  int C = 0;
  int Q = 0;
  // endpoints[0] = 0, endpoints[B] = B*K_B + beta_lo for 1..L-1,
  // endpoints[L] = C+1; busy level B covers [endpoints[B], endpoints[B+1]-1].
  std::vector<int> endpoints;

  int busy_lo(int B) const { return endpoints[static_cast<std::size_t>(B)]; }
  int busy_hi(int B) const {
    return endpoints[static_cast<std::size_t>(B) + 1] - 1;
  }
  int busy_level_of(int b) const;
  /// floor(i / K_I) clamped into [-neg_levels, L-1].
  int iw_level_of(int i) const;
};

/// Conditional boundary probabilities and mean busy counts of one level.
struct BoundaryStats {
  int lo = 0;             // lower busy boundary of the level
  int hi = 0;             // upper busy boundary of the level
  double p_lo = 0.0;      // P(b = lower boundary | level)
  double p_hi = 0.0;      // P(b = upper boundary | level)
  double n_mean = 0.0;    // E[b | level]
  double n_minus = 0.0;   // E[b | level, b > lower boundary] (0 if singleton)
};

/// The seven level-transition rate functions.
struct HRates {
  double b_up = 0.0;       // (B+1, I)
  double b_down = 0.0;     // (B-1, I)
  double i_up = 0.0;       // (B, I+1)
  double i_down = 0.0;     // (B, I-1)
  double bup_iup = 0.0;    // (B+1, I+1)
  double bup_idown = 0.0;  // (B+1, I-1)
  double bdown_iup = 0.0;  // (B-1, I+1)

  double sum() const {
    return b_up + b_down + i_up + i_down + bup_iup + bup_idown + bdown_iup;
  }
};

/// Action-set convention for I < 0 levels. ZeroOrBulk allows {0, bulk};
/// ForcedBulk keeps only the bulk action (the a >= |i| reading).
enum class AggActionMode { ZeroOrBulk, ForcedBulk };

struct AggOptions {
  AggActionMode action_mode = AggActionMode::ZeroOrBulk;
  bool allow_ragged_levels = false;  // K_I = ceil(C/L), last level truncated
};

/// Throws std::invalid_argument when L < 2, when L does not divide C
/// (unless ragged levels are enabled), or when the busy grid spills
/// past C.
LevelScheme build_level_scheme(const SystemParams& params, int L,
                               bool allow_ragged_levels = false);

BoundaryStats boundary_stats(int B, const LevelScheme& scheme,
                             const SystemParams& params);

/// (mu N_B + A+ K_I gamma) / lambda.
double eta(const BoundaryStats& stats, int a_plus, const LevelScheme& scheme,
           const SystemParams& params);

/// First and last stationary probabilities of the K_I-state birth-death
/// chain with birth/death ratio eta.
std::pair<double, double> u_probs(double eta_value, int K_I);

/// Expected i within level I of the same birth-death chain.
double i_bar(int I, double eta_value, int K_I);

HRates h_rates(int I, int a_plus, const LevelScheme& scheme,
               const BoundaryStats& stats, std::pair<double, double> u,
               const SystemParams& params);

std::vector<int> agg_action_set(StateBI S, const LevelScheme& scheme,
                                AggActionMode mode = AggActionMode::ZeroOrBulk);

/// The multi-level CTMDP over (B, I) levels. Transitions that would
/// leave the level grid are clipped to the nearest valid level.
CtmdpModel build_multilevel_ctmdp(const SystemParams& params, int L,
                                  AggOptions opts = {});

/// Uniform state-aggregation baseline: meta-rates are K^4-fold averages
/// of basic-model rates and meta-rewards K^2-fold averages of basic
/// rewards, with K = C / L_u and action A mapped to a = A*K.
CtmdpModel build_uniform_agg_ctmdp(const SystemParams& params, int L_u);

/// Level scheme describing the uniform aggregation cells (K_B = K_I = K,
/// endpoints at multiples of K); used to lift uniform policies.
LevelScheme uniform_level_scheme(const SystemParams& params, int L_u);

}  // namespace dcpm
