#include "dcpm/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dcpm/model_basic.hpp"
#include "dcpm/numerics.hpp"

namespace dcpm {

namespace {

int floor_div(int a, int b) {
  int q = a / b;
  if (a % b != 0 && (a < 0) != (b < 0)) --q;
  return q;
}

int ceil_div(int a, int b) { return -floor_div(-a, b); }

}  // namespace

int LevelScheme::busy_level_of(int b) const {
  for (int B = 0; B < L; ++B)
    if (b < endpoints[static_cast<std::size_t>(B) + 1]) return B;
  return L - 1;
}

int LevelScheme::iw_level_of(int i) const {
  return std::clamp(floor_div(i, K_I), -neg_levels, L - 1);
}

LevelScheme build_level_scheme(const SystemParams& params, int L,
                               bool allow_ragged_levels) {
  params.validate();
  if (L < 2)
    throw std::invalid_argument("build_level_scheme: L must be >= 2");

  LevelScheme sch;
  sch.L = L;
  sch.C = params.C;
  sch.Q = params.Q;
  if (params.C % L == 0) {
    sch.K_I = params.C / L;
  } else if (allow_ragged_levels) {
    sch.K_I = ceil_div(params.C, L);
  } else {
    throw std::invalid_argument("build_level_scheme: L must divide C");
  }
  sch.neg_levels = ceil_div(params.Q, sch.K_I);

  const double rho = params.rho();
  const long q_lo = numerics::poisson_quantile(params.epsilon / 2.0, rho);
  const long q_hi = numerics::poisson_quantile(1.0 - params.epsilon / 2.0, rho);
  sch.K_B = std::max(1, static_cast<int>((q_hi - q_lo) / L));

  const double half = 0.5 * sch.K_B * L;
  sch.beta_lo = std::max(0, static_cast<int>(std::floor(rho - half)));
  sch.beta_hi = static_cast<int>(std::ceil(rho + half));

  sch.endpoints.assign(static_cast<std::size_t>(L) + 1, 0);
  for (int B = 1; B < L; ++B)
    sch.endpoints[static_cast<std::size_t>(B)] = B * sch.K_B + sch.beta_lo;
  sch.endpoints[static_cast<std::size_t>(L)] = params.C + 1;
  if (sch.endpoints[static_cast<std::size_t>(L) - 1] > params.C)
    throw std::invalid_argument(
        "build_level_scheme: busy grid exceeds C; increase epsilon or "
        "reduce L");
  return sch;
}

BoundaryStats boundary_stats(int B, const LevelScheme& scheme,
                             const SystemParams& params) {
  BoundaryStats st;
  st.lo = scheme.busy_lo(B);
  st.hi = scheme.busy_hi(B);
  const double rho = params.rho();
  // Sum the pmf directly instead of differencing cdf values; avoids
  // cancellation on far-tail levels.
  double mass = 0.0, n = 0.0, nm = 0.0;
  for (int x = st.lo; x <= st.hi; ++x) {
    const double f = numerics::poisson_pmf(x, rho);
    mass += f;
    n += x * f;
    if (x > st.lo) nm += x * f;
  }
  if (!(mass > 0.0))
    throw std::runtime_error("boundary_stats: level mass underflows");
  st.p_lo = numerics::poisson_pmf(st.lo, rho) / mass;
  st.p_hi = numerics::poisson_pmf(st.hi, rho) / mass;
  st.n_mean = n / mass;
  // conditional on b above the lower boundary, so that the product
  // (1 - p_lo) * n_minus recovers the level-average service rate
  const double above = mass - numerics::poisson_pmf(st.lo, rho);
  st.n_minus = above > 0.0 ? nm / above : 0.0;
  return st;
}

double eta(const BoundaryStats& stats, int a_plus, const LevelScheme& scheme,
           const SystemParams& params) {
  return (params.mu * stats.n_mean + a_plus * scheme.K_I * params.gamma) /
         params.lambda;
}

std::pair<double, double> u_probs(double eta_value, int K_I) {
  if (K_I <= 1) return {1.0, 1.0};
  if (std::abs(eta_value - 1.0) < 1e-9)
    return {1.0 / K_I, 1.0 / K_I};
  if (eta_value < 1.0) {
    const double u_lo =
        (1.0 - eta_value) / (1.0 - std::pow(eta_value, K_I));
    return {u_lo, std::pow(eta_value, K_I - 1) * u_lo};
  }
  // eta > 1: evaluate from the other end so the powers stay bounded
  const double z = 1.0 / eta_value;
  const double u_hi = (1.0 - z) / (1.0 - std::pow(z, K_I));
  return {std::pow(z, K_I - 1) * u_hi, u_hi};
}

double i_bar(int I, double eta_value, int K_I) {
  double tot = 0.0, acc = 0.0;
  for (int j = 0; j < K_I; ++j) {
    const double w = eta_value <= 1.0
                         ? std::pow(eta_value, j)
                         : std::pow(1.0 / eta_value, K_I - 1 - j);
    tot += w;
    acc += (static_cast<double>(K_I) * I + j) * w;
  }
  return acc / tot;
}

HRates h_rates(int I, int a_plus, const LevelScheme& scheme,
               const BoundaryStats& stats, std::pair<double, double> u,
               const SystemParams& params) {
  const double lam = params.lambda;
  const double mu = params.mu;
  const double setup = params.gamma * a_plus * scheme.K_I;
  const double u_lo = u.first, u_hi = u.second;
  const double p_lo = stats.p_lo, p_hi = stats.p_hi;

  HRates h;
  if (I >= 0) {
    h.b_up = lam * p_hi * (1.0 - u_lo);
    h.b_down = mu * stats.lo * p_lo * (1.0 - u_hi);
    h.i_up = u_hi * (setup + (1.0 - p_lo) * mu * stats.n_minus);
    if (I == 0) {
      // bottom of level 0 is i = 0: an arrival there finds no idle
      // server and queues, leaving the busy count unchanged
      h.i_down = lam * u_lo;
      h.bup_idown = 0.0;
    } else {
      h.i_down = (1.0 - p_hi) * lam * u_lo;
      h.bup_idown = lam * p_hi * u_lo;
    }
    h.bdown_iup = mu * stats.lo * p_lo * u_hi;
  } else {
    h.b_up = setup * p_hi * (1.0 - u_hi);
    h.i_up = u_hi * (mu * stats.n_mean + (1.0 - p_hi) * setup);
    h.i_down = lam * u_lo;
    h.bup_iup = setup * p_hi * u_hi;
  }
  return h;
}

std::vector<int> agg_action_set(StateBI S, const LevelScheme& scheme,
                                AggActionMode mode) {
  const int Ip = pos_part(S.i);
  const int lo = scheme.busy_lo(S.b);
  const int bulk = std::max(
      0, floor_div(scheme.C - lo - Ip * scheme.K_I, scheme.K_I));
  std::vector<int> out;
  if (S.i < 0 && mode == AggActionMode::ForcedBulk) {
    out.push_back(bulk);
    return out;
  }
  for (int A = -Ip; A <= 0; ++A) out.push_back(A);
  if (bulk > 0) out.push_back(bulk);
  return out;
}

CtmdpModel build_multilevel_ctmdp(const SystemParams& params, int L,
                                  AggOptions opts) {
  const LevelScheme sch =
      build_level_scheme(params, L, opts.allow_ragged_levels);

  CtmdpModel m;
  for (int I = -sch.neg_levels; I < sch.L; ++I)
    for (int B = 0; B < sch.L; ++B) m.states.push_back({B, I});
  m.finalize_index();
  m.actions.resize(m.states.size());
  m.rates.resize(m.states.size());
  m.rewards.resize(m.states.size());
  m.psi.resize(m.states.size());

  std::vector<BoundaryStats> stats;
  stats.reserve(static_cast<std::size_t>(sch.L));
  for (int B = 0; B < sch.L; ++B)
    stats.push_back(boundary_stats(B, sch, params));

  for (std::size_t k = 0; k < m.states.size(); ++k) {
    const StateBI S = m.states[k];
    m.actions[k] = agg_action_set(S, sch, opts.action_mode);
    for (int A : m.actions[k]) {
      const int a_plus = pos_part(A);
      // a switch-off acts instantly, so the rates are those of the
      // already-shifted level
      const int I_eff = S.i + neg_part(A);
      const BoundaryStats& st = stats[static_cast<std::size_t>(S.b)];
      const double e = eta(st, a_plus, sch, params);
      const auto u = u_probs(e, sch.K_I);
      const HRates h = h_rates(I_eff, a_plus, sch, st, u, params);

      std::vector<std::pair<int, double>> row;
      auto add = [&](int B2, int I2, double r) {
        if (!(r > 0.0)) return;
        B2 = std::clamp(B2, 0, sch.L - 1);
        I2 = std::clamp(I2, -sch.neg_levels, sch.L - 1);
        const int t = m.index_of({B2, I2});
        for (auto& en : row)
          if (en.first == t) {
            en.second += r;
            return;
          }
        row.push_back({t, r});
      };
      add(S.b + 1, I_eff, h.b_up);
      add(S.b - 1, I_eff, h.b_down);
      add(S.b, I_eff + 1, h.i_up);
      add(S.b, I_eff - 1, h.i_down);
      add(S.b + 1, I_eff + 1, h.bup_iup);
      add(S.b + 1, I_eff - 1, h.bup_idown);
      add(S.b - 1, I_eff + 1, h.bdown_iup);

      const double psi_agg = h.sum();
      // the reward reflects the pre-decision level, as in the basic model
      const double ib = i_bar(S.i, e, sch.K_I);
      const double penalty = params.c_perf * std::max(0.0, -ib) +
                             params.c_power * std::max(0.0, ib) +
                             params.c_power_prime * sch.K_I * a_plus;
      m.rates[k].push_back(std::move(row));
      m.rewards[k].push_back(-penalty / psi_agg);
      m.psi[k].push_back(psi_agg);
    }
  }
  return m;
}

LevelScheme uniform_level_scheme(const SystemParams& params, int L_u) {
  params.validate();
  if (L_u < 1)
    throw std::invalid_argument("uniform_level_scheme: L_u must be >= 1");
  if (params.C % L_u != 0)
    throw std::invalid_argument("uniform_level_scheme: L_u must divide C");
  const int K = params.C / L_u;
  // L_u + 1 levels: cells of K consecutive values plus a top cell {C},
  // so that K = 1 reproduces the basic state grid exactly
  LevelScheme sch;
  sch.L = L_u + 1;
  sch.K_B = K;
  sch.K_I = K;
  sch.beta_lo = 0;
  sch.beta_hi = params.C;
  sch.neg_levels = ceil_div(params.Q, K);
  sch.C = params.C;
  sch.Q = params.Q;
  sch.endpoints.assign(static_cast<std::size_t>(sch.L) + 1, 0);
  for (int B = 0; B <= L_u; ++B)
    sch.endpoints[static_cast<std::size_t>(B)] = B * K;
  sch.endpoints[static_cast<std::size_t>(sch.L)] = params.C + 1;
  return sch;
}

CtmdpModel build_uniform_agg_ctmdp(const SystemParams& params, int L_u) {
  const LevelScheme sch = uniform_level_scheme(params, L_u);
  const int K = sch.K_I;
  const double k2 = static_cast<double>(K) * K;
  const double k4 = k2 * k2;

  CtmdpModel m;
  for (int I = -sch.neg_levels; I < sch.L; ++I)
    for (int B = 0; B < sch.L; ++B) {
      // skip cells with no feasible concrete state (b + i > C for every
      // member); they would be absorbing zero-reward traps
      if (I > 0 && (B + I) * K > params.C) continue;
      m.states.push_back({B, I});
    }
  m.finalize_index();
  m.actions.resize(m.states.size());
  m.rates.resize(m.states.size());
  m.rewards.resize(m.states.size());
  m.psi.resize(m.states.size());

  for (std::size_t k = 0; k < m.states.size(); ++k) {
    const StateBI S = m.states[k];
    m.actions[k] = agg_action_set(S, sch, AggActionMode::ZeroOrBulk);
    for (int A : m.actions[k]) {
      const int a = A * K;
      std::vector<std::pair<int, double>> row;
      auto add = [&](int t, double r) {
        if (t < 0)
          throw std::logic_error("build_uniform_agg_ctmdp: target cell missing");
        for (auto& en : row)
          if (en.first == t) {
            en.second += r;
            return;
          }
        row.push_back({t, r});
      };
      double rew = 0.0;
      // average over the K x K concrete cell; pairs where the state or
      // the scaled action is infeasible contribute nothing
      for (int y = 0; y < K; ++y) {
        for (int z = 0; z < K; ++z) {
          const StateBI s{S.b * K + y, S.i * K + z};
          if (s.b > params.C) continue;
          if (s.i < -params.Q || s.i > params.C) continue;
          if (s.i > 0 && s.b + s.i > params.C) continue;
          const int ip = pos_part(s.i);
          if (a < -ip || a > params.C - s.b - ip) continue;
          rew += reward(s, a, params);
          for (const auto& [t, r] : rate_row(s, a, params))
            add(m.index_of({sch.busy_level_of(t.b), sch.iw_level_of(t.i)}),
                r);
        }
      }
      double total = 0.0;
      for (auto& en : row) {
        en.second /= k4;
        total += en.second;
      }
      m.rates[k].push_back(std::move(row));
      m.rewards[k].push_back(rew / k2);
      m.psi[k].push_back(total);
    }
  }
  return m;
}

}  // namespace dcpm
