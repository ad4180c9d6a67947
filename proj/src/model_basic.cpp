#include "dcpm/model_basic.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <string>

namespace dcpm {

void SystemParams::validate() const {
  if (C < 1 || Q < 1)
    throw std::invalid_argument("SystemParams: C and Q must be >= 1");
  if (!(lambda > 0.0) || !(mu > 0.0) || !(gamma > 0.0))
    throw std::invalid_argument("SystemParams: rates must be positive");
  if (!(c_perf > 0.0) || !(c_power > 0.0) || !(c_power_prime > 0.0))
    throw std::invalid_argument("SystemParams: cost weights must be positive");
  if (!(epsilon > 0.0) || !(epsilon < 1.0))
    throw std::invalid_argument("SystemParams: epsilon must lie in (0,1)");
  if (!(rho() < static_cast<double>(C)))
    throw std::invalid_argument("SystemParams: requires lambda/mu < C");
}

void CtmdpModel::dump_rates_csv(std::ostream& os) const {
  os << "state_b,state_i,action,target_b,target_i,rate\n";
  for (std::size_t s = 0; s < states.size(); ++s)
    for (std::size_t k = 0; k < actions[s].size(); ++k)
      for (const auto& [t, r] : rates[s][k])
        os << states[s].b << ',' << states[s].i << ',' << actions[s][k] << ','
           << states[static_cast<std::size_t>(t)].b << ','
           << states[static_cast<std::size_t>(t)].i << ',' << r << '\n';
}

void CtmdpModel::dump_rewards_csv(std::ostream& os) const {
  os << "state_b,state_i,action,reward,psi\n";
  for (std::size_t s = 0; s < states.size(); ++s)
    for (std::size_t k = 0; k < actions[s].size(); ++k)
      os << states[s].b << ',' << states[s].i << ',' << actions[s][k] << ','
         << rewards[s][k] << ',' << psi[s][k] << '\n';
}

std::vector<StateBI> enumerate_states(const SystemParams& params) {
  params.validate();
  std::vector<StateBI> out;
  out.reserve(static_cast<std::size_t>(params.Q + 1) *
                  static_cast<std::size_t>(params.C + 1) +
              static_cast<std::size_t>(params.C) *
                  static_cast<std::size_t>(params.C + 1) / 2);
  for (int i = -params.Q; i <= params.C; ++i) {
    const int b_max = i > 0 ? params.C - i : params.C;
    for (int b = 0; b <= b_max; ++b) out.push_back({b, i});
  }
  return out;
}

std::vector<int> action_set(StateBI s, const SystemParams& params,
                            ActionGrid grid) {
  const int ip = pos_part(s.i);
  const int bulk = params.C - s.b - ip;
  std::vector<int> out;
  if (grid == ActionGrid::Full) {
    out.reserve(static_cast<std::size_t>(bulk + ip + 1));
    for (int a = -ip; a <= bulk; ++a) out.push_back(a);
  } else {
    out.reserve(static_cast<std::size_t>(ip + 2));
    for (int a = -ip; a <= 0; ++a) out.push_back(a);
    if (bulk > 0) out.push_back(bulk);
  }
  return out;
}

std::vector<std::pair<StateBI, double>> rate_row(StateBI s, int a,
                                                 const SystemParams& params) {
  const int ip = pos_part(s.i);
  if (a < -ip || a > params.C - s.b - ip) {
    std::ostringstream msg;
    msg << "rate_row: action " << a << " infeasible at (" << s.b << ',' << s.i
        << ')';
    throw std::invalid_argument(msg.str());
  }

  std::vector<std::pair<StateBI, double>> row;
  auto add = [&row](int b, int i, double r) {
    if (!(r > 0.0)) return;
    for (auto& e : row)
      if (e.first.b == b && e.first.i == i) {
        e.second += r;
        return;
      }
    row.push_back({{b, i}, r});
  };

  if (a < 0) {
    // turning off |a| idle servers; i > 0 and i + a >= 0 hold on the grid
    if (s.i + a > 0)
      add(s.b + 1, s.i + a - 1, params.lambda);
    else
      add(s.b, -1, params.lambda);
    add(s.b - 1, s.i + a + 1, s.b * params.mu);
  } else {
    if (s.i > 0)
      add(s.b + 1, s.i - 1, params.lambda);
    else if (s.i > -params.Q)
      add(s.b, s.i - 1, params.lambda);
    else
      add(s.b, s.i, params.lambda);  // full queue, arrival dropped
    add(s.b + (s.i >= 0 ? -1 : 0), s.i + 1, s.b * params.mu);
    add(s.b + (s.i >= 0 ? 0 : 1), s.i + 1, a * params.gamma);
  }
  return row;
}

double psi(StateBI s, int a, const SystemParams& params) {
  return pos_part(a) * params.gamma + s.b * params.mu + params.lambda;
}

double reward(StateBI s, int a, const SystemParams& params) {
  const double penalty = params.c_perf * (-neg_part(s.i)) +
                         params.c_power * pos_part(s.i) +
                         params.c_power_prime * pos_part(a);
  return -penalty / psi(s, a, params);
}

CtmdpModel build_basic_ctmdp(const SystemParams& params, ActionGrid grid,
                             std::size_t state_cap) {
  params.validate();
  const std::size_t n_states =
      static_cast<std::size_t>(params.Q + 1) *
          static_cast<std::size_t>(params.C + 1) +
      static_cast<std::size_t>(params.C) *
          static_cast<std::size_t>(params.C + 1) / 2;
  if (n_states > state_cap)
    throw std::length_error("build_basic_ctmdp: state count " +
                            std::to_string(n_states) + " exceeds cap");

  CtmdpModel m;
  m.states = enumerate_states(params);
  m.finalize_index();
  m.actions.resize(m.states.size());
  m.rates.resize(m.states.size());
  m.rewards.resize(m.states.size());
  m.psi.resize(m.states.size());

  for (std::size_t k = 0; k < m.states.size(); ++k) {
    const StateBI s = m.states[k];
    m.actions[k] = action_set(s, params, grid);
    for (int a : m.actions[k]) {
      auto row = rate_row(s, a, params);
      std::vector<std::pair<int, double>> irow;
      irow.reserve(row.size());
      for (const auto& [t, r] : row) {
        const int ti = m.index_of(t);
        if (ti < 0)
          throw std::logic_error("build_basic_ctmdp: target outside grid");
        irow.push_back({ti, r});
      }
      m.rates[k].push_back(std::move(irow));
      m.rewards[k].push_back(reward(s, a, params));
      m.psi[k].push_back(psi(s, a, params));
    }
  }
  return m;
}

}  // namespace dcpm
