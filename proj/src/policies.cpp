#include "dcpm/policies.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace dcpm {

double static_on_threshold(const SystemParams& params) {
  const double rho = params.rho();
  return rho + std::sqrt(rho);
}

namespace {

int threshold_action(StateBI s, const ThresholdConfig& cfg,
                     const SystemParams& params, bool staggered) {
  const int cs = static_cast<int>(std::lround(cfg.static_on));
  const int ip = pos_part(s.i);
  int a;
  if (s.i <= -cfg.k)
    // at or past the waiting-job threshold: bulk turns every Off server
    // on, staggered keeps one setup per waiting job
    a = staggered ? -s.i : params.C - s.b;
  else if (s.b + ip <= cs)
    a = cs - s.b - ip;
  else
    a = pos_part(cs - s.b) - s.i;
  return std::clamp(a, -ip, params.C - s.b - ip);
}

}  // namespace

int bulk_policy(StateBI s, const ThresholdConfig& cfg,
                const SystemParams& params) {
  return threshold_action(s, cfg, params, false);
}

int staggered_policy(StateBI s, const ThresholdConfig& cfg,
                     const SystemParams& params) {
  return threshold_action(s, cfg, params, true);
}

namespace {

int project_action(const CtmdpModel& model, int state, int a) {
  if (model.action_index(state, a) >= 0) return a;
  const auto& as = model.actions[static_cast<std::size_t>(state)];
  if (as.empty()) throw std::logic_error("project_action: empty action set");
  if (a > 0) return as.back();  // bulk-reduced grid: round toward bulk
  int best = as.front();
  for (int cand : as)
    if (std::abs(cand - a) < std::abs(best - a)) best = cand;
  return best;
}

}  // namespace

Policy policy_from_fn(const CtmdpModel& model,
                      const std::function<int(StateBI)>& fn) {
  Policy pol;
  pol.choice.resize(model.states.size());
  for (std::size_t s = 0; s < model.states.size(); ++s)
    pol.choice[s] =
        project_action(model, static_cast<int>(s), fn(model.states[s]));
  return pol;
}

Policy lift_aggregated_policy(const Policy& agg_policy,
                              const CtmdpModel& agg_model,
                              const LevelScheme& scheme,
                              const CtmdpModel& concrete) {
  return policy_from_fn(concrete, [&](StateBI s) {
    const int B = scheme.busy_level_of(s.b);
    const int I = scheme.iw_level_of(s.i);
    const int idx = agg_model.index_of({B, I});
    if (idx < 0)
      throw std::invalid_argument("lift_aggregated_policy: level missing");
    int a = agg_policy.choice[static_cast<std::size_t>(idx)] * scheme.K_I;
    const int ip = pos_part(s.i);
    if (a < 0) a = std::max(a, -ip);
    return std::min(a, scheme.C - s.b - ip);
  });
}

void dump_policy_csv(std::ostream& os, const CtmdpModel& model,
                     const Policy& policy) {
  os << "b,i,action\n";
  for (std::size_t s = 0; s < model.states.size(); ++s)
    os << model.states[s].b << ',' << model.states[s].i << ','
       << policy.choice[s] << '\n';
}

}  // namespace dcpm
