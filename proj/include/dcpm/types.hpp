#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

namespace dcpm {

/// All scalar inputs of the power-management model.
struct SystemParams {
  int C = 1;                  // number of servers
  int Q = 1;                  // queue capacity
  double lambda = 1.0;        // job arrival rate
  double mu = 1.0;            // per-server service rate
  double gamma = 1.0;         // setup completion rate
  double c_perf = 1.0;        // weight on waiting jobs
  double c_power = 1.0;       // weight on idle servers
  double c_power_prime = 2.0; // weight on setup servers
  double epsilon = 0.01;      // confidence mass used for busy level sizing

  double rho() const { return lambda / mu; }

  /// Throws std::invalid_argument on any out-of-range field,
  /// including rho >= C (the model targets under-loaded systems).
  void validate() const;
};

/// Concrete state (b, i): b busy servers, i idle servers when i >= 0,
/// negated waiting-job count when i < 0. Aggregated models reuse the
/// same pair as (B, I) level coordinates.
struct StateBI {
  int b = 0;
  int i = 0;
  friend bool operator==(const StateBI&, const StateBI&) = default;
};

inline int pos_part(int x) { return x > 0 ? x : 0; }
inline int neg_part(int x) { return x < 0 ? x : 0; }

/// Deterministic map state -> action, indexed by model state index.
struct Policy {
  std::vector<int> choice;
};

/// Indexed sparse CTMDP. One rate row per (state, action); rows are
/// merged by target state and their sum equals psi(s, a). Rewards are
/// non-positive (penalty convention). Immutable once built; safe to
/// share read-only across threads.
struct CtmdpModel {
  std::vector<StateBI> states;
  std::vector<std::vector<int>> actions;  // sorted ascending per state
  std::vector<std::vector<std::vector<std::pair<int, double>>>> rates;
  std::vector<std::vector<double>> rewards;
  std::vector<std::vector<double>> psi;

  int index_of(StateBI s) const {
    auto it = index_.find(key(s));
    return it == index_.end() ? -1 : it->second;
  }

  int action_index(int state, int a) const {
    const auto& as = actions[static_cast<std::size_t>(state)];
    for (std::size_t k = 0; k < as.size(); ++k)
      if (as[k] == a) return static_cast<int>(k);
    return -1;
  }

  std::size_t state_action_count() const {
    std::size_t n = 0;
    for (const auto& as : actions) n += as.size();
    return n;
  }

  /// Rebuilds the state lookup map; call after filling `states`.
  void finalize_index() {
    index_.clear();
    index_.reserve(states.size());
    for (std::size_t k = 0; k < states.size(); ++k)
      index_.emplace(key(states[k]), static_cast<int>(k));
  }

  /// CSV (state_b, state_i, action, target_b, target_i, rate).
  void dump_rates_csv(std::ostream& os) const;
  /// CSV (state_b, state_i, action, reward, psi).
  void dump_rewards_csv(std::ostream& os) const;

 private:
  static std::int64_t key(StateBI s) {
    return (static_cast<std::int64_t>(s.b) << 32) ^
           static_cast<std::uint32_t>(s.i);
  }
  std::unordered_map<std::int64_t, int> index_;
};

}  // namespace dcpm
