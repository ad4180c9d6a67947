#include "dcpm/simulator.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace dcpm {

namespace {

// 53-bit uniform on (0, 1]; spelled out so the stream is identical on
// every platform with the same mt19937_64 seed
double uniform_01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

struct Batch {
  double wait = 0.0;
  double power = 0.0;
  double time = 0.0;
};

double ci_halfwidth(const std::vector<double>& means) {
  const double n = static_cast<double>(means.size());
  double m = 0.0;
  for (double x : means) m += x;
  m /= n;
  double var = 0.0;
  for (double x : means) var += (x - m) * (x - m);
  var /= n - 1.0;
  return 1.96 * std::sqrt(var / n);
}

}  // namespace

SimMetrics simulate(const SystemParams& params, const PolicyFn& policy,
                    long long horizon_events, std::uint64_t seed,
                    double warmup_fraction) {
  params.validate();
  if (horizon_events < 10'000)
    throw std::invalid_argument("simulate: need at least 1e4 events");
  if (!(warmup_fraction >= 0.0) || !(warmup_fraction < 1.0))
    throw std::invalid_argument("simulate: warmup_fraction must be in [0,1)");

  std::mt19937_64 rng(seed);
  int busy = 0, idle = 0, setup = 0, queue = 0;
  // idle count the power integral charges for the current sojourn: the
  // decision state's own count, before any shed takes effect
  int charged_idle = 0;

  auto apply_policy = [&]() {
    const int i_sig = queue > 0 ? -queue : idle;
    const int ip = i_sig > 0 ? i_sig : 0;
    const int a = policy(busy, i_sig);
    if (a < -ip || a > params.C - busy - ip) {
      std::ostringstream msg;
      msg << "simulate: infeasible action " << a << " at (b=" << busy
          << ", i=" << i_sig << ')';
      throw std::runtime_error(msg.str());
    }
    charged_idle = ip;
    // exactly max(a,0) servers in setup: extras power off, deficits
    // pull from Off; a shed also clears the setup pool
    setup = a > 0 ? a : 0;
    if (a < 0) idle += a;
    if (busy + idle + setup > params.C || idle < 0 ||
        (idle > 0 && queue > 0))
      throw std::logic_error("simulate: state invariant violated");
  };
  apply_policy();

  const long long warmup =
      static_cast<long long>(warmup_fraction * static_cast<double>(horizon_events));
  constexpr int kBatches = 32;
  const long long measured = horizon_events - warmup;
  std::vector<Batch> batches(kBatches);
  long long arrivals = 0, drops = 0;

  for (long long ev = 0; ev < horizon_events; ++ev) {
    const double service = busy * params.mu;
    const double turn_on = setup * params.gamma;
    const double total = params.lambda + service + turn_on;
    const double dt = -std::log(uniform_01(rng)) / total;

    if (ev >= warmup) {
      const long long pos = ev - warmup;
      Batch& b = batches[static_cast<std::size_t>(pos * kBatches / measured)];
      b.wait += queue * dt;
      b.power +=
          (params.c_power * charged_idle + params.c_power_prime * setup) * dt;
      b.time += dt;
    }

    const double pick = uniform_01(rng) * total;
    if (pick < params.lambda) {
      if (ev >= warmup) ++arrivals;
      if (idle > 0) {
        --idle;
        ++busy;
      } else if (queue < params.Q) {
        ++queue;
      } else if (ev >= warmup) {
        ++drops;
      }
    } else if (pick < params.lambda + service) {
      --busy;
      if (queue > 0) {
        --queue;
        ++busy;
      } else {
        ++idle;
      }
    } else {
      --setup;
      if (queue > 0) {
        --queue;
        ++busy;
      } else {
        ++idle;
      }
    }
    apply_policy();
  }

  SimMetrics out;
  out.events = horizon_events;
  double wait_int = 0.0, power_int = 0.0;
  std::vector<double> wait_means, power_means, reward_means;
  for (const Batch& b : batches) {
    wait_int += b.wait;
    power_int += b.power;
    out.sim_time += b.time;
    if (b.time > 0.0) {
      wait_means.push_back(b.wait / b.time);
      power_means.push_back(b.power / b.time);
      reward_means.push_back(
          -(params.c_perf * b.wait + b.power) / b.time);
    }
  }
  out.e_wait = wait_int / out.sim_time;
  out.e_power = power_int / out.sim_time;
  out.e_reward = -(params.c_perf * out.e_wait + out.e_power);
  out.drop_fraction =
      arrivals > 0 ? static_cast<double>(drops) / static_cast<double>(arrivals)
                   : 0.0;
  if (wait_means.size() > 1) {
    out.ci_wait = ci_halfwidth(wait_means);
    out.ci_power = ci_halfwidth(power_means);
    out.ci_reward = ci_halfwidth(reward_means);
  }
  return out;
}

}  // namespace dcpm
