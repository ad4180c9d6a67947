#include <cmath>
#include <sstream>

#include "dcpm/model_basic.hpp"
#include "dcpm/policies.hpp"
#include "dcpm/solver.hpp"
#include "doctest.h"

using namespace dcpm;

namespace {

SystemParams fig_params() {
  SystemParams p;
  p.C = 100;
  p.Q = 100;
  p.lambda = 30.0;
  p.mu = 1.0;
  p.gamma = 2.0;
  p.c_perf = 50.0;
  p.c_power = 1.0;
  p.c_power_prime = 2.0;
  return p;
}

}  // namespace

TEST_CASE("static-on threshold") {
  SystemParams p = fig_params();
  CHECK(static_on_threshold(p) == doctest::Approx(30.0 + std::sqrt(30.0)));
  p.lambda = 1.0;
  p.mu = 1.0;
  CHECK(static_on_threshold(p) == doctest::Approx(2.0));
  p.C = 200;
  p.lambda = 100.0;
  CHECK(static_on_threshold(p) == doctest::Approx(110.0));
}

TEST_CASE("bulk policy cases") {
  SystemParams p = fig_params();
  ThresholdConfig cfg{35.0, 1};
  CHECK(bulk_policy({10, 5}, cfg, p) == 20);
  CHECK(bulk_policy({40, -1}, cfg, p) == 60);
  CHECK(bulk_policy({36, 2}, cfg, p) == -2);
  // boundary continuity: exactly at the threshold, do nothing
  CHECK(bulk_policy({30, 5}, cfg, p) == 0);
  CHECK(bulk_policy({35, 0}, cfg, p) == 0);
}

TEST_CASE("staggered policy cases") {
  SystemParams p = fig_params();
  ThresholdConfig cfg{35.0, 1};
  CHECK(staggered_policy({40, -3}, cfg, p) == 3);
  CHECK(staggered_policy({10, 5}, cfg, p) == 20);
  CHECK(staggered_policy({36, 0}, cfg, p) == 0);
}

TEST_CASE("bulk and staggered agree off the substitution branch") {
  SystemParams p = fig_params();
  ThresholdConfig cfg{static_on_threshold(p), 1};
  for (const StateBI s : enumerate_states(p))
    if (s.i > -cfg.k)
      CHECK(bulk_policy(s, cfg, p) == staggered_policy(s, cfg, p));
}

TEST_CASE("every emitted action is feasible on the full grid") {
  SystemParams p = fig_params();
  ThresholdConfig cfg{static_on_threshold(p), 1};
  for (const StateBI s : enumerate_states(p)) {
    const int ip = pos_part(s.i);
    for (int a : {bulk_policy(s, cfg, p), staggered_policy(s, cfg, p)}) {
      CHECK(a >= -ip);
      CHECK(a <= p.C - s.b - ip);
    }
  }
}

TEST_CASE("policy materialization projects onto the model grid") {
  SystemParams p = fig_params();
  p.C = 10;
  p.Q = 10;
  p.lambda = 3.0;
  const CtmdpModel reduced = build_basic_ctmdp(p);
  const CtmdpModel full = build_basic_ctmdp(p, ActionGrid::Full);
  ThresholdConfig cfg{5.0, 1};
  auto fn = [&](StateBI s) { return bulk_policy(s, cfg, p); };

  const Policy on_full = policy_from_fn(full, fn);
  for (std::size_t s = 0; s < full.states.size(); ++s)
    CHECK(on_full.choice[s] == fn(full.states[s]));  // full grid: verbatim

  const Policy on_reduced = policy_from_fn(reduced, fn);
  for (std::size_t s = 0; s < reduced.states.size(); ++s) {
    const int want = fn(reduced.states[s]);
    const int got = on_reduced.choice[s];
    CHECK(reduced.action_index(static_cast<int>(s), got) >= 0);
    if (want <= 0)
      CHECK(got == want);  // the shed range is always present
    else
      CHECK(got == reduced.actions[s].back());  // rounded toward bulk
  }
}

TEST_CASE("lifting an aggregated policy") {
  SystemParams p = fig_params();
  const CtmdpModel agg = build_multilevel_ctmdp(p, 10);
  const LevelScheme sch = build_level_scheme(p, 10);
  const CtmdpModel full = build_basic_ctmdp(p, ActionGrid::Full);

  SUBCASE("constant setup command is clamped by availability") {
    Policy two;
    two.choice.assign(agg.states.size(), 2);
    for (std::size_t s = 0; s < agg.states.size(); ++s)
      if (agg.states[s].i > 0) two.choice[s] = 0;  // keep feasibility simple
    const Policy lifted = lift_aggregated_policy(two, agg, sch, full);
    const int idx = full.index_of({85, 0});
    REQUIRE(idx >= 0);
    CHECK(lifted.choice[static_cast<std::size_t>(idx)] == 15);  // min(20, 15)
    const int idx2 = full.index_of({3, -2});
    REQUIRE(idx2 >= 0);
    CHECK(lifted.choice[static_cast<std::size_t>(idx2)] == 20);  // A*K_I
  }

  SUBCASE("negative level actions clamp to the available idles") {
    Policy shed;
    shed.choice.assign(agg.states.size(), 0);
    for (std::size_t s = 0; s < agg.states.size(); ++s)
      if (agg.states[s].i > 0) shed.choice[s] = -1;
    const Policy lifted = lift_aggregated_policy(shed, agg, sch, full);
    const int idx = full.index_of({5, 3});
    REQUIRE(idx >= 0);
    // level of i=3 is 0, whose action is 0; probe a state in level 1
    const int idx13 = full.index_of({5, 13});
    REQUIRE(idx13 >= 0);
    CHECK(lifted.choice[static_cast<std::size_t>(idx13)] == -10);
    const int idx10 = full.index_of({5, 10});
    REQUIRE(idx10 >= 0);
    CHECK(lifted.choice[static_cast<std::size_t>(idx10)] == -10);
  }

  SUBCASE("unit scaling is the identity") {
    SystemParams q = fig_params();
    q.C = 20;
    q.Q = 20;
    q.lambda = 6.0;
    q.epsilon = 1e-9;
    const CtmdpModel agg1 = build_multilevel_ctmdp(q, 20);
    const LevelScheme sch1 = build_level_scheme(q, 20);
    const CtmdpModel basic = build_basic_ctmdp(q);
    Policy zero;
    zero.choice.assign(agg1.states.size(), 0);
    const Policy lifted = lift_aggregated_policy(zero, agg1, sch1, basic);
    for (int a : lifted.choice) CHECK(a == 0);
  }
}

TEST_CASE("policy csv dump") {
  SystemParams p = fig_params();
  p.C = 2;
  p.Q = 1;
  p.lambda = 1.0;
  const CtmdpModel m = build_basic_ctmdp(p);
  Policy zero;
  zero.choice.assign(m.states.size(), 0);
  std::ostringstream os;
  dump_policy_csv(os, m, zero);
  CHECK(os.str().substr(0, 9) == "b,i,actio");
  CHECK(os.str().find("0,-1,0\n") != std::string::npos);
}
