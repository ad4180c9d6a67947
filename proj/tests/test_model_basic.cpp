#include <cmath>
#include <stdexcept>
#include <vector>

#include "dcpm/model_basic.hpp"
#include "doctest.h"

using namespace dcpm;

namespace {

SystemParams reference_params() {
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

double row_rate_to(const std::vector<std::pair<StateBI, double>>& row,
                   StateBI t) {
  for (const auto& [s, r] : row)
    if (s == t) return r;
  return 0.0;
}

}  // namespace

TEST_CASE("state enumeration counts and ordering") {
  SystemParams p = reference_params();
  CHECK(enumerate_states(p).size() == 15251);

  p.C = 1;
  p.Q = 1;
  p.lambda = 0.5;
  const auto tiny = enumerate_states(p);
  REQUIRE(tiny.size() == 5);
  CHECK(tiny[0] == StateBI{0, -1});
  CHECK(tiny[1] == StateBI{1, -1});
  CHECK(tiny[2] == StateBI{0, 0});
  CHECK(tiny[3] == StateBI{1, 0});
  CHECK(tiny[4] == StateBI{0, 1});

  p.C = 2;
  CHECK(enumerate_states(p).size() == 9);
}

TEST_CASE("action sets") {
  SystemParams p = reference_params();
  p.C = 6;
  p.Q = 6;
  CHECK(action_set({2, 3}, p) == std::vector<int>{-3, -2, -1, 0, 1});
  CHECK(action_set({4, -2}, p) == std::vector<int>{0, 2});
  CHECK(action_set({6, 0}, p) == std::vector<int>{0});
  CHECK(action_set({2, 3}, p, ActionGrid::Full) ==
        std::vector<int>{-3, -2, -1, 0, 1});
  CHECK(action_set({4, -2}, p, ActionGrid::Full) ==
        std::vector<int>{0, 1, 2});
}

TEST_CASE("rate rows reproduce the worked transitions") {
  SystemParams p = reference_params();

  auto row = rate_row({2, 3}, -1, p);
  REQUIRE(row.size() == 2);
  CHECK(row_rate_to(row, {3, 1}) == doctest::Approx(30.0));
  CHECK(row_rate_to(row, {1, 3}) == doctest::Approx(2.0));

  row = rate_row({0, -p.Q}, 0, p);
  REQUIRE(row.size() == 1);
  CHECK(row_rate_to(row, {0, -p.Q}) == doctest::Approx(30.0));

  row = rate_row({1, -1}, 2, p);
  REQUIRE(row.size() == 3);
  CHECK(row_rate_to(row, {1, -2}) == doctest::Approx(30.0));
  CHECK(row_rate_to(row, {1, 0}) == doctest::Approx(1.0));
  CHECK(row_rate_to(row, {2, 0}) == doctest::Approx(4.0));

  CHECK_THROWS_AS(rate_row({2, 3}, 96, p), std::invalid_argument);
  CHECK_THROWS_AS(rate_row({2, -1}, -1, p), std::invalid_argument);
}

TEST_CASE("psi and reward") {
  SystemParams p = reference_params();
  CHECK(psi({0, 0}, 0, p) == doctest::Approx(30.0));
  CHECK(psi({2, 3}, -1, p) == doctest::Approx(32.0));
  CHECK(psi({1, -1}, 2, p) == doctest::Approx(35.0));

  CHECK(reward({7, 0}, 0, p) == 0.0);
  CHECK(reward({2, -3}, 0, p) == doctest::Approx(-150.0 / 32.0));
  CHECK(reward({0, 2}, 1, p) == doctest::Approx(-4.0 / 32.0));
}

TEST_CASE("built model: conservation, sign, and counts") {
  SystemParams p = reference_params();
  p.C = 12;
  p.Q = 9;
  p.lambda = 5.0;
  const CtmdpModel m = build_basic_ctmdp(p);

  // dedup removes one pair per state whose bulk action is 0
  const long long convention_pairs =
      2LL * (p.Q + 1) * (p.C + 1) +
      static_cast<long long>(p.C) * (p.C + 1) * (p.C + 8) / 6;
  CHECK(static_cast<long long>(m.state_action_count()) ==
        convention_pairs - (p.C + p.Q + 1));

  for (std::size_t s = 0; s < m.states.size(); ++s) {
    for (std::size_t k = 0; k < m.actions[s].size(); ++k) {
      double tot = 0.0;
      for (const auto& [t, r] : m.rates[s][k]) {
        CHECK(r > 0.0);
        CHECK(t >= 0);
        CHECK(t < static_cast<int>(m.states.size()));
        tot += r;
      }
      CHECK(tot == doctest::Approx(m.psi[s][k]).epsilon(1e-12));
      CHECK(m.rewards[s][k] <= 0.0);
    }
  }
}

TEST_CASE("boundary safety on every row") {
  SystemParams p = reference_params();
  p.C = 8;
  p.Q = 5;
  p.lambda = 3.0;
  for (const StateBI s : enumerate_states(p)) {
    for (int a : action_set(s, p, ActionGrid::Full)) {
      for (const auto& [t, r] : rate_row(s, a, p)) {
        CHECK(t.b >= 0);
        CHECK(t.b <= p.C);
        CHECK(t.i >= -p.Q);
        CHECK(t.i <= p.C);
        if (t.i > 0) CHECK(t.b + t.i <= p.C);
      }
    }
  }
}

TEST_CASE("bulk action keeps the chain connected on small instances") {
  SystemParams p = reference_params();
  p.C = 6;
  p.Q = 6;
  p.lambda = 2.0;
  const CtmdpModel m = build_basic_ctmdp(p);
  // under a == bulk everywhere, every state should reach the busy region
  // and return; verified by BFS over the induced graph from each state
  std::vector<std::vector<int>> succ(m.states.size());
  for (std::size_t s = 0; s < m.states.size(); ++s) {
    const std::size_t k = m.actions[s].size() - 1;  // largest action
    for (const auto& [t, r] : m.rates[s][k])
      succ[s].push_back(t);
  }
  // (0,0) itself is transient under always-bulk (idles are never shed),
  // so probe the fully-busy state instead
  const int target = m.index_of({p.C, 0});
  REQUIRE(target >= 0);
  for (std::size_t s0 = 0; s0 < m.states.size(); ++s0) {
    std::vector<char> seen(m.states.size(), 0);
    std::vector<int> frontier{static_cast<int>(s0)};
    seen[s0] = 1;
    bool hit = false;
    while (!frontier.empty() && !hit) {
      const int s = frontier.back();
      frontier.pop_back();
      for (int t : succ[static_cast<std::size_t>(s)]) {
        if (t == target) hit = true;
        if (!seen[static_cast<std::size_t>(t)]) {
          seen[static_cast<std::size_t>(t)] = 1;
          frontier.push_back(t);
        }
      }
    }
    CHECK(hit);
  }
}

TEST_CASE("parameter validation") {
  SystemParams p = reference_params();
  p.lambda = 120.0;  // rho >= C
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = reference_params();
  p.mu = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = reference_params();
  p.epsilon = 1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = reference_params();
  p.C = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
