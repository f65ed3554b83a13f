// Copyright 2026 The mfglab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>
#include <sstream>

#include "doctest.h"
#include "mfg/exact.hpp"
#include "test_util.hpp"

using namespace mfg;

namespace {

// Naive expectation-tree oracle for the policy Q-function: recursive
// enumeration with no memoization, no shared backward pass.
double naive_policy_q(const EnvModel& env, const TimeStatePolicy& policy,
                      const MeanFieldFlow& flow, int n, int x, int a) {
  double v = env.reward(n, x, a, flow.mu[n], flow.xi(n));
  if (n == env.horizon) return v;
  Vec row = env.transition(n, x, a, flow.mu[n], flow.xi(n));
  for (int y = 0; y < env.states.size; ++y) {
    if (row[y] == 0.0) continue;
    const Vec& pi = policy.row(n + 1, y);
    for (int b = 0; b < env.actions.size(); ++b) {
      if (pi[b] == 0.0) continue;
      v += row[y] * pi[b] * naive_policy_q(env, policy, flow, n + 1, y, b);
    }
  }
  return v;
}

}  // namespace

TEST_CASE("zero rewards give zero Q and zero exploitability") {
  EnvModel env = testutil::make_zero_reward_env(4, 3, 5, 2);
  TimeStatePolicy policy = testutil::random_policy(env, 10);
  MeanFieldFlow flow = induced_flow(env, policy, uniform_distribution(4));
  FlowQ q = evaluate_policy_q(env, policy, flow);
  FlowQ br = best_response_q(env, flow);
  for (int n = 0; n <= 5; ++n)
    for (int x = 0; x < 4; ++x)
      for (int a = 0; a < 3; ++a) {
        CHECK(q.q[n][x][a] == 0.0);
        CHECK(br.q[n][x][a] == 0.0);
      }
  ExploitabilityReport report = exploitability(env, policy, uniform_distribution(4));
  CHECK(report.mean_gap == 0.0);
}

TEST_CASE("horizon zero reduces to the terminal reward") {
  EnvModel env = testutil::make_random_env(3, 2, 0, 4);
  TimeStatePolicy policy = testutil::random_policy(env, 5);
  MeanFieldFlow flow = induced_flow(env, policy, point_mass(3, 1));
  FlowQ q = evaluate_policy_q(env, policy, flow);
  FlowQ br = best_response_q(env, flow);
  for (int x = 0; x < 3; ++x)
    for (int a = 0; a < 2; ++a) {
      double r = env.reward(0, x, a, flow.mu[0], 0.0);
      CHECK(q.q[0][x][a] == doctest::Approx(r).epsilon(1e-15));
      CHECK(br.q[0][x][a] == doctest::Approx(r).epsilon(1e-15));
    }
}

TEST_CASE("policy q matches a naive expectation-tree oracle") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 10; ++trial) {
    EnvModel env = testutil::make_random_env(3, 2, 2, rng());
    TimeStatePolicy policy = testutil::random_policy(env, rng());
    Vec mu0 = testutil::random_distribution(3, rng);
    MeanFieldFlow flow = induced_flow(env, policy, mu0);
    FlowQ q = evaluate_policy_q(env, policy, flow);
    for (int n = 0; n <= 2; ++n)
      for (int x = 0; x < 3; ++x)
        for (int a = 0; a < 2; ++a)
          CHECK(q.q[n][x][a] ==
                doctest::Approx(naive_policy_q(env, policy, flow, n, x, a)).epsilon(1e-12));
  }
}

TEST_CASE("best response value matches the brute-force policy enumeration") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 8; ++trial) {
    EnvModel env = testutil::make_random_env(3, 2, 2, rng());
    TimeStatePolicy policy = testutil::random_policy(env, rng());
    Vec mu0 = testutil::random_distribution(3, rng);
    MeanFieldFlow flow = induced_flow(env, policy, mu0);
    double br = q_value_at_mu0(best_response_q(env, flow), mu0);
    double brute = brute_force_best_return(env, flow, mu0);
    CHECK(std::abs(br - brute) <= 1e-10);
  }
}

TEST_CASE("policy return equals mu0-weighted policy-smoothed Q at n=0") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    EnvModel env = testutil::make_random_env(4, 3, 4, rng());
    TimeStatePolicy policy = testutil::random_policy(env, rng());
    Vec mu0 = testutil::random_distribution(4, rng);
    MeanFieldFlow flow = induced_flow(env, policy, mu0);
    FlowQ q = evaluate_policy_q(env, policy, flow);
    double expected = 0.0;
    for (int x = 0; x < 4; ++x)
      for (int a = 0; a < 3; ++a) expected += mu0[x] * policy.row(0, x)[a] * q.q[0][x][a];
    CHECK(policy_return(env, policy, flow, mu0) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("single action means zero exploitability") {
  EnvModel env = testutil::make_random_env(4, 1, 5, 3);
  TimeStatePolicy policy = testutil::random_policy(env, 1);
  ExploitabilityReport report = exploitability(env, policy, uniform_distribution(4));
  CHECK(std::abs(report.mean_gap) <= 1e-12);
}

TEST_CASE("best response dominates random deviations") {
  EnvModel env = testutil::make_random_env(5, 3, 6, 37);
  TimeStatePolicy policy = testutil::random_policy(env, 101);
  Vec mu0 = uniform_distribution(5);
  MeanFieldFlow flow = induced_flow(env, policy, mu0);
  double br = q_value_at_mu0(best_response_q(env, flow), mu0);
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    TimeStatePolicy deviation = testutil::random_policy(env, rng());
    CHECK(policy_return(env, deviation, flow, mu0) <= br + 1e-10);
  }
}

TEST_CASE("exploitability is nonnegative under fuzz") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 30; ++trial) {
    EnvModel env = testutil::make_random_env(4, 3, 4, rng());
    TimeStatePolicy policy = testutil::random_policy(env, rng());
    ExploitabilityReport report =
        exploitability(env, policy, testutil::random_distribution(4, rng));
    for (const auto& entry : report.entries) CHECK(entry.gap >= -1e-8);
  }
}

TEST_CASE("greedy best response to its own fixed flow has zero gap when rewards are uncoupled") {
  // With coupling 0 the game degenerates to an MDP: the greedy policy of
  // the optimal Q is exactly optimal regardless of the flow it induces.
  EnvModel env = testutil::make_random_env(4, 3, 5, 47, /*coupling=*/0.0);
  Vec mu0 = uniform_distribution(4);
  MeanFieldFlow any_flow = induced_flow(env, UniformPolicy(3), mu0);
  TimeStatePolicy greedy = greedy_policy(best_response_q(env, any_flow));
  ExploitabilityReport report = exploitability(env, greedy, mu0);
  CHECK(std::abs(report.mean_gap) <= 1e-10);
}

TEST_CASE("brute force refuses oversized instances") {
  EnvModel env = testutil::make_random_env(4, 3, 5, 53);
  MeanFieldFlow flow = induced_flow(env, UniformPolicy(3), uniform_distribution(4));
  CHECK_THROWS_WITH_AS(brute_force_best_return(env, flow, uniform_distribution(4)),
                       doctest::Contains("guard"), std::invalid_argument);
}

TEST_CASE("greedy policy breaks ties toward the lowest action index") {
  FlowQ q;
  q.q.assign(1, std::vector<Vec>(1, Vec{1.0, 1.0, 0.5}));
  TimeStatePolicy policy = greedy_policy(q);
  CHECK(policy.row(0, 0) == Vec{1.0, 0.0, 0.0});
}

TEST_CASE("monotonicity probe") {
  EnvModel bar = make_beach_bar(BeachBarDimension::kOneD, 11, false, 5);
  Vec mu = uniform_distribution(11);
  CHECK(monotonicity_probe(bar, mu, mu, 0.0) == 0.0);

  // Crowd-aversion interactions are Lasry-Lions monotone: probe <= 0,
  // strictly negative for distinct point masses.
  EnvModel grid = make_exploration(ExplorationGeometry::kOneRoom, 5, 5, 5);
  CHECK(monotonicity_probe(grid, point_mass(25, 0), point_mass(25, 7), 0.0) < 0.0);

  // A closed bar switches the interaction off entirely.
  EnvModel closing = make_beach_bar(BeachBarDimension::kOneD, 11, true, 5);
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 50; ++trial) {
    Vec a = testutil::random_distribution(11, rng);
    Vec b = testutil::random_distribution(11, rng);
    CHECK(monotonicity_probe(closing, a, b, 0.0) == 0.0);
    CHECK(monotonicity_probe(closing, a, b, 1.0) <= 1e-12);
    CHECK(monotonicity_probe(grid, testutil::random_distribution(25, rng),
                             testutil::random_distribution(25, rng), 0.0) <= 1e-12);
  }

  EnvModel no_interaction = testutil::make_zero_reward_env(3, 2, 2, 1);
  CHECK_THROWS_AS(monotonicity_probe(no_interaction, uniform_distribution(3),
                                     uniform_distribution(3), 0.0),
                  std::logic_error);
}

TEST_CASE("exploitability csv schema") {
  EnvModel env = testutil::make_random_env(3, 2, 2, 61);
  ExploitabilityReport report =
      exploitability(env, testutil::random_policy(env, 2), uniform_distribution(3));
  report.iteration = 4;
  report.seed = 42;
  std::stringstream ss;
  write_exploitability_header(ss);
  write_exploitability_rows(ss, report);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "iteration,seed,mu0_label,noise_label,br_value,policy_value,gap");
  std::string row;
  std::getline(ss, row);
  CHECK(row.rfind("4,42,mu0,", 0) == 0);
}

TEST_CASE("flow horizon mismatch is rejected") {
  EnvModel env = testutil::make_random_env(3, 2, 4, 67);
  EnvModel shorter = testutil::make_random_env(3, 2, 3, 67);
  TimeStatePolicy policy = testutil::random_policy(shorter, 3);
  MeanFieldFlow flow = induced_flow(shorter, policy, uniform_distribution(3));
  CHECK_THROWS_AS(evaluate_policy_q(env, policy, flow), std::invalid_argument);
}
