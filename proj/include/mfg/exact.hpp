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

#ifndef MFG_EXACT_HPP
#define MFG_EXACT_HPP

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfg/core.hpp"
#include "mfg/env.hpp"
#include "mfg/meanfield.hpp"

namespace mfg {

// Q values along a fixed flow: q[n][x][a] for n in 0..N_T.
struct FlowQ {
  std::vector<std::vector<Vec>> q;
};

namespace detail {

inline void check_flow(const EnvModel& env, const MeanFieldFlow& flow) {
  if (flow.horizon() != env.horizon)
    throw std::invalid_argument("flow horizon " + std::to_string(flow.horizon()) +
                                " does not match env horizon " +
                                std::to_string(env.horizon));
}

// Backward recursion shared by policy evaluation and best response.
// `continuation` maps (x', Q_{n+1} row at x') to the scalar carried
// back through the transition.
template <typename Continuation>
FlowQ backward_q(const EnvModel& env, const MeanFieldFlow& flow, double gamma,
                 Continuation continuation) {
  check_flow(env, flow);
  int ns = env.states.size, na = env.actions.size();
  FlowQ out;
  out.q.assign(env.horizon + 1, std::vector<Vec>(ns, Vec(na, 0.0)));
  for (int n = env.horizon; n >= 0; --n) {
    const Vec& mu = flow.mu[n];
    double xi = flow.xi(n);
    Vec carry(ns, 0.0);
    if (n < env.horizon) {
      for (int y = 0; y < ns; ++y) carry[y] = continuation(n + 1, y, out.q[n + 1][y]);
    }
    for (int x = 0; x < ns; ++x) {
      for (int a = 0; a < na; ++a) {
        double v = env.reward(n, x, a, mu, xi);
        if (n < env.horizon) {
          if (env.mu_independent_transitions) {
            for (const auto& [y, p] : env.kernel(xi).row(x, a, na)) v += gamma * p * carry[y];
          } else {
            Vec row = env.transition(n, x, a, mu, xi);
            for (int y = 0; y < ns; ++y) v += gamma * row[y] * carry[y];
          }
        }
        out.q[n][x][a] = v;
      }
    }
  }
  return out;
}

}  // namespace detail

// Q-function of `policy` against the frozen flow (Q_n = r_n + gamma * E[pi Q_{n+1}]).
inline FlowQ evaluate_policy_q(const EnvModel& env, const MasterPolicy& policy,
                               const MeanFieldFlow& flow, double gamma = 1.0) {
  return detail::backward_q(env, flow, gamma, [&](int n1, int y, const Vec& q_next) {
    Vec pi = policy.action_probs(n1, y, flow.mu[n1], &flow.path);
    validate_action_distribution(pi);
    double v = 0.0;
    for (std::size_t a = 0; a < pi.size(); ++a) v += pi[a] * q_next[a];
    return v;
  });
}

// Optimal Q against the frozen flow via backward induction with max.
inline FlowQ best_response_q(const EnvModel& env, const MeanFieldFlow& flow,
                             double gamma = 1.0) {
  return detail::backward_q(env, flow, gamma, [](int, int, const Vec& q_next) {
    return *std::max_element(q_next.begin(), q_next.end());
  });
}

// Greedy policy of a Q table; argmax ties broken by lowest action index.
inline TimeStatePolicy greedy_policy(const FlowQ& q) {
  int horizon = static_cast<int>(q.q.size()) - 1;
  int ns = static_cast<int>(q.q[0].size());
  int na = static_cast<int>(q.q[0][0].size());
  TimeStatePolicy policy(horizon, ns, na);
  for (int n = 0; n <= horizon; ++n) {
    for (int x = 0; x < ns; ++x) {
      int best = 0;
      for (int a = 1; a < na; ++a)
        if (q.q[n][x][a] > q.q[n][x][best]) best = a;
      Vec row(na, 0.0);
      row[best] = 1.0;
      policy.row(n, x) = row;
    }
  }
  return policy;
}

// Value of a Q table at the flow's initial distribution under a greedy max.
inline double q_value_at_mu0(const FlowQ& q, const Vec& mu0) {
  double v = 0.0;
  for (std::size_t x = 0; x < mu0.size(); ++x)
    v += mu0[x] * *std::max_element(q.q[0][x].begin(), q.q[0][x].end());
  return v;
}

// Exact undiscounted return J(policy; flow) via a forward
// distribution-over-states recursion. No sampling.
inline double policy_return(const EnvModel& env, const MasterPolicy& policy,
                            const MeanFieldFlow& flow, const Vec& mu0) {
  detail::check_flow(env, flow);
  if (sup_norm_diff(mu0, flow.mu[0]) > kMassTol)
    throw std::invalid_argument("policy_return: flow does not start at mu0");
  int ns = env.states.size, na = env.actions.size();
  Vec rho = mu0;
  double total = 0.0;
  for (int n = 0; n <= env.horizon; ++n) {
    const Vec& mu = flow.mu[n];
    double xi = flow.xi(n);
    std::vector<Vec> pi_rows(ns);
    for (int x = 0; x < ns; ++x) {
      if (rho[x] == 0.0) continue;
      pi_rows[x] = policy.action_probs(n, x, mu, &flow.path);
      for (int a = 0; a < na; ++a)
        total += rho[x] * pi_rows[x][a] * env.reward(n, x, a, mu, xi);
    }
    if (n == env.horizon) break;
    Vec next(ns, 0.0);
    for (int x = 0; x < ns; ++x) {
      if (rho[x] == 0.0) continue;
      for (int a = 0; a < na; ++a) {
        double w = rho[x] * pi_rows[x][a];
        if (w == 0.0) continue;
        if (env.mu_independent_transitions) {
          for (const auto& [y, p] : env.kernel(xi).row(x, a, na)) next[y] += w * p;
        } else {
          Vec row = env.transition(n, x, a, mu, xi);
          for (int y = 0; y < ns; ++y) next[y] += w * row[y];
        }
      }
    }
    rho = std::move(next);
  }
  return total;
}

struct ExploitabilityEntry {
  std::string mu0_label;
  std::string noise_label;
  double br_value = 0.0;
  double policy_value = 0.0;
  double gap = 0.0;
};

struct ExploitabilityReport {
  std::vector<ExploitabilityEntry> entries;
  double mean_gap = 0.0;
  int iteration = 0;
  std::uint64_t seed = 0;
  // Flows behind the report use exact propagation.
  std::string flow_mode = "exact";

  void finalize() {
    mean_gap = 0.0;
    for (const auto& e : entries) mean_gap += e.gap;
    if (!entries.empty()) mean_gap /= entries.size();
  }
};

// Exploitability of `policy`: for each (mu0, noise path), the best
// response value against the policy's own induced flow minus the
// policy's value, averaged uniformly.
inline ExploitabilityReport exploitability(const EnvModel& env, const MasterPolicy& policy,
                                           const InitialDistributionSet& mu0_set,
                                           const std::vector<CommonNoisePath>& paths) {
  ExploitabilityReport report;
  std::vector<CommonNoisePath> effective = paths;
  if (effective.empty()) effective.push_back(zero_path(env.horizon));
  for (const auto& [label, mu0] : mu0_set.members) {
    for (const auto& path : effective) {
      MeanFieldFlow flow = induced_flow(env, policy, mu0, path, label);
      ExploitabilityEntry entry;
      entry.mu0_label = label;
      entry.noise_label = path.label;
      entry.br_value = q_value_at_mu0(best_response_q(env, flow), mu0);
      entry.policy_value = policy_return(env, policy, flow, mu0);
      entry.gap = entry.br_value - entry.policy_value;
      report.entries.push_back(std::move(entry));
    }
  }
  report.finalize();
  return report;
}

inline ExploitabilityReport exploitability(const EnvModel& env,
                                           const MasterPolicy& policy, const Vec& mu0) {
  InitialDistributionSet set;
  set.members.emplace_back("mu0", mu0);
  return exploitability(env, policy, set, {});
}

// Independent oracle: enumerate every deterministic Markov policy and
// return the maximum exact return against the frozen flow. Guarded so
// it is only usable on tiny instances.
inline double brute_force_best_return(const EnvModel& env, const MeanFieldFlow& flow,
                                      const Vec& mu0) {
  detail::check_flow(env, flow);
  int ns = env.states.size, na = env.actions.size();
  int digits = ns * (env.horizon + 1);
  double count = std::pow(static_cast<double>(na), digits);
  if (count > 1e6)
    throw std::invalid_argument("brute_force_best_return: " + std::to_string(count) +
                                " deterministic policies exceed the 1e6 guard");
  std::vector<int> assignment(digits, 0);
  TimeStatePolicy policy(env.horizon, ns, na);
  double best = -std::numeric_limits<double>::infinity();
  while (true) {
    for (int n = 0; n <= env.horizon; ++n) {
      for (int x = 0; x < ns; ++x) {
        Vec row(na, 0.0);
        row[assignment[n * ns + x]] = 1.0;
        policy.row(n, x) = row;
      }
    }
    best = std::max(best, policy_return(env, policy, flow, mu0));
    int i = 0;
    for (; i < digits; ++i) {
      if (++assignment[i] < na) break;
      assignment[i] = 0;
    }
    if (i == digits) break;
  }
  return best;
}

// Lasry-Lions inner product sum_x (mu - mu')(rbar(x,mu) - rbar(x,mu')).
// Diagnostic only; <= 0 under monotone interactions.
inline double monotonicity_probe(const EnvModel& env, const Vec& mu, const Vec& mu_prime,
                                 double xi) {
  if (!env.interaction)
    throw std::logic_error("monotonicity_probe: env " + env.name +
                           " declares no interaction component");
  validate_state_distribution(mu, env.states);
  validate_state_distribution(mu_prime, env.states);
  double total = 0.0;
  for (int x = 0; x < env.states.size; ++x) {
    total += (mu[x] - mu_prime[x]) *
             (env.interaction(x, mu, xi) - env.interaction(x, mu_prime, xi));
  }
  return total;
}

inline void write_exploitability_header(std::ostream& os) {
  os << "iteration,seed,mu0_label,noise_label,br_value,policy_value,gap\n";
}

inline void write_exploitability_rows(std::ostream& os, const ExploitabilityReport& r) {
  for (const auto& e : r.entries) {
    os << r.iteration << ',' << r.seed << ',' << e.mu0_label << ',' << e.noise_label << ','
       << e.br_value << ',' << e.policy_value << ',' << e.gap << '\n';
  }
}

}  // namespace mfg

#endif  // MFG_EXACT_HPP
