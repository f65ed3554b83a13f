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

#ifndef MFG_MEANFIELD_HPP
#define MFG_MEANFIELD_HPP

#include <functional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mfg/core.hpp"
#include "mfg/env.hpp"
#include "mfg/noise.hpp"

namespace mfg {

// Population-dependent policy interface: action distribution at
// (timestep, state, mean field, noise history). The noise path pointer
// may be null for noiseless environments; implementations that
// condition on noise read the revealed prefix themselves.
class MasterPolicy {
 public:
  virtual ~MasterPolicy() = default;
  virtual Vec action_probs(int n, int x, const Vec& mu,
                           const CommonNoisePath* path) const = 0;
};

class UniformPolicy : public MasterPolicy {
 public:
  explicit UniformPolicy(int num_actions) : num_actions_(num_actions) {}
  Vec action_probs(int, int, const Vec&, const CommonNoisePath*) const override {
    return Vec(num_actions_, 1.0 / num_actions_);
  }

 private:
  int num_actions_;
};

// Population-independent tabular policy over (timestep, state).
class TimeStatePolicy : public MasterPolicy {
 public:
  TimeStatePolicy() = default;
  TimeStatePolicy(int horizon, int num_states, int num_actions)
      : rows_(horizon + 1, std::vector<Vec>(num_states, Vec(num_actions, 1.0 / num_actions))) {}

  Vec& row(int n, int x) { return rows_[n][x]; }
  const Vec& row(int n, int x) const { return rows_[n][x]; }
  Vec action_probs(int n, int x, const Vec&, const CommonNoisePath*) const override {
    return rows_[n][x];
  }

 private:
  std::vector<std::vector<Vec>> rows_;
};

// Uniform mixture of population-independent policies with action-level
// mixing at each state.
class MixturePolicy : public MasterPolicy {
 public:
  void add(TimeStatePolicy component) { components_.push_back(std::move(component)); }
  std::size_t size() const { return components_.size(); }
  Vec action_probs(int n, int x, const Vec& mu, const CommonNoisePath* path) const override {
    if (components_.empty()) throw std::logic_error("MixturePolicy: empty mixture");
    Vec out = components_.front().action_probs(n, x, mu, path);
    for (std::size_t i = 1; i < components_.size(); ++i) {
      const Vec& p = components_[i].action_probs(n, x, mu, path);
      for (std::size_t a = 0; a < out.size(); ++a) out[a] += p[a];
    }
    for (double& v : out) v /= components_.size();
    return out;
  }

 private:
  std::vector<TimeStatePolicy> components_;
};

// Time-indexed population distribution sequence mu_0..mu_{N_T},
// together with the noise path it is conditioned on.
struct MeanFieldFlow {
  std::vector<Vec> mu;
  CommonNoisePath path;
  std::string mu0_label;
  std::string policy_label;

  int horizon() const { return static_cast<int>(mu.size()) - 1; }
  double xi(int n) const { return path.values.empty() ? 0.0 : path.values.at(n); }
};

// One exact step of the population dynamics:
// mu'(x') = sum_{x,a} mu(x) pi(a|x) p(x'|x,a).
inline Vec propagate(const Vec& mu, const std::function<Vec(int)>& policy_at_n,
                     const EnvModel& env, int n, double xi) {
  Vec out(env.states.size, 0.0);
  int na = env.actions.size();
  if (env.mu_independent_transitions) {
    const SparseKernel& kernel = env.kernel(xi);
    for (int x = 0; x < env.states.size; ++x) {
      if (mu[x] == 0.0) continue;
      Vec pi = policy_at_n(x);
      if (static_cast<int>(pi.size()) != na)
        throw std::invalid_argument("propagate: policy row at state " + std::to_string(x) +
                                    " has wrong length");
      validate_action_distribution(pi);
      for (int a = 0; a < na; ++a) {
        double w = mu[x] * pi[a];
        if (w == 0.0) continue;
        for (const auto& [y, p] : kernel.row(x, a, na)) out[y] += w * p;
      }
    }
  } else {
    for (int x = 0; x < env.states.size; ++x) {
      if (mu[x] == 0.0) continue;
      Vec pi = policy_at_n(x);
      validate_action_distribution(pi);
      for (int a = 0; a < na; ++a) {
        double w = mu[x] * pi[a];
        if (w == 0.0) continue;
        Vec row = env.transition(n, x, a, mu, xi);
        for (int y = 0; y < env.states.size; ++y) out[y] += w * row[y];
      }
    }
  }
  // Renormalization guard: the row-stochastic kernel keeps mass at 1 up
  // to float noise; fail loudly if it does not.
  double total = 0.0;
  for (double v : out) total += v;
  if (std::abs(total - 1.0) > kMassTol)
    throw std::runtime_error("propagate: mass drifted to " + std::to_string(total));
  return out;
}

// Exact flow generated by a policy from mu0 along a fixed noise path.
inline MeanFieldFlow induced_flow(const EnvModel& env, const MasterPolicy& policy,
                                  const Vec& mu0, const CommonNoisePath& path,
                                  std::string mu0_label = "mu0",
                                  std::string policy_label = "policy") {
  validate_state_distribution(mu0, env.states);
  MeanFieldFlow flow;
  flow.path = path;
  flow.mu0_label = std::move(mu0_label);
  flow.policy_label = std::move(policy_label);
  flow.mu.reserve(env.horizon + 1);
  flow.mu.push_back(mu0);
  for (int n = 0; n < env.horizon; ++n) {
    const Vec& mu = flow.mu.back();
    Vec next = propagate(
        mu, [&](int x) { return policy.action_probs(n, x, mu, &flow.path); }, env, n,
        flow.xi(n));
    flow.mu.push_back(std::move(next));
  }
  return flow;
}

inline MeanFieldFlow induced_flow(const EnvModel& env, const MasterPolicy& policy,
                                  const Vec& mu0) {
  return induced_flow(env, policy, mu0, zero_path(env.horizon));
}

// Empirical flow from n_agents sampled trajectories sharing the common
// noise path. Policies are fed the empirical field.
inline MeanFieldFlow empirical_flow(const EnvModel& env, const MasterPolicy& policy,
                                    const Vec& mu0, int n_agents,
                                    const CommonNoisePath& path, std::uint64_t seed) {
  if (n_agents < 1) throw std::invalid_argument("empirical_flow: n_agents must be >= 1");
  validate_state_distribution(mu0, env.states);
  std::mt19937_64 rng(seed);
  auto sample_index = [&rng](const Vec& probs) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double r = u(rng), acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (r <= acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
  };

  std::vector<int> states(n_agents);
  for (int i = 0; i < n_agents; ++i) states[i] = sample_index(mu0);

  MeanFieldFlow flow;
  flow.path = path;
  flow.mu0_label = "empirical";
  auto histogram = [&]() {
    Vec mu(env.states.size, 0.0);
    for (int s : states) mu[s] += 1.0 / n_agents;
    return mu;
  };
  flow.mu.push_back(histogram());
  for (int n = 0; n < env.horizon; ++n) {
    const Vec& mu_hat = flow.mu.back();
    double xi = flow.xi(n);
    // Cache policy rows and transition rows per (x, a): agents in the
    // same state share them.
    std::vector<Vec> pi_rows(env.states.size);
    for (int i = 0; i < n_agents; ++i) {
      int x = states[i];
      if (pi_rows[x].empty()) pi_rows[x] = policy.action_probs(n, x, mu_hat, &flow.path);
      int a = sample_index(pi_rows[x]);
      Vec row = env.transition(n, x, a, mu_hat, xi);
      states[i] = sample_index(row);
    }
    flow.mu.push_back(histogram());
  }
  return flow;
}

// CSV matrix: rows are timesteps 0..N_T, columns are states.
inline void write_flow_csv(std::ostream& os, const MeanFieldFlow& flow) {
  os << "timestep";
  for (std::size_t x = 0; x < flow.mu.front().size(); ++x) os << ",s" << x;
  os << '\n';
  for (std::size_t n = 0; n < flow.mu.size(); ++n) {
    os << n;
    for (double v : flow.mu[n]) os << ',' << v;
    os << '\n';
  }
}

}  // namespace mfg

#endif  // MFG_MEANFIELD_HPP
