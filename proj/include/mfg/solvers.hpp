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

#ifndef MFG_SOLVERS_HPP
#define MFG_SOLVERS_HPP

#include <chrono>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mfg/core.hpp"
#include "mfg/env.hpp"
#include "mfg/exact.hpp"
#include "mfg/meanfield.hpp"
#include "mfg/noise.hpp"

namespace mfg {

struct SolverIterationStats {
  int iteration = 0;
  double mean_gap = 0.0;
  double wall_ms = 0.0;
  std::size_t cache_entries = 0;
  ExploitabilityReport report;
};

struct SolverTrace {
  std::vector<SolverIterationStats> iterations;
};

// Thrown when a lineage run would exceed its memoization budget.
struct LineageGuardError : std::runtime_error {
  explicit LineageGuardError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {

struct LineageKey {
  int level = 0;
  int path = 0;
  DistributionKey dk;
  bool operator==(const LineageKey& o) const {
    return level == o.level && path == o.path && dk == o.dk;
  }
};

struct LineageKeyHash {
  std::size_t operator()(const LineageKey& k) const {
    std::size_t h = DistributionKeyHash{}(k.dk);
    h ^= (static_cast<std::size_t>(k.level) * 0x9e3779b97f4a7c15ull) ^
         (static_cast<std::size_t>(k.path) * 0xc2b2ae3d27d4eb4full);
    return h;
  }
};

// Nodes the lineage recursion can reach for K iterations over a
// horizon: nondecreasing time sequences, i.e. binomial(N_T + K, K).
// Saturates instead of overflowing.
inline double estimate_lineage_nodes(int horizon, int iterations) {
  double nodes = 1.0;
  for (int j = 1; j <= iterations; ++j) {
    nodes *= static_cast<double>(horizon + 1 + j) / j;
    if (nodes > 1e18) return 1e18;
  }
  return nodes;
}

}  // namespace detail

// Q values for every (state, action) at one (level, timestep, distribution).
using QMat = std::vector<Vec>;

// ---------------------------------------------------------------------------
// Lineage-exact Master OMD (Munchausen route)
// ---------------------------------------------------------------------------
//
// Policy level k is defined through the regularized value recursion:
// along the continuation flow generated from (n, mu) by level k-1,
//   Qt^k_n(x,mu,a) = r_n + tau ln pi^{k-1}_n
//       + gamma sum_{x'} p sum_{a'} pi^k_{n+1} [Qt^k_{n+1} - tau ln pi^{k-1}_{n+1}]
// and pi^k = softmax(Qt^k / tau). Level 0 is uniform (Qt^0 = 0).
// Evaluation at a distribution outside any stored flow recursively
// regenerates the continuation flow that defines it; results are
// memoized by (level, noise path, timestep, quantized distribution).
class LineagePolicy : public MasterPolicy {
 public:
  LineagePolicy(const EnvModel& env, double tau, std::vector<CommonNoisePath> paths,
                std::size_t max_cache_entries = 10'000'000)
      : env_(&env), tau_(tau), paths_(std::move(paths)), max_entries_(max_cache_entries) {
    if (!(tau_ > 0.0)) throw std::invalid_argument("LineagePolicy: tau must be positive");
    if (paths_.empty()) paths_.push_back(zero_path(env.horizon));
  }

  void set_level(int level) { level_ = level; }
  int level() const { return level_; }
  std::size_t cache_entries() const { return cache_.size(); }
  const std::vector<CommonNoisePath>& paths() const { return paths_; }

  Vec action_probs(int n, int x, const Vec& mu, const CommonNoisePath* path) const override {
    return policy_row(level_, n, mu, path_index(path), x);
  }

  Vec policy_row(int level, int n, const Vec& mu, int pidx, int x) const {
    if (level <= 0) return Vec(env_->actions.size(), 1.0 / env_->actions.size());
    return softmax_policy(qtilde(level, n, mu, pidx)[x], tau_);
  }

  Vec log_policy_row(int level, int n, const Vec& mu, int pidx, int x) const {
    if (level <= 0)
      return Vec(env_->actions.size(), std::log(1.0 / env_->actions.size()));
    return log_softmax_policy(qtilde(level, n, mu, pidx)[x], tau_);
  }

  int path_index(const CommonNoisePath* path) const {
    if (path == nullptr) return 0;
    for (std::size_t i = 0; i < paths_.size(); ++i)
      if (paths_[i].label == path->label) return static_cast<int>(i);
    throw std::invalid_argument("LineagePolicy: unknown noise path '" + path->label + "'");
  }

  const QMat& qtilde(int level, int n, const Vec& mu, int pidx) const {
    detail::LineageKey key{level, pidx, distribution_key(mu, n)};
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;

    const int ns = env_->states.size, na = env_->actions.size();
    const int horizon = env_->horizon;
    const CommonNoisePath& path = paths_[pidx];

    // Continuation flow from (n, mu) under level-1.
    std::vector<Vec> nu(horizon - n + 1);
    nu[0] = mu;
    for (int m = n; m < horizon; ++m) {
      nu[m - n + 1] = propagate(
          nu[m - n], [&](int x) { return policy_row(level - 1, m, nu[m - n], pidx, x); },
          *env_, m, path.at(m));
    }

    // Backward regularized recursion along the continuation flow.
    QMat next;
    for (int m = horizon; m >= n; --m) {
      const Vec& mu_m = nu[m - n];
      double xi = path.at(m);
      QMat cur(ns, Vec(na, 0.0));
      Vec carry(ns, 0.0);
      if (m < horizon) {
        const Vec& mu_next = nu[m - n + 1];
        double xi_next = path.at(m + 1);
        (void)xi_next;
        for (int y = 0; y < ns; ++y) {
          Vec pi_next = softmax_policy(next[y], tau_);  // pi^level at m+1
          Vec log_prev = log_policy_row(level - 1, m + 1, mu_next, pidx, y);
          double v = 0.0;
          for (int a = 0; a < na; ++a)
            v += pi_next[a] * (next[y][a] - tau_ * log_prev[a]);
          carry[y] = v;
        }
      }
      for (int x = 0; x < ns; ++x) {
        Vec log_prev = log_policy_row(level - 1, m, mu_m, pidx, x);
        for (int a = 0; a < na; ++a) {
          double v = env_->reward(m, x, a, mu_m, xi) + tau_ * log_prev[a];
          if (m < horizon) {
            if (env_->mu_independent_transitions) {
              for (const auto& [y, p] : env_->kernel(xi).row(x, a, na)) v += p * carry[y];
            } else {
              Vec row = env_->transition(m, x, a, mu_m, xi);
              for (int y = 0; y < ns; ++y) v += row[y] * carry[y];
            }
          }
          cur[x][a] = v;
        }
      }
      insert(detail::LineageKey{level, pidx, distribution_key(mu_m, m)}, cur);
      next = std::move(cur);
    }
    return cache_.at(key);
  }

 private:
  void insert(const detail::LineageKey& key, const QMat& value) const {
    if (cache_.size() >= max_entries_)
      throw LineageGuardError("lineage cache guard: " + std::to_string(cache_.size()) +
                              " memoized continuation tables reached the configured "
                              "bound of " + std::to_string(max_entries_));
    cache_.emplace(key, value);
  }

  const EnvModel* env_;
  double tau_;
  std::vector<CommonNoisePath> paths_;
  std::size_t max_entries_;
  int level_ = 0;
  mutable std::unordered_map<detail::LineageKey, QMat, detail::LineageKeyHash> cache_;
};

// ---------------------------------------------------------------------------
// Explicit-sum Master OMD (no regularization term)
// ---------------------------------------------------------------------------
//
// Policy level k is softmax((1/tau) sum_{i<=k} Q^i) where each Q^i is a
// plain value recursion (no log-policy term) along the flow generated
// by level i-1, with the continuation mixed by level i. The cumulative
// sum S^k = S^{k-1} + Q^k is maintained directly; per-iteration Q
// tables fall out as differences of consecutive sums.
class ExplicitSumPolicy : public MasterPolicy {
 public:
  ExplicitSumPolicy(const EnvModel& env, double tau, std::vector<CommonNoisePath> paths,
                    std::size_t max_cache_entries = 10'000'000)
      : env_(&env), tau_(tau), paths_(std::move(paths)), max_entries_(max_cache_entries) {
    if (!(tau_ > 0.0)) throw std::invalid_argument("ExplicitSumPolicy: tau must be positive");
    if (paths_.empty()) paths_.push_back(zero_path(env.horizon));
  }

  void set_level(int level) { level_ = level; }
  int level() const { return level_; }
  std::size_t cache_entries() const { return cache_.size(); }

  Vec action_probs(int n, int x, const Vec& mu, const CommonNoisePath* path) const override {
    return policy_row(level_, n, mu, path_index(path), x);
  }

  Vec policy_row(int level, int n, const Vec& mu, int pidx, int x) const {
    if (level <= 0) return Vec(env_->actions.size(), 1.0 / env_->actions.size());
    return softmax_policy(qsum(level, n, mu, pidx)[x], tau_);
  }

  // Q^level alone at (n, mu): difference of consecutive cumulative sums.
  QMat iteration_q(int level, int n, const Vec& mu, int pidx) const {
    QMat s = qsum(level, n, mu, pidx);
    if (level > 1) {
      const QMat& prev = qsum(level - 1, n, mu, pidx);
      for (int x = 0; x < env_->states.size; ++x)
        for (int a = 0; a < env_->actions.size(); ++a) s[x][a] -= prev[x][a];
    }
    return s;
  }

  int path_index(const CommonNoisePath* path) const {
    if (path == nullptr) return 0;
    for (std::size_t i = 0; i < paths_.size(); ++i)
      if (paths_[i].label == path->label) return static_cast<int>(i);
    throw std::invalid_argument("ExplicitSumPolicy: unknown noise path '" + path->label + "'");
  }

  // Cumulative sum S^level(n, mu) = sum_{i<=level} Q^i(n, mu).
  const QMat& qsum(int level, int n, const Vec& mu, int pidx) const {
    detail::LineageKey key{level, pidx, distribution_key(mu, n)};
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;

    const int ns = env_->states.size, na = env_->actions.size();
    const int horizon = env_->horizon;
    const CommonNoisePath& path = paths_[pidx];

    // Continuation flow from (n, mu) under level-1.
    std::vector<Vec> nu(horizon - n + 1);
    nu[0] = mu;
    for (int m = n; m < horizon; ++m) {
      nu[m - n + 1] = propagate(
          nu[m - n], [&](int x) { return policy_row(level - 1, m, nu[m - n], pidx, x); },
          *env_, m, path.at(m));
    }

    QMat q_next;                      // Q^level at m+1
    const QMat* s_next = nullptr;     // S^{level-1} at m+1
    for (int m = horizon; m >= n; --m) {
      const Vec& mu_m = nu[m - n];
      double xi = path.at(m);
      QMat q_cur(ns, Vec(na, 0.0));
      Vec carry(ns, 0.0);
      if (m < horizon) {
        for (int y = 0; y < ns; ++y) {
          // pi^level at m+1 from S^level = S^{level-1} + Q^level.
          Vec scores = q_next[y];
          if (level > 1)
            for (int a = 0; a < na; ++a) scores[a] += (*s_next)[y][a];
          Vec pi_next = softmax_policy(scores, tau_);
          double v = 0.0;
          for (int a = 0; a < na; ++a) v += pi_next[a] * q_next[y][a];
          carry[y] = v;
        }
      }
      for (int x = 0; x < ns; ++x) {
        for (int a = 0; a < na; ++a) {
          double v = env_->reward(m, x, a, mu_m, xi);
          if (m < horizon) {
            if (env_->mu_independent_transitions) {
              for (const auto& [y, p] : env_->kernel(xi).row(x, a, na)) v += p * carry[y];
            } else {
              Vec row = env_->transition(m, x, a, mu_m, xi);
              for (int y = 0; y < ns; ++y) v += row[y] * carry[y];
            }
          }
          q_cur[x][a] = v;
        }
      }
      QMat s_cur = q_cur;
      if (level > 1) {
        const QMat& s_prev = qsum(level - 1, m, mu_m, pidx);
        for (int x = 0; x < ns; ++x)
          for (int a = 0; a < na; ++a) s_cur[x][a] += s_prev[x][a];
        s_next = &qsum(level - 1, m, mu_m, pidx);
      }
      insert(detail::LineageKey{level, pidx, distribution_key(mu_m, m)}, s_cur);
      q_next = std::move(q_cur);
    }
    return cache_.at(key);
  }

 private:
  void insert(const detail::LineageKey& key, const QMat& value) const {
    if (cache_.size() >= max_entries_)
      throw LineageGuardError("explicit-sum cache guard: " + std::to_string(cache_.size()) +
                              " memoized tables reached the configured bound of " +
                              std::to_string(max_entries_));
    cache_.emplace(key, value);
  }

  const EnvModel* env_;
  double tau_;
  std::vector<CommonNoisePath> paths_;
  std::size_t max_entries_;
  int level_ = 0;
  mutable std::unordered_map<detail::LineageKey, QMat, detail::LineageKeyHash> cache_;
};

// ---------------------------------------------------------------------------
// Solver drivers
// ---------------------------------------------------------------------------

struct MasterOmdOptions {
  int iterations = 10;
  double tau = 1.0;
  std::size_t max_cache_entries = 10'000'000;
  // When positive, stop as soon as the mean exploitability drops below
  // this fraction of the iteration-1 value. Allows large requested K
  // with the lazy cache guard.
  double stop_below_fraction_of_first = 0.0;
};

struct MasterOmdResult {
  std::shared_ptr<LineagePolicy> policy;
  SolverTrace trace;
};

inline MasterOmdResult master_omd_reference(const EnvModel& env,
                                            const InitialDistributionSet& mu0_set,
                                            const std::vector<CommonNoisePath>& paths,
                                            const MasterOmdOptions& opts) {
  if (opts.iterations < 1)
    throw std::invalid_argument("master_omd_reference: iterations must be >= 1");
  double estimate = detail::estimate_lineage_nodes(env.horizon, opts.iterations);
  if (estimate > static_cast<double>(opts.max_cache_entries) &&
      opts.stop_below_fraction_of_first <= 0.0) {
    throw LineageGuardError(
        "master_omd_reference: estimated lineage cost " + std::to_string(estimate) +
        " tables exceeds the bound of " + std::to_string(opts.max_cache_entries) +
        "; set a stop target or lower K");
  }
  auto policy = std::make_shared<LineagePolicy>(env, opts.tau, paths,
                                                opts.max_cache_entries);
  MasterOmdResult result;
  result.policy = policy;
  double first_gap = 0.0;
  for (int k = 1; k <= opts.iterations; ++k) {
    auto t0 = std::chrono::steady_clock::now();
    policy->set_level(k);
    ExploitabilityReport report = exploitability(env, *policy, mu0_set, policy->paths());
    report.iteration = k;
    auto t1 = std::chrono::steady_clock::now();
    SolverIterationStats stats;
    stats.iteration = k;
    stats.mean_gap = report.mean_gap;
    stats.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    stats.cache_entries = policy->cache_entries();
    stats.report = std::move(report);
    result.trace.iterations.push_back(std::move(stats));
    if (k == 1) first_gap = result.trace.iterations.back().mean_gap;
    if (opts.stop_below_fraction_of_first > 0.0 && k >= 1 &&
        result.trace.iterations.back().mean_gap <=
            opts.stop_below_fraction_of_first * first_gap)
      break;
  }
  return result;
}

struct ExplicitSumResult {
  std::shared_ptr<ExplicitSumPolicy> policy;
  SolverTrace trace;
};

inline ExplicitSumResult explicit_sum_omd_reference(
    const EnvModel& env, const InitialDistributionSet& mu0_set,
    const std::vector<CommonNoisePath>& paths, const MasterOmdOptions& opts) {
  if (opts.iterations < 1)
    throw std::invalid_argument("explicit_sum_omd_reference: iterations must be >= 1");
  auto policy =
      std::make_shared<ExplicitSumPolicy>(env, opts.tau, paths, opts.max_cache_entries);
  ExplicitSumResult result;
  result.policy = policy;
  for (int k = 1; k <= opts.iterations; ++k) {
    policy->set_level(k);
    ExploitabilityReport report = exploitability(env, *policy, mu0_set, paths);
    report.iteration = k;
    SolverIterationStats stats;
    stats.iteration = k;
    stats.mean_gap = report.mean_gap;
    stats.cache_entries = policy->cache_entries();
    stats.report = std::move(report);
    result.trace.iterations.push_back(std::move(stats));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Theorem-1 equivalence residual
// ---------------------------------------------------------------------------

struct Theorem1Report {
  double max_residual = 0.0;
  double max_flow_divergence = 0.0;
  bool flows_diverged = false;
  std::string diagnostics;
};

// Runs the Munchausen and explicit-sum references in lockstep and
// returns the maximum policy discrepancy over all visited flow states.
// Divergent flows are reported as residual 1: the two routes provably
// generate identical flows, so divergence flags an implementation bug.
inline Theorem1Report theorem1_residual(const EnvModel& env,
                                        const InitialDistributionSet& mu0_set,
                                        std::vector<CommonNoisePath> paths, int iterations,
                                        double tau,
                                        std::size_t max_cache_entries = 10'000'000) {
  if (paths.empty()) paths.push_back(zero_path(env.horizon));
  LineagePolicy munchausen(env, tau, paths, max_cache_entries);
  ExplicitSumPolicy explicit_sum(env, tau, paths, max_cache_entries);
  Theorem1Report report;
  for (int k = 1; k <= iterations; ++k) {
    munchausen.set_level(k);
    explicit_sum.set_level(k);
    for (const auto& [label, mu0] : mu0_set.members) {
      for (const auto& path : paths) {
        // Flow mu^k is generated by level k-1; compare level-k policies there.
        munchausen.set_level(k - 1);
        explicit_sum.set_level(k - 1);
        MeanFieldFlow flow_m = induced_flow(env, munchausen, mu0, path, label);
        MeanFieldFlow flow_e = induced_flow(env, explicit_sum, mu0, path, label);
        munchausen.set_level(k);
        explicit_sum.set_level(k);
        int pidx = munchausen.path_index(&path);
        for (int n = 0; n <= env.horizon; ++n) {
          double flow_gap = sup_norm_diff(flow_m.mu[n], flow_e.mu[n]);
          report.max_flow_divergence = std::max(report.max_flow_divergence, flow_gap);
          if (flow_gap > 1e-9) {
            report.flows_diverged = true;
            report.max_residual = 1.0;
            report.diagnostics = "flows diverged at k=" + std::to_string(k) +
                                 " n=" + std::to_string(n) + " mu0=" + label +
                                 " path=" + path.label +
                                 " (sup gap " + std::to_string(flow_gap) + ")";
            return report;
          }
          for (int x = 0; x < env.states.size; ++x) {
            Vec pm = munchausen.policy_row(k, n, flow_m.mu[n], pidx, x);
            Vec pe = explicit_sum.policy_row(k, n, flow_m.mu[n], pidx, x);
            report.max_residual = std::max(report.max_residual, sup_norm_diff(pm, pe));
          }
        }
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Classic Fictitious Play (per initial distribution)
// ---------------------------------------------------------------------------

struct FpResult {
  // One uniform mixture of per-iteration best responses per mu0.
  std::vector<std::pair<std::string, MixturePolicy>> policies;
  SolverTrace trace;
  // Iteration at which each mu0's exploitability first dropped to the
  // given fraction of its iteration-1 value (0 = never).
  std::vector<int> iterations_to_fraction;
};

struct FpOptions {
  int iterations = 100;
  double convergence_fraction = 0.0;  // optional early-stop / bookkeeping target
  CommonNoisePath path;               // empty values -> noiseless
};

inline FpResult run_fp(const EnvModel& env, const InitialDistributionSet& mu0_set,
                       const FpOptions& opts) {
  if (opts.iterations < 1) throw std::invalid_argument("run_fp: iterations must be >= 1");
  CommonNoisePath path =
      opts.path.values.empty() ? zero_path(env.horizon) : opts.path;
  FpResult result;
  result.iterations_to_fraction.assign(mu0_set.members.size(), 0);
  std::vector<std::vector<ExploitabilityReport>> reports_per_mu0(mu0_set.members.size());

  for (std::size_t mi = 0; mi < mu0_set.members.size(); ++mi) {
    const auto& [label, mu0] = mu0_set.members[mi];
    TimeStatePolicy current(env.horizon, env.states.size, env.actions.size());  // uniform
    std::vector<Vec> avg_flow;  // running average of flows, per timestep
    MixturePolicy mixture;
    double first_gap = 0.0;
    for (int k = 1; k <= opts.iterations; ++k) {
      MeanFieldFlow flow = induced_flow(env, current, mu0, path, label);
      if (k == 1) {
        avg_flow = flow.mu;
      } else {
        for (int n = 0; n <= env.horizon; ++n)
          for (int x = 0; x < env.states.size; ++x)
            avg_flow[n][x] = ((k - 1) * avg_flow[n][x] + flow.mu[n][x]) / k;
      }
      MeanFieldFlow avg;
      avg.mu = avg_flow;
      avg.path = path;
      avg.mu0_label = label;
      TimeStatePolicy br = greedy_policy(best_response_q(env, avg));
      mixture.add(br);
      current = br;
      InitialDistributionSet single;
      single.members.emplace_back(label, mu0);
      ExploitabilityReport report = exploitability(env, mixture, single, {path});
      report.iteration = k;
      if (k == 1) first_gap = report.mean_gap;
      if (opts.convergence_fraction > 0.0 && result.iterations_to_fraction[mi] == 0 &&
          report.mean_gap <= opts.convergence_fraction * first_gap)
        result.iterations_to_fraction[mi] = k;
      reports_per_mu0[mi].push_back(std::move(report));
    }
    result.policies.emplace_back(label, std::move(mixture));
  }

  // Trace merges the per-mu0 reports per iteration.
  int actual_iters = static_cast<int>(reports_per_mu0.front().size());
  for (int k = 0; k < actual_iters; ++k) {
    SolverIterationStats stats;
    stats.iteration = k + 1;
    stats.report.iteration = k + 1;
    for (const auto& reports : reports_per_mu0)
      for (const auto& e : reports[k].entries) stats.report.entries.push_back(e);
    stats.report.finalize();
    stats.mean_gap = stats.report.mean_gap;
    result.trace.iterations.push_back(std::move(stats));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Classic Online Mirror Descent (population-independent, fixed mu0)
// ---------------------------------------------------------------------------

struct OmdResult {
  TimeStatePolicy policy;
  SolverTrace trace;
  // Accumulated regularized table qbar[n][x][a].
  std::vector<std::vector<Vec>> qbar;
};

struct OmdOptions {
  int iterations = 100;
  double tau = 1.0;
  CommonNoisePath path;  // empty values -> noiseless
  bool track_exploitability = true;
};

inline OmdResult run_omd(const EnvModel& env, const Vec& mu0, const OmdOptions& opts) {
  if (opts.iterations < 0) throw std::invalid_argument("run_omd: iterations must be >= 0");
  if (!(opts.tau > 0.0)) throw std::invalid_argument("run_omd: tau must be positive");
  CommonNoisePath path =
      opts.path.values.empty() ? zero_path(env.horizon) : opts.path;
  int ns = env.states.size, na = env.actions.size();
  OmdResult result;
  result.qbar.assign(env.horizon + 1, std::vector<Vec>(ns, Vec(na, 0.0)));
  result.policy = TimeStatePolicy(env.horizon, ns, na);  // softmax of zeros = uniform

  for (int k = 1; k <= opts.iterations; ++k) {
    MeanFieldFlow flow = induced_flow(env, result.policy, mu0, path);
    FlowQ q = evaluate_policy_q(env, result.policy, flow);
    for (int n = 0; n <= env.horizon; ++n) {
      for (int x = 0; x < ns; ++x) {
        for (int a = 0; a < na; ++a) result.qbar[n][x][a] += q.q[n][x][a] / opts.tau;
        result.policy.row(n, x) = softmax_policy(result.qbar[n][x], 1.0);
      }
    }
    if (opts.track_exploitability) {
      InitialDistributionSet set;
      set.members.emplace_back("mu0", mu0);
      ExploitabilityReport report = exploitability(env, result.policy, set, {path});
      report.iteration = k;
      SolverIterationStats stats;
      stats.iteration = k;
      stats.mean_gap = report.mean_gap;
      stats.report = std::move(report);
      result.trace.iterations.push_back(std::move(stats));
    }
  }
  return result;
}

}  // namespace mfg

#endif  // MFG_SOLVERS_HPP
