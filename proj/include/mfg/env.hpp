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

#ifndef MFG_ENV_HPP
#define MFG_ENV_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mfg/core.hpp"
#include "mfg/noise.hpp"

namespace mfg {

// Sparse transition table for a fixed noise value: rows[x * |A| + a] is
// the list of (next state, probability) pairs.
struct SparseKernel {
  std::vector<std::vector<std::pair<int, double>>> rows;

  const std::vector<std::pair<int, double>>& row(int x, int a, int num_actions) const {
    return rows[x * num_actions + a];
  }
};

// A finite mean-field game environment: spaces, horizon, transition
// kernel, reward, and the population-interaction component used by the
// monotonicity probe. The reward at n == horizon is the terminal-stage
// reward. Immutable after construction apart from the lazily built
// kernel cache.
struct EnvModel {
  std::string name;
  StateSpace states;
  ActionSpace actions;
  int horizon = 0;
  bool mu_independent_transitions = true;
  bool has_common_noise = false;
  std::vector<std::string> warnings;

  // (n, x, a, mu, xi) -> full next-state distribution row.
  std::function<Vec(int, int, int, const Vec&, double)> transition;
  // (n, x, a, mu, xi) -> stage reward; n == horizon gives the terminal stage.
  std::function<double(int, int, int, const Vec&, double)> reward;
  // (x, mu, xi) -> population-interaction reward component, empty if none.
  std::function<double(int, const Vec&, double)> interaction;

  Vec transition_row(int n, int x, int a, const Vec& mu, double xi) const {
    return transition(n, x, a, mu, xi);
  }

  // Cached sparse kernel for mu-independent, time-homogeneous
  // transitions, keyed by the (quantized) noise value.
  const SparseKernel& kernel(double xi) const {
    if (!mu_independent_transitions)
      throw std::logic_error("kernel(): transitions depend on mu in env " + name);
    std::int64_t key = std::llround(xi * 1e9);
    auto it = kernel_cache_->find(key);
    if (it != kernel_cache_->end()) return it->second;
    SparseKernel k;
    int na = actions.size();
    k.rows.resize(static_cast<std::size_t>(states.size) * na);
    Vec mu = uniform_distribution(states.size);
    for (int x = 0; x < states.size; ++x) {
      for (int a = 0; a < na; ++a) {
        Vec row = transition(0, x, a, mu, xi);
        auto& sparse = k.rows[x * na + a];
        for (int y = 0; y < states.size; ++y)
          if (row[y] > 0.0) sparse.emplace_back(y, row[y]);
      }
    }
    return kernel_cache_->emplace(key, std::move(k)).first->second;
  }

 private:
  std::shared_ptr<std::unordered_map<std::int64_t, SparseKernel>> kernel_cache_ =
      std::make_shared<std::unordered_map<std::int64_t, SparseKernel>>();
};

struct InitialDistributionSet {
  std::vector<std::pair<std::string, Vec>> members;
  std::string role;  // "training" or "testing"
};

// ---------------------------------------------------------------------------
// Grid movement shared by exploration and beach bar
// ---------------------------------------------------------------------------

namespace detail {

// Displacement resolving: any move leaving the domain or entering a
// wall resolves to no displacement.
inline int resolve_grid_move(const StateSpace& states, int s, int dx, int dy) {
  const GridGeometry& g = *states.grid;
  int c = g.col(s) + dx;
  int r = g.row(s) + dy;
  if (!g.in_bounds(c, r)) return s;
  int t = g.index(c, r);
  if (g.is_blocked(t)) return s;
  return t;
}

// Intended move succeeds, then a perturbation direction drawn
// independently of the move is applied to the post-action cell.
// Colliding outcomes merge mass.
inline Vec grid_transition_row(const StateSpace& states, int x, const Action& a,
                               const std::vector<Action>& perturbations,
                               double keep_prob) {
  Vec row(states.size, 0.0);
  int y = resolve_grid_move(states, x, a.dx, a.dy);
  row[y] += keep_prob;
  double p_each = (1.0 - keep_prob) / perturbations.size();
  for (const Action& d : perturbations)
    row[resolve_grid_move(states, y, d.dx, d.dy)] += p_each;
  return row;
}

inline ActionSpace grid_actions_2d() {
  ActionSpace as;
  as.actions = {{0, 0, "stay", 0.0},
                {0, -1, "up", 1.0},
                {0, 1, "down", 1.0},
                {-1, 0, "left", 1.0},
                {1, 0, "right", 1.0}};
  return as;
}

inline ActionSpace grid_actions_1d() {
  ActionSpace as;
  as.actions = {{0, 0, "stay", 0.0}, {-1, 0, "left", 1.0}, {1, 0, "right", 1.0}};
  return as;
}

inline std::vector<Action> perturbation_directions(bool two_dim) {
  if (two_dim)
    return {{0, -1, "up", 1.0}, {0, 1, "down", 1.0}, {-1, 0, "left", 1.0}, {1, 0, "right", 1.0}};
  return {{-1, 0, "left", 1.0}, {1, 0, "right", 1.0}};
}

inline double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Env1: exploration (one room / four rooms)
// ---------------------------------------------------------------------------

enum class ExplorationGeometry { kOneRoom, kFourRooms };

// Four-rooms wall layout: walls on the central row and column, one
// single-cell door per wall segment at the quarter positions.
inline std::vector<std::uint8_t> four_rooms_blocked(int width, int height) {
  std::vector<std::uint8_t> blocked(static_cast<std::size_t>(width) * height, 0);
  int mc = width / 2, mr = height / 2;
  int q_col_lo = width / 4, q_col_hi = width - 1 - width / 4;
  int q_row_lo = height / 4, q_row_hi = height - 1 - height / 4;
  for (int c = 0; c < width; ++c) blocked[mr * width + c] = 1;
  for (int r = 0; r < height; ++r) blocked[r * width + mc] = 1;
  blocked[mr * width + q_col_lo] = 0;
  blocked[mr * width + q_col_hi] = 0;
  blocked[q_row_lo * width + mc] = 0;
  blocked[q_row_hi * width + mc] = 0;
  return blocked;
}

inline EnvModel make_exploration(ExplorationGeometry geometry, int width, int height,
                                 int horizon) {
  if (width < 2 || height < 2)
    throw std::invalid_argument("make_exploration: width and height must be >= 2");
  if (geometry == ExplorationGeometry::kFourRooms && (width % 2 == 0 || height % 2 == 0))
    throw std::invalid_argument(
        "make_exploration: four_rooms requires odd dimensions so walls with "
        "single-door openings fit");
  EnvModel env;
  env.name = geometry == ExplorationGeometry::kOneRoom ? "exploration_one_room"
                                                       : "exploration_four_rooms";
  GridGeometry grid{width, height, {}};
  grid.blocked.assign(static_cast<std::size_t>(width) * height, 0);
  if (geometry == ExplorationGeometry::kFourRooms)
    grid.blocked = four_rooms_blocked(width, height);
  env.states.size = width * height;
  env.states.grid = grid;
  env.actions = detail::grid_actions_2d();
  env.horizon = horizon;

  const StateSpace states = env.states;
  const ActionSpace actions = env.actions;
  const int num_states = env.states.size;
  auto perturbations = detail::perturbation_directions(/*two_dim=*/true);

  env.transition = [states, actions, perturbations](int, int x, int a, const Vec&,
                                                    double) {
    return detail::grid_transition_row(states, x, actions.actions[a], perturbations, 0.9);
  };
  env.reward = [num_states, actions](int, int x, int a, const Vec& mu, double) {
    return -std::log(std::max(mu[x], kLogClip)) - actions.actions[a].magnitude / num_states;
  };
  env.interaction = [](int x, const Vec& mu, double) {
    return -std::log(std::max(mu[x], kLogClip));
  };
  return env;
}

// ---------------------------------------------------------------------------
// Env2: beach bar
// ---------------------------------------------------------------------------

enum class BeachBarDimension { kOneD, kTwoD };

// d_bar is attractiveness 1 - dist/|X|, so the reward pulls agents
// towards the bar. With closure noise the open flag is xi; otherwise
// the bar stays open (C = 1).
inline EnvModel make_beach_bar(BeachBarDimension dimension, int size, bool closure_noise,
                               int horizon) {
  if (size < 3) throw std::invalid_argument("make_beach_bar: size must be >= 3");
  EnvModel env;
  env.name = dimension == BeachBarDimension::kOneD ? "beach_bar_1d" : "beach_bar_2d";
  bool two_dim = dimension == BeachBarDimension::kTwoD;
  int width = size, height = two_dim ? size : 1;
  GridGeometry grid{width, height, std::vector<std::uint8_t>(
                                       static_cast<std::size_t>(width) * height, 0)};
  env.states.size = width * height;
  env.states.grid = grid;
  env.actions = two_dim ? detail::grid_actions_2d() : detail::grid_actions_1d();
  env.horizon = horizon;
  env.has_common_noise = closure_noise;

  const StateSpace states = env.states;
  const ActionSpace actions = env.actions;
  const int num_states = env.states.size;
  auto perturbations = detail::perturbation_directions(two_dim);
  int bar = two_dim ? grid.index(size / 2, size / 2) : size / 2;

  // Manhattan distance to the bar, precomputed.
  Vec attractiveness(num_states);
  for (int s = 0; s < num_states; ++s) {
    int dist = std::abs(grid.col(s) - grid.col(bar)) + std::abs(grid.row(s) - grid.row(bar));
    attractiveness[s] = 1.0 - static_cast<double>(dist) / num_states;
  }

  env.transition = [states, actions, perturbations](int, int x, int a, const Vec&,
                                                    double) {
    return detail::grid_transition_row(states, x, actions.actions[a], perturbations, 0.9);
  };
  auto open_flag = [closure_noise](double xi) { return closure_noise ? xi : 1.0; };
  env.reward = [attractiveness, num_states, actions, open_flag](int, int x, int a,
                                                                const Vec& mu, double xi) {
    double c = open_flag(xi);
    return attractiveness[x] - actions.actions[a].magnitude / num_states -
           c * std::log(std::max(mu[x], kLogClip));
  };
  env.interaction = [open_flag](int x, const Vec& mu, double xi) {
    return -open_flag(xi) * std::log(std::max(mu[x], kLogClip));
  };
  return env;
}

// ---------------------------------------------------------------------------
// Env3: linear-quadratic
// ---------------------------------------------------------------------------

enum class LqNoise { kNone, kXi1, kXi2 };

struct LqParams {
  int L = 50;
  int M = 3;
  double sigma = 1.0;
  double q = 0.01;
  double kappa = 0.5;
  double c_term = 1.0;
  double delta = 1.0;
  double rho = 0.5;  // correlation with the common noise; the no-noise variant ignores it
  LqNoise noise_variant = LqNoise::kNone;
};

inline EnvModel make_linear_quadratic(const LqParams& p, int horizon) {
  if (p.L < 1 || p.M < 1) throw std::invalid_argument("make_linear_quadratic: L, M >= 1");
  if (p.rho < 0.0 || p.rho > 1.0)
    throw std::invalid_argument("make_linear_quadratic: rho must be in [0, 1]");
  EnvModel env;
  env.name = "linear_quadratic";
  env.states.size = 2 * p.L + 1;
  env.states.line_origin = -p.L;
  env.horizon = horizon;
  env.has_common_noise = p.noise_variant != LqNoise::kNone;
  for (int a = -p.M; a <= p.M; ++a)
    env.actions.actions.push_back(
        {a, 0, std::to_string(a), static_cast<double>(a)});

  double rho = env.has_common_noise ? p.rho : 0.0;
  // Idiosyncratic noise on the integer grid {-3 sigma .. 3 sigma}, with
  // standard-normal bin probabilities renormalized over the support.
  int support = static_cast<int>(std::llround(3.0 * p.sigma));
  std::vector<std::pair<int, double>> eps_bins;
  {
    double total = 0.0;
    for (int j = -support; j <= support; ++j) {
      double pj = detail::standard_normal_cdf(j + 0.5) - detail::standard_normal_cdf(j - 0.5);
      eps_bins.emplace_back(j, pj);
      total += pj;
    }
    for (auto& [j, pj] : eps_bins) pj /= total;
  }

  if (env.has_common_noise &&
      p.M * p.delta + 3.0 * p.sigma * std::sqrt(p.delta) + rho * 10.0 >= 2.0 * p.L) {
    env.warnings.push_back(
        "linear_quadratic: per-step displacement reach exceeds the domain, flow "
        "may be pinned at the boundary");
  }

  const StateSpace states = env.states;
  const int L = p.L;
  const double delta = p.delta;
  const double idio_scale = p.sigma * std::sqrt(1.0 - rho * rho) * std::sqrt(delta);
  const double common_scale = p.sigma * rho * std::sqrt(delta);
  const ActionSpace actions = env.actions;
  env.transition = [states, actions, eps_bins, L, delta, idio_scale, common_scale](
                       int, int x, int a, const Vec&, double xi) {
    Vec row(states.size, 0.0);
    double drift = states.line_value(x) + actions.actions[a].magnitude * delta +
                   common_scale * xi;
    for (const auto& [j, pj] : eps_bins) {
      double target = drift + idio_scale * j;
      // round half away from zero, then clamp to [-L, L]
      long long r = std::llround(target);
      int clamped = static_cast<int>(std::min<long long>(L, std::max<long long>(-L, r)));
      row[clamped + L] += pj;
    }
    return row;
  };

  const double q = p.q, kappa = p.kappa, c_term = p.c_term;
  const int N_T = horizon;
  auto mean_of = [states](const Vec& mu) {
    double m = 0.0;
    for (int s = 0; s < states.size; ++s) m += states.line_value(s) * mu[s];
    return m;
  };
  env.reward = [states, actions, mean_of, q, kappa, c_term, delta, N_T](
                   int n, int x, int a, const Vec& mu, double) {
    double m = mean_of(mu);
    double xv = states.line_value(x);
    if (n == N_T) return -0.5 * c_term * (m - xv) * (m - xv);
    double av = actions.actions[a].magnitude;
    return (-0.5 * av * av + q * av * (m - xv) - 0.5 * kappa * (m - xv) * (m - xv)) * delta;
  };
  env.interaction = [states, mean_of, kappa](int x, const Vec& mu, double) {
    double d = mean_of(mu) - states.line_value(x);
    return -0.5 * kappa * d * d;
  };
  return env;
}

// ---------------------------------------------------------------------------
// Initial distribution sets and ad-hoc teaming
// ---------------------------------------------------------------------------

enum class InitialSetKind { kFixedPoints, kGaussians, kRandomPoints };

inline InitialDistributionSet make_initial_set(InitialSetKind kind, int count,
                                               const EnvModel& env, std::uint64_t seed,
                                               std::string role = "training") {
  if (count < 1) throw std::invalid_argument("make_initial_set: count must be >= 1");
  std::vector<int> free_states;
  for (int s = 0; s < env.states.size; ++s)
    if (!env.states.is_blocked(s)) free_states.push_back(s);

  std::mt19937_64 rng(seed);
  InitialDistributionSet set;
  set.role = std::move(role);

  switch (kind) {
    case InitialSetKind::kFixedPoints: {
      if (count > static_cast<int>(free_states.size()))
        throw std::invalid_argument("make_initial_set: fixed_points count " +
                                    std::to_string(count) + " exceeds " +
                                    std::to_string(free_states.size()) + " free states");
      std::vector<int> order = free_states;
      std::shuffle(order.begin(), order.end(), rng);
      for (int i = 0; i < count; ++i)
        set.members.emplace_back("point" + std::to_string(i),
                                 point_mass(env.states.size, order[i]));
      break;
    }
    case InitialSetKind::kGaussians: {
      std::uniform_int_distribution<std::size_t> pick(0, free_states.size() - 1);
      for (int i = 0; i < count; ++i) {
        int center = free_states[pick(rng)];
        double extent = env.states.grid
                            ? std::max(env.states.grid->width, env.states.grid->height)
                            : env.states.size;
        std::uniform_real_distribution<double> sd(extent / 8.0, extent / 3.0);
        double s = sd(rng);
        Vec mu(env.states.size, 0.0);
        double total = 0.0;
        for (int x : free_states) {
          double d2;
          if (env.states.grid) {
            const auto& g = *env.states.grid;
            double dc = g.col(x) - g.col(center);
            double dr = g.row(x) - g.row(center);
            d2 = dc * dc + dr * dr;
          } else {
            double d = x - center;
            d2 = d * d;
          }
          mu[x] = std::exp(-d2 / (2.0 * s * s));
          total += mu[x];
        }
        for (double& v : mu) v /= total;  // truncated and renormalized on the domain
        set.members.emplace_back("gauss" + std::to_string(i), mu);
      }
      break;
    }
    case InitialSetKind::kRandomPoints: {
      std::uniform_int_distribution<std::size_t> pick(0, free_states.size() - 1);
      std::exponential_distribution<double> weight(1.0);
      int support = std::min<int>(5, static_cast<int>(free_states.size()));
      for (int i = 0; i < count; ++i) {
        Vec mu(env.states.size, 0.0);
        double total = 0.0;
        for (int s = 0; s < support; ++s) {
          int x = free_states[pick(rng)];
          double w = weight(rng);
          mu[x] += w;
          total += w;
        }
        for (double& v : mu) v /= total;
        set.members.emplace_back("random" + std::to_string(i), mu);
      }
      break;
    }
  }
  for (auto& [label, mu] : set.members) validate_state_distribution(mu, env.states);
  return set;
}

// Post-join distribution when a newcomer group of the given mass
// fraction merges into the population.
inline Vec inject_adhoc_team(const Vec& mu, const Vec& newcomers, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("inject_adhoc_team: fraction must be in (0, 1)");
  if (mu.size() != newcomers.size())
    throw std::invalid_argument("inject_adhoc_team: size mismatch");
  Vec out(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i)
    out[i] = (1.0 - fraction) * mu[i] + fraction * newcomers[i];
  return out;
}

}  // namespace mfg

#endif  // MFG_ENV_HPP
