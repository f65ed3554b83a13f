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

#ifndef MFG_CORE_HPP
#define MFG_CORE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfg {

using Vec = std::vector<double>;

// Probability floor applied before any logarithm of a policy or
// distribution entry. One global constant shared by every module.
inline constexpr double kLogClip = 1e-6;

// Tolerance for "sums to one" checks on distributions.
inline constexpr double kMassTol = 1e-9;

// Resolution of the quantization grid used to key distributions in
// associative tables. Exact flows are deterministic, so keys only have
// to absorb floating point noise, never genuinely distinct
// distributions.
inline constexpr double kQuantizationRes = 1e-9;

// ---------------------------------------------------------------------------
// State and action spaces
// ---------------------------------------------------------------------------

struct GridGeometry {
  int width = 0;
  int height = 0;
  // Row-major blocked-cell mask, size width*height.
  std::vector<std::uint8_t> blocked;

  int index(int col, int row) const { return row * width + col; }
  int col(int s) const { return s % width; }
  int row(int s) const { return s / width; }
  bool in_bounds(int col, int row) const {
    return col >= 0 && col < width && row >= 0 && row < height;
  }
  bool is_blocked(int s) const { return blocked[s] != 0; }
};

// Finite state space. Either an abstract index set, a 2D grid with an
// optional wall mask, or a 1D integer line [line_origin, line_origin+size).
struct StateSpace {
  int size = 0;
  std::optional<GridGeometry> grid;
  int line_origin = 0;

  bool is_blocked(int s) const { return grid && grid->is_blocked(s); }
  // Value carried by a 1D line state (e.g. position in {-L..L}).
  int line_value(int s) const { return line_origin + s; }
  int num_free_states() const {
    if (!grid) return size;
    int n = 0;
    for (int s = 0; s < size; ++s) n += grid->is_blocked(s) ? 0 : 1;
    return n;
  }
};

struct Action {
  int dx = 0;
  int dy = 0;
  std::string name;
  // |a| used in movement-cost terms (0 for stay, 1 for grid moves,
  // the signed displacement for line actions).
  double magnitude = 0.0;
};

struct ActionSpace {
  std::vector<Action> actions;
  int size() const { return static_cast<int>(actions.size()); }
};

// ---------------------------------------------------------------------------
// Distribution validation
// ---------------------------------------------------------------------------

inline void validate_simplex(const Vec& p, double tol, const char* what) {
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p[i]))
      throw std::invalid_argument(std::string(what) + ": non-finite entry at index " +
                                  std::to_string(i));
    if (p[i] < -tol)
      throw std::invalid_argument(std::string(what) + ": negative entry at index " +
                                  std::to_string(i));
    sum += p[i];
  }
  if (std::abs(sum - 1.0) > tol)
    throw std::invalid_argument(std::string(what) + ": entries sum to " +
                                std::to_string(sum) + ", expected 1");
}

inline void validate_state_distribution(const Vec& mu, const StateSpace& states) {
  if (static_cast<int>(mu.size()) != states.size)
    throw std::invalid_argument("state distribution has wrong length");
  validate_simplex(mu, kMassTol, "state distribution");
  if (states.grid) {
    for (int s = 0; s < states.size; ++s) {
      if (states.is_blocked(s) && mu[s] != 0.0)
        throw std::invalid_argument("state distribution puts mass on blocked cell " +
                                    std::to_string(s));
    }
  }
}

inline void validate_action_distribution(const Vec& pi) {
  validate_simplex(pi, kMassTol, "action distribution");
}

// ---------------------------------------------------------------------------
// Softmax policies and KL
// ---------------------------------------------------------------------------

// softmax(q / tau) with max-subtraction. tau as small as 1 with |Q| up
// to 1e3 would overflow a naive exponential.
inline Vec softmax_policy(const Vec& q_row, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("softmax_policy: tau must be positive");
  for (std::size_t i = 0; i < q_row.size(); ++i) {
    if (!std::isfinite(q_row[i]))
      throw std::invalid_argument("softmax_policy: non-finite q value at action " +
                                  std::to_string(i));
  }
  double m = *std::max_element(q_row.begin(), q_row.end());
  Vec out(q_row.size());
  double z = 0.0;
  for (std::size_t i = 0; i < q_row.size(); ++i) {
    out[i] = std::exp((q_row[i] - m) / tau);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

// log softmax(q / tau), floored at ln(kLogClip). This is the one place
// policy log-probabilities come from, so the clip is applied uniformly.
inline Vec log_softmax_policy(const Vec& q_row, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("log_softmax_policy: tau must be positive");
  double m = *std::max_element(q_row.begin(), q_row.end());
  double z = 0.0;
  for (double v : q_row) z += std::exp((v - m) / tau);
  double logz = std::log(z);
  const double floor = std::log(kLogClip);
  Vec out(q_row.size());
  for (std::size_t i = 0; i < q_row.size(); ++i)
    out[i] = std::max((q_row[i] - m) / tau - logz, floor);
  return out;
}

// KL(p || q) with q clipped below at kLogClip before the log.
inline double kl_divergence(const Vec& p, const Vec& q) {
  validate_action_distribution(p);
  validate_action_distribution(q);
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: size mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    kl += p[i] * (std::log(p[i]) - std::log(std::max(q[i], kLogClip)));
  }
  return std::max(kl, 0.0);
}

// ---------------------------------------------------------------------------
// Distribution keys
// ---------------------------------------------------------------------------

// Quantized fingerprint of a distribution at a given timestep, used to
// index population-dependent tables. Stable under perturbations below
// half the quantization resolution.
struct DistributionKey {
  std::vector<std::int64_t> quantized;
  int timestep = 0;

  bool operator==(const DistributionKey& o) const {
    return timestep == o.timestep && quantized == o.quantized;
  }
};

inline DistributionKey distribution_key(const Vec& mu, int n) {
  DistributionKey key;
  key.timestep = n;
  key.quantized.resize(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i)
    key.quantized[i] = std::llround(mu[i] / kQuantizationRes);
  return key;
}

struct DistributionKeyHash {
  std::size_t operator()(const DistributionKey& k) const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
      h ^= v;
      h *= 1099511628211ull;
    };
    mix(static_cast<std::uint64_t>(k.timestep));
    for (std::int64_t q : k.quantized) mix(static_cast<std::uint64_t>(q));
    return static_cast<std::size_t>(h);
  }
};

inline Vec uniform_distribution(int size) {
  return Vec(size, 1.0 / size);
}

inline Vec point_mass(int size, int at) {
  Vec mu(size, 0.0);
  mu[at] = 1.0;
  return mu;
}

inline double sup_norm_diff(const Vec& a, const Vec& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace mfg

#endif  // MFG_CORE_HPP
