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

#ifndef MFG_NOISE_HPP
#define MFG_NOISE_HPP

#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mfg/core.hpp"

namespace mfg {

// Realized common-noise path xi_0..xi_{N_T}. For the beach bar the
// values are open/closed flags (1/0); for LQ they are real shifts.
struct CommonNoisePath {
  std::vector<double> values;
  std::string label;

  int horizon() const { return static_cast<int>(values.size()) - 1; }
  double at(int n) const { return values.at(n); }
  bool is_zero() const {
    for (double v : values)
      if (v != 0.0) return false;
    return true;
  }
};

// The trivial path every noiseless computation runs against.
inline CommonNoisePath zero_path(int horizon, std::string label = "none") {
  return CommonNoisePath{std::vector<double>(horizon + 1, 0.0), std::move(label)};
}

// Progressive-reveal encoding: positions 0..n carry the path, positions
// n+1..N_T are zero-padded so the observation length is constant. Zero
// is a legitimate xi value, so "unrevealed" is signalled by
// reveal_index, not by the padding.
struct NoiseObservation {
  Vec padded;
  int reveal_index = 0;
};

inline NoiseObservation reveal(const CommonNoisePath& path, int n) {
  int horizon = path.horizon();
  if (n < 0 || n > horizon)
    throw std::out_of_range("reveal: timestep " + std::to_string(n) +
                            " outside [0, " + std::to_string(horizon) + "]");
  NoiseObservation obs;
  obs.reveal_index = n;
  obs.padded.assign(horizon + 1, 0.0);
  for (int m = 0; m <= n; ++m) obs.padded[m] = path.values[m];
  return obs;
}

// Beach-bar closure switch: the bar starts open and flips to closed
// exactly once, at a time drawn uniformly from [window.lo, window.hi).
inline CommonNoisePath closure_process(int horizon, std::pair<int, int> window,
                                       std::uint64_t seed) {
  if (window.first < 0 || window.first >= window.second || window.second > horizon)
    throw std::invalid_argument("closure_process: invalid window [" +
                                std::to_string(window.first) + ", " +
                                std::to_string(window.second) + ")");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dist(window.first, window.second - 1);
  int switch_time = dist(rng);
  CommonNoisePath path;
  path.values.assign(horizon + 1, 0.0);
  for (int n = 0; n < switch_time; ++n) path.values[n] = 1.0;
  path.label = "closure_s" + std::to_string(seed);
  return path;
}

// Default window when a config gives none: the middle third of the game.
inline std::pair<int, int> default_closure_window(int horizon) {
  return {horizon / 3, 2 * horizon / 3};
}

enum class LqNoiseVariant { kXi1, kXi2 };

// The two piecewise-constant LQ disturbances: xi1 is -10 up to step 8,
// 0 through step 20, +10 after; xi2 is its negation.
inline CommonNoisePath lq_step_process(LqNoiseVariant variant, int horizon) {
  CommonNoisePath path;
  path.values.resize(horizon + 1);
  for (int n = 0; n <= horizon; ++n) {
    double v = (n <= 8) ? -10.0 : (n <= 20 ? 0.0 : 10.0);
    path.values[n] = (variant == LqNoiseVariant::kXi1) ? v : -v;
  }
  path.label = (variant == LqNoiseVariant::kXi1) ? "xi1" : "xi2";
  return path;
}

// CSV round trip: one row per path, "label,xi_0,...,xi_{N_T}".
inline void write_noise_csv(std::ostream& os, const std::vector<CommonNoisePath>& paths) {
  for (const auto& path : paths) {
    os << path.label;
    for (double v : path.values) os << ',' << v;
    os << '\n';
  }
}

inline std::vector<CommonNoisePath> read_noise_csv(std::istream& is) {
  std::vector<CommonNoisePath> paths;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    CommonNoisePath path;
    std::getline(ss, path.label, ',');
    while (std::getline(ss, cell, ',')) path.values.push_back(std::stod(cell));
    paths.push_back(std::move(path));
  }
  return paths;
}

}  // namespace mfg

#endif  // MFG_NOISE_HPP
