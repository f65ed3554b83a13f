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

#ifndef MFG_NEURAL_HPP
#define MFG_NEURAL_HPP

#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mfg/core.hpp"
#include "mfg/env.hpp"
#include "mfg/exact.hpp"
#include "mfg/meanfield.hpp"
#include "mfg/noise.hpp"
#include "mfg/solvers.hpp"

namespace mfg {

// ---------------------------------------------------------------------------
// Multilayer perceptron with manual gradients
// ---------------------------------------------------------------------------

class MlpQNetwork {
 public:
  MlpQNetwork() = default;
  // sizes = {input, hidden..., output}. ReLU on hidden layers, identity
  // output. Glorot-uniform weight init, zero biases.
  MlpQNetwork(std::vector<int> sizes, std::uint64_t seed) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw std::invalid_argument("MlpQNetwork: need >= 2 layer sizes");
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      int fan_in = sizes_[l], fan_out = sizes_[l + 1];
      double limit = std::sqrt(6.0 / (fan_in + fan_out));
      std::uniform_real_distribution<double> u(-limit, limit);
      std::vector<Vec> w(fan_out, Vec(fan_in, 0.0));
      for (auto& row : w)
        for (double& v : row) v = u(rng);
      w_.push_back(std::move(w));
      b_.emplace_back(fan_out, 0.0);
    }
  }

  const std::vector<int>& sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }

  Vec forward(const Vec& input) const {
    if (static_cast<int>(input.size()) != input_size())
      throw std::invalid_argument("MlpQNetwork: input size " +
                                  std::to_string(input.size()) + " != " +
                                  std::to_string(input_size()));
    Vec h = input;
    for (std::size_t l = 0; l < w_.size(); ++l) {
      Vec out(b_[l]);
      for (std::size_t i = 0; i < out.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < h.size(); ++j) s += w_[l][i][j] * h[j];
        out[i] += s;
      }
      if (l + 1 < w_.size())
        for (double& v : out) v = v > 0.0 ? v : 0.0;
      h = std::move(out);
    }
    return h;
  }

  struct Gradients {
    std::vector<std::vector<Vec>> w;
    std::vector<Vec> b;
  };

  Gradients zero_gradients() const {
    Gradients g;
    for (std::size_t l = 0; l < w_.size(); ++l) {
      g.w.emplace_back(w_[l].size(), Vec(w_[l][0].size(), 0.0));
      g.b.emplace_back(b_[l].size(), 0.0);
    }
    return g;
  }

  struct RegressionSample {
    Vec input;
    int action = 0;
    double target = 0.0;
  };

  // Mean squared error of q(input)[action] against target over the batch.
  double batch_loss(const std::vector<RegressionSample>& batch) const {
    double loss = 0.0;
    for (const auto& s : batch) {
      double d = forward(s.input)[s.action] - s.target;
      loss += d * d;
    }
    return loss / batch.size();
  }

  // Backprop of batch_loss; accumulates into a fresh Gradients.
  Gradients batch_gradient(const std::vector<RegressionSample>& batch,
                           double* loss_out = nullptr) const {
    Gradients g = zero_gradients();
    double loss = 0.0;
    for (const auto& s : batch) {
      // Forward pass storing post-activation values per layer.
      std::vector<Vec> acts;
      acts.push_back(s.input);
      for (std::size_t l = 0; l < w_.size(); ++l) {
        const Vec& h = acts.back();
        Vec out(b_[l]);
        for (std::size_t i = 0; i < out.size(); ++i) {
          double sum = 0.0;
          for (std::size_t j = 0; j < h.size(); ++j) sum += w_[l][i][j] * h[j];
          out[i] += sum;
        }
        if (l + 1 < w_.size())
          for (double& v : out) v = v > 0.0 ? v : 0.0;
        acts.push_back(std::move(out));
      }
      double diff = acts.back()[s.action] - s.target;
      loss += diff * diff;
      Vec delta(acts.back().size(), 0.0);
      delta[s.action] = 2.0 * diff / batch.size();
      for (int l = static_cast<int>(w_.size()) - 1; l >= 0; --l) {
        const Vec& h = acts[l];
        for (std::size_t i = 0; i < delta.size(); ++i) {
          g.b[l][i] += delta[i];
          for (std::size_t j = 0; j < h.size(); ++j) g.w[l][i][j] += delta[i] * h[j];
        }
        if (l == 0) break;
        Vec prev(h.size(), 0.0);
        for (std::size_t j = 0; j < h.size(); ++j) {
          if (h[j] <= 0.0) continue;  // ReLU gate (post-activation is 0 iff gated)
          double sum = 0.0;
          for (std::size_t i = 0; i < delta.size(); ++i) sum += w_[l][i][j] * delta[i];
          prev[j] = sum;
        }
        delta = std::move(prev);
      }
    }
    if (loss_out != nullptr) *loss_out = loss / batch.size();
    return g;
  }

  // Flat parameter view (weights row-major then bias, layer by layer)
  // for finite-difference checks and serialization.
  std::size_t num_params() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < w_.size(); ++l)
      n += w_[l].size() * w_[l][0].size() + b_[l].size();
    return n;
  }

  double get_param(std::size_t idx) const { return *locate(idx); }
  void set_param(std::size_t idx, double v) { *const_cast<double*>(locate(idx)) = v; }

  static double gradient_at(const Gradients& g, std::size_t idx) {
    for (std::size_t l = 0; l < g.w.size(); ++l) {
      std::size_t wn = g.w[l].size() * g.w[l][0].size();
      if (idx < wn) return g.w[l][idx / g.w[l][0].size()][idx % g.w[l][0].size()];
      idx -= wn;
      if (idx < g.b[l].size()) return g.b[l][idx];
      idx -= g.b[l].size();
    }
    throw std::out_of_range("gradient_at: parameter index out of range");
  }

  const std::vector<std::vector<Vec>>& weights() const { return w_; }
  const std::vector<Vec>& biases() const { return b_; }
  std::vector<std::vector<Vec>>& mutable_weights() { return w_; }
  std::vector<Vec>& mutable_biases() { return b_; }

 private:
  const double* locate(std::size_t idx) const {
    for (std::size_t l = 0; l < w_.size(); ++l) {
      std::size_t cols = w_[l][0].size();
      std::size_t wn = w_[l].size() * cols;
      if (idx < wn) return &w_[l][idx / cols][idx % cols];
      idx -= wn;
      if (idx < b_[l].size()) return &b_[l][idx];
      idx -= b_[l].size();
    }
    throw std::out_of_range("MlpQNetwork: parameter index out of range");
  }

  std::vector<int> sizes_;
  std::vector<std::vector<Vec>> w_;
  std::vector<Vec> b_;
};

enum class OptimizerKind { kAdam, kSgd };

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double lr, const MlpQNetwork& net)
      : kind_(kind), lr_(lr) {
    if (kind_ == OptimizerKind::kAdam) {
      m_ = net.zero_gradients();
      v_ = net.zero_gradients();
    }
  }

  void apply(MlpQNetwork& net, const MlpQNetwork::Gradients& g) {
    auto& w = net.mutable_weights();
    auto& b = net.mutable_biases();
    if (kind_ == OptimizerKind::kSgd) {
      for (std::size_t l = 0; l < w.size(); ++l) {
        for (std::size_t i = 0; i < w[l].size(); ++i)
          for (std::size_t j = 0; j < w[l][i].size(); ++j)
            w[l][i][j] -= lr_ * g.w[l][i][j];
        for (std::size_t i = 0; i < b[l].size(); ++i) b[l][i] -= lr_ * g.b[l][i];
      }
      return;
    }
    ++t_;
    double c1 = 1.0 - std::pow(kBeta1, t_);
    double c2 = 1.0 - std::pow(kBeta2, t_);
    auto update = [&](double& param, double& m, double& v, double grad) {
      m = kBeta1 * m + (1.0 - kBeta1) * grad;
      v = kBeta2 * v + (1.0 - kBeta2) * grad * grad;
      param -= lr_ * (m / c1) / (std::sqrt(v / c2) + kEps);
    };
    for (std::size_t l = 0; l < w.size(); ++l) {
      for (std::size_t i = 0; i < w[l].size(); ++i)
        for (std::size_t j = 0; j < w[l][i].size(); ++j)
          update(w[l][i][j], m_.w[l][i][j], v_.w[l][i][j], g.w[l][i][j]);
      for (std::size_t i = 0; i < b[l].size(); ++i)
        update(b[l][i], m_.b[l][i], v_.b[l][i], g.b[l][i]);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  OptimizerKind kind_;
  double lr_;
  long t_ = 0;
  MlpQNetwork::Gradients m_, v_;
};

// ---------------------------------------------------------------------------
// Input encoding
// ---------------------------------------------------------------------------

// Layout: one-hot timestep | one-hot state | mean field | revealed noise
// prefix (zero padded). The mean field block is dropped for
// population-independent ablations; the noise block exists only for
// common-noise environments.
struct EncodeSpec {
  int horizon = 0;
  int num_states = 0;
  int num_actions = 0;
  bool include_population = true;
  bool include_noise = false;

  static EncodeSpec from_env(const EnvModel& env, bool include_population) {
    EncodeSpec spec;
    spec.horizon = env.horizon;
    spec.num_states = env.states.size;
    spec.num_actions = env.actions.size();
    spec.include_population = include_population;
    spec.include_noise = env.has_common_noise;
    return spec;
  }

  int input_size() const {
    int n = (horizon + 1) + num_states;
    if (include_population) n += num_states;
    if (include_noise) n += horizon + 1;
    return n;
  }
};

inline Vec encode_input(const EncodeSpec& spec, int n, int x, const Vec& mu,
                        const NoiseObservation* obs) {
  if (n < 0 || n > spec.horizon)
    throw std::out_of_range("encode_input: timestep out of range");
  if (x < 0 || x >= spec.num_states)
    throw std::out_of_range("encode_input: state out of range");
  Vec out;
  out.reserve(spec.input_size());
  out.assign(spec.horizon + 1, 0.0);
  out[n] = 1.0;
  Vec state_block(spec.num_states, 0.0);
  state_block[x] = 1.0;
  out.insert(out.end(), state_block.begin(), state_block.end());
  if (spec.include_population) {
    if (static_cast<int>(mu.size()) != spec.num_states)
      throw std::invalid_argument("encode_input: mean field has wrong length");
    out.insert(out.end(), mu.begin(), mu.end());
  }
  if (spec.include_noise) {
    if (obs == nullptr)
      throw std::invalid_argument("encode_input: noise observation required");
    if (static_cast<int>(obs->padded.size()) != spec.horizon + 1)
      throw std::invalid_argument("encode_input: noise observation has wrong length");
    out.insert(out.end(), obs->padded.begin(), obs->padded.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Replay buffer
// ---------------------------------------------------------------------------

struct TransitionSample {
  int n = 0;
  int x = 0;
  int action = 0;
  double reward = 0.0;
  int x_next = 0;
  bool terminal = false;
  Vec mu;
  Vec mu_next;
  NoiseObservation obs;
  NoiseObservation obs_next;
  // Iteration that produced the sample; stale tags must never appear
  // after a reset.
  int iteration_id = 0;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: capacity must be > 0");
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return data_.size(); }

  void push(TransitionSample sample) {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(sample));
    } else {
      data_[write_] = std::move(sample);  // FIFO overwrite
    }
    write_ = (write_ + 1) % capacity_;
  }

  void reset() {
    data_.clear();
    write_ = 0;
  }

  const TransitionSample& at(std::size_t i) const { return data_.at(i); }

  std::vector<const TransitionSample*> sample(std::size_t batch_size,
                                              std::mt19937_64& rng) const {
    if (data_.empty()) throw std::logic_error("ReplayBuffer: sample from empty buffer");
    std::uniform_int_distribution<std::size_t> dist(0, data_.size() - 1);
    std::vector<const TransitionSample*> out;
    out.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) out.push_back(&data_[dist(rng)]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t write_ = 0;
  std::vector<TransitionSample> data_;
};

// ---------------------------------------------------------------------------
// Munchausen target
// ---------------------------------------------------------------------------

// log pi^{k-1} from the previous iteration's network, or the uniform
// log-policy at iteration 1 where pi^0 has no network.
inline Vec log_prev_policy(const MlpQNetwork* prev_net, const Vec& input, int num_actions,
                           double tau) {
  if (prev_net == nullptr)
    return Vec(num_actions, std::log(1.0 / num_actions));
  return log_softmax_policy(prev_net->forward(input), tau);
}

// Regression target
//   T = r + alpha * tau * log pi^{k-1}(a|x)
//       + gamma * sum_{a'} pi_target(a'|x') (Qt_target(x',a') - tau log pi^{k-1}(a'|x'))
// with pi_target = softmax(Qt_target / tau). Terminal samples keep only
// the first two terms. Log terms are clipped through the global
// probability floor inside log_softmax_policy. alpha = 0 removes the
// implicit regularization (vanilla OMD ablation).
inline double munchausen_target(const MlpQNetwork& target_net, const MlpQNetwork* prev_net,
                                const EncodeSpec& spec, const TransitionSample& s,
                                double tau, double gamma, double alpha) {
  Vec input = encode_input(spec, s.n, s.x, s.mu, spec.include_noise ? &s.obs : nullptr);
  Vec log_prev = log_prev_policy(prev_net, input, spec.num_actions, tau);
  double t = s.reward + alpha * tau * log_prev[s.action];
  if (!s.terminal) {
    Vec input_next = encode_input(spec, s.n + 1, s.x_next, s.mu_next,
                                  spec.include_noise ? &s.obs_next : nullptr);
    Vec q_next = target_net.forward(input_next);
    Vec pi_next = softmax_policy(q_next, tau);
    Vec log_prev_next = log_prev_policy(prev_net, input_next, spec.num_actions, tau);
    double v = 0.0;
    for (int a = 0; a < spec.num_actions; ++a)
      v += pi_next[a] * (q_next[a] - tau * log_prev_next[a]);
    t += gamma * v;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Exploration
// ---------------------------------------------------------------------------

inline int epsilon_greedy(const Vec& q_row, double epsilon, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) < epsilon) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(q_row.size()) - 1);
    return pick(rng);
  }
  int best = 0;
  for (std::size_t a = 1; a < q_row.size(); ++a)
    if (q_row[a] > q_row[best]) best = static_cast<int>(a);
  return best;
}

// Linear anneal from 1.0 to 0.05 over the exploration fraction of the
// per-iteration step budget, then flat.
inline double epsilon_schedule(long step, long max_steps, double exploration_fraction) {
  double anneal = exploration_fraction * max_steps;
  if (anneal <= 0.0) return 0.05;
  double frac = static_cast<double>(step) / anneal;
  if (frac >= 1.0) return 0.05;
  return 1.0 + frac * (0.05 - 1.0);
}

// ---------------------------------------------------------------------------
// Master policy backed by a network
// ---------------------------------------------------------------------------

class NeuralMasterPolicy : public MasterPolicy {
 public:
  NeuralMasterPolicy() = default;
  NeuralMasterPolicy(MlpQNetwork net, EncodeSpec spec, double tau)
      : net_(std::move(net)), spec_(spec), tau_(tau) {}

  Vec action_probs(int n, int x, const Vec& mu, const CommonNoisePath* path) const override {
    NoiseObservation obs;
    const NoiseObservation* obs_ptr = nullptr;
    if (spec_.include_noise) {
      if (path == nullptr)
        throw std::invalid_argument("NeuralMasterPolicy: noise path required");
      obs = reveal(*path, n);
      obs_ptr = &obs;
    }
    Vec input = encode_input(spec_, n, x, mu, obs_ptr);
    return softmax_policy(net_.forward(input), tau_);
  }

  const MlpQNetwork& net() const { return net_; }
  const EncodeSpec& spec() const { return spec_; }
  double tau() const { return tau_; }

 private:
  MlpQNetwork net_;
  EncodeSpec spec_;
  double tau_ = 1.0;
};

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace detail {

inline void write_i32(std::ostream& os, std::int32_t v) {
  unsigned char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), 4);
}

inline std::int32_t read_i32(std::istream& is) {
  unsigned char buf[4];
  is.read(reinterpret_cast<char*>(buf), 4);
  if (!is) throw std::runtime_error("checkpoint: truncated int field");
  std::int32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::int32_t>(buf[i]) << (8 * i);
  return v;
}

inline void write_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), 8);
}

inline double read_f64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  if (!is) throw std::runtime_error("checkpoint: truncated double field");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace detail

inline constexpr char kCheckpointMagic[] = "MFGQNET1";

inline void save_checkpoint(std::ostream& os, const NeuralMasterPolicy& policy) {
  os.write(kCheckpointMagic, 8);
  const EncodeSpec& spec = policy.spec();
  detail::write_i32(os, spec.horizon);
  detail::write_i32(os, spec.num_states);
  detail::write_i32(os, spec.num_actions);
  detail::write_i32(os, spec.include_population ? 1 : 0);
  detail::write_i32(os, spec.include_noise ? 1 : 0);
  detail::write_f64(os, policy.tau());
  const auto& sizes = policy.net().sizes();
  detail::write_i32(os, static_cast<std::int32_t>(sizes.size()));
  for (int s : sizes) detail::write_i32(os, s);
  for (std::size_t l = 0; l < policy.net().weights().size(); ++l) {
    for (const auto& row : policy.net().weights()[l])
      for (double v : row) detail::write_f64(os, v);
    for (double v : policy.net().biases()[l]) detail::write_f64(os, v);
  }
}

inline void save_checkpoint(const std::string& path, const NeuralMasterPolicy& policy) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
  save_checkpoint(os, policy);
}

inline NeuralMasterPolicy load_checkpoint(std::istream& is) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw std::runtime_error("load_checkpoint: bad magic, not a checkpoint file");
  EncodeSpec spec;
  spec.horizon = detail::read_i32(is);
  spec.num_states = detail::read_i32(is);
  spec.num_actions = detail::read_i32(is);
  spec.include_population = detail::read_i32(is) != 0;
  spec.include_noise = detail::read_i32(is) != 0;
  double tau = detail::read_f64(is);
  int nsizes = detail::read_i32(is);
  if (nsizes < 2 || nsizes > 64)
    throw std::runtime_error("load_checkpoint: implausible layer count");
  std::vector<int> sizes(nsizes);
  for (int& s : sizes) s = detail::read_i32(is);
  MlpQNetwork net(sizes, 0);
  for (std::size_t l = 0; l < net.mutable_weights().size(); ++l) {
    for (auto& row : net.mutable_weights()[l])
      for (double& v : row) v = detail::read_f64(is);
    for (double& v : net.mutable_biases()[l]) v = detail::read_f64(is);
  }
  if (net.input_size() != spec.input_size())
    throw std::runtime_error("load_checkpoint: layer sizes disagree with encoding spec");
  return NeuralMasterPolicy(std::move(net), spec, tau);
}

inline NeuralMasterPolicy load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
  return load_checkpoint(is);
}

// ---------------------------------------------------------------------------
// Master OMD training loop (deep variant)
// ---------------------------------------------------------------------------

struct TrainConfig {
  int iterations = 10;
  double tau = 50.0;
  double gamma = 0.99;
  double alpha = 1.0;  // Munchausen weight; 0 disables the implicit term
  std::vector<int> hidden = {64, 64};
  long max_steps = 30000;
  int num_agents = 500;  // agents behind each empirical flow if used
  std::size_t buffer_capacity = 30000;
  int batch_size = 32;
  int gradient_steps = 1;
  int target_sync = 4;  // gradient updates between target syncs
  long learning_starts = 100;
  double exploration_fraction = 0.1;
  double lr = 1e-4;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  bool include_population = true;  // false -> population-independent ablation
  bool track_exploitability = true;
  std::uint64_t seed = 42;
  // Test hook, called after every gradient update with (iteration,
  // update counter, online net, target net).
  std::function<void(int, long, const MlpQNetwork&, const MlpQNetwork&)> on_gradient_update;
};

struct TrainResult {
  NeuralMasterPolicy policy;
  SolverTrace trace;
  long total_env_steps = 0;
  long total_gradient_updates = 0;
};

// One outer iteration k: freeze the flows induced by pi^{k-1}, reset
// the buffer, collect epsilon-greedy transitions in the frozen-flow
// MDP, regress on Munchausen targets, then pi^k = softmax(Qt_theta/tau).
inline TrainResult train_master_omd(const EnvModel& env,
                                    const InitialDistributionSet& mu0_set,
                                    const std::vector<CommonNoisePath>& paths_in,
                                    const TrainConfig& cfg) {
  if (cfg.iterations < 0)
    throw std::invalid_argument("train_master_omd: iterations must be >= 0");
  if (mu0_set.members.empty())
    throw std::invalid_argument("train_master_omd: empty initial distribution set");
  std::vector<CommonNoisePath> paths = paths_in;
  if (paths.empty()) paths.push_back(zero_path(env.horizon));

  EncodeSpec spec = EncodeSpec::from_env(env, cfg.include_population);
  std::vector<int> sizes;
  sizes.push_back(spec.input_size());
  for (int h : cfg.hidden) sizes.push_back(h);
  sizes.push_back(spec.num_actions);

  std::mt19937_64 rng(cfg.seed);
  MlpQNetwork net(sizes, rng());
  std::optional<MlpQNetwork> prev_net;  // absent at k = 1: pi^0 uniform
  ReplayBuffer buffer(cfg.buffer_capacity);
  TrainResult result;

  auto sample_index = [&rng](const Vec& probs) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double r = u(rng), acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (r <= acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
  };

  for (int k = 1; k <= cfg.iterations; ++k) {
    // Flows under pi^{k-1}, exact and frozen for the whole iteration.
    NeuralMasterPolicy behavior(net, spec, cfg.tau);
    UniformPolicy uniform(spec.num_actions);
    const MasterPolicy& prev_policy =
        prev_net.has_value()
            ? static_cast<const MasterPolicy&>(behavior)
            : static_cast<const MasterPolicy&>(uniform);
    // At k > 1 the flow policy is pi^{k-1}; `behavior` above wraps the
    // current net which IS theta^{k-1} before this iteration's updates.
    std::vector<MeanFieldFlow> flows;
    for (const auto& [label, mu0] : mu0_set.members)
      for (const auto& path : paths)
        flows.push_back(induced_flow(env, prev_policy, mu0, path, label));

    buffer.reset();
    MlpQNetwork target = net;
    Optimizer opt(cfg.optimizer, cfg.lr, net);
    long step = 0;
    long grad_updates = 0;
    std::size_t flow_cursor = 0;
    while (step < cfg.max_steps) {
      const MeanFieldFlow& flow = flows[flow_cursor];
      flow_cursor = (flow_cursor + 1) % flows.size();
      int x = sample_index(flow.mu[0]);
      for (int n = 0; n <= env.horizon && step < cfg.max_steps; ++n) {
        NoiseObservation obs, obs_next;
        const NoiseObservation* obs_ptr = nullptr;
        if (spec.include_noise) {
          obs = reveal(flow.path, n);
          obs_ptr = &obs;
        }
        Vec input = encode_input(spec, n, x, flow.mu[n], obs_ptr);
        double eps = epsilon_schedule(step, cfg.max_steps, cfg.exploration_fraction);
        int a = epsilon_greedy(net.forward(input), eps, rng);
        double xi = flow.xi(n);
        double r = env.reward(n, x, a, flow.mu[n], xi);
        TransitionSample sample;
        sample.n = n;
        sample.x = x;
        sample.action = a;
        sample.reward = r;
        sample.terminal = (n == env.horizon);
        sample.mu = flow.mu[n];
        sample.obs = obs;
        sample.iteration_id = k;
        if (!sample.terminal) {
          Vec row = env.transition(n, x, a, flow.mu[n], xi);
          sample.x_next = sample_index(row);
          sample.mu_next = flow.mu[n + 1];
          if (spec.include_noise) sample.obs_next = reveal(flow.path, n + 1);
          x = sample.x_next;
        }
        buffer.push(std::move(sample));
        ++step;
        ++result.total_env_steps;
        if (static_cast<long>(buffer.size()) < cfg.learning_starts) continue;
        for (int g = 0; g < cfg.gradient_steps; ++g) {
          auto batch = buffer.sample(cfg.batch_size, rng);
          std::vector<MlpQNetwork::RegressionSample> reg;
          reg.reserve(batch.size());
          for (const TransitionSample* s : batch) {
            MlpQNetwork::RegressionSample item;
            item.input =
                encode_input(spec, s->n, s->x, s->mu, spec.include_noise ? &s->obs : nullptr);
            item.action = s->action;
            item.target = munchausen_target(
                target, prev_net.has_value() ? &*prev_net : nullptr, spec, *s, cfg.tau,
                cfg.gamma, cfg.alpha);
            reg.push_back(std::move(item));
          }
          opt.apply(net, net.batch_gradient(reg));
          ++grad_updates;
          ++result.total_gradient_updates;
          if (grad_updates % cfg.target_sync == 0) target = net;
          if (cfg.on_gradient_update) cfg.on_gradient_update(k, grad_updates, net, target);
        }
      }
    }

    if (cfg.track_exploitability) {
      NeuralMasterPolicy snapshot(net, spec, cfg.tau);
      ExploitabilityReport report = exploitability(env, snapshot, mu0_set, paths);
      report.iteration = k;
      report.seed = cfg.seed;
      SolverIterationStats stats;
      stats.iteration = k;
      stats.mean_gap = report.mean_gap;
      stats.report = std::move(report);
      result.trace.iterations.push_back(std::move(stats));
    }
    prev_net = net;
  }

  if (cfg.iterations == 0 && cfg.track_exploitability) {
    // No-training baseline: report the untrained network's softmax policy.
    NeuralMasterPolicy snapshot(net, spec, cfg.tau);
    ExploitabilityReport report = exploitability(env, snapshot, mu0_set, paths);
    report.seed = cfg.seed;
    SolverIterationStats stats;
    stats.iteration = 0;
    stats.mean_gap = report.mean_gap;
    stats.report = std::move(report);
    result.trace.iterations.push_back(std::move(stats));
  }
  result.policy = NeuralMasterPolicy(std::move(net), spec, cfg.tau);
  return result;
}

}  // namespace mfg

#endif  // MFG_NEURAL_HPP
