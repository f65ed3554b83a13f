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

#ifndef MFG_CONFIG_HPP
#define MFG_CONFIG_HPP

#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace mfg {

struct ConfigError {
  std::string path;
  std::string message;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

// Flat key-value document with dotted sections. Lines are
// "section.key = value"; '#' starts a comment. Typed getters record
// which keys were consumed so leftovers can be rejected as unknown.
class ConfigDoc {
 public:
  static ConfigDoc parse(const std::string& text, std::vector<ConfigError>& errors) {
    ConfigDoc doc;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      std::size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      std::size_t eq = line.find('=');
      if (eq == std::string::npos) {
        errors.push_back({"line " + std::to_string(lineno),
                          "expected 'key = value', got '" + line + "'"});
        continue;
      }
      std::string key = detail::trim(line.substr(0, eq));
      std::string value = detail::trim(line.substr(eq + 1));
      if (key.empty()) {
        errors.push_back({"line " + std::to_string(lineno), "empty key"});
        continue;
      }
      if (doc.values_.count(key))
        errors.push_back({key, "duplicate key"});
      doc.values_[key] = value;
    }
    return doc;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& def) {
    consumed_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? def : it->second;
  }

  std::string get_enum(const std::string& key, const std::string& def,
                       const std::vector<std::string>& allowed,
                       std::vector<ConfigError>& errors) {
    std::string v = get_string(key, def);
    for (const auto& a : allowed)
      if (v == a) return v;
    std::string opts;
    for (const auto& a : allowed) opts += (opts.empty() ? "" : " | ") + a;
    errors.push_back({key, "'" + v + "' is not one of: " + opts});
    return def;
  }

  long get_int(const std::string& key, long def, std::vector<ConfigError>& errors) {
    consumed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return def;
    try {
      std::size_t pos = 0;
      long v = std::stol(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing text");
      return v;
    } catch (const std::exception&) {
      errors.push_back({key, "expected integer, got '" + it->second + "'"});
      return def;
    }
  }

  double get_double(const std::string& key, double def, std::vector<ConfigError>& errors) {
    consumed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return def;
    try {
      std::size_t pos = 0;
      double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing text");
      return v;
    } catch (const std::exception&) {
      errors.push_back({key, "expected real number, got '" + it->second + "'"});
      return def;
    }
  }

  bool get_bool(const std::string& key, bool def, std::vector<ConfigError>& errors) {
    consumed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return def;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    errors.push_back({key, "expected true|false, got '" + it->second + "'"});
    return def;
  }

  std::vector<long> get_int_list(const std::string& key, std::vector<long> def,
                                 std::vector<ConfigError>& errors) {
    consumed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return def;
    std::vector<long> out;
    std::stringstream ss(it->second);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cell = detail::trim(cell);
      try {
        std::size_t pos = 0;
        out.push_back(std::stol(cell, &pos));
        if (pos != cell.size()) throw std::invalid_argument("trailing text");
      } catch (const std::exception&) {
        errors.push_back({key, "expected comma-separated integers, got '" + it->second + "'"});
        return def;
      }
    }
    if (out.empty()) {
      errors.push_back({key, "empty list"});
      return def;
    }
    return out;
  }

  void reject_unknown(std::vector<ConfigError>& errors) const {
    for (const auto& [key, value] : values_)
      if (!consumed_.count(key)) errors.push_back({key, "unknown key"});
  }

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

// Fully validated experiment description. Defaults follow the training
// setup of the source experiments (tau 50, gamma 0.99, batch 32, five
// fixed seeds).
struct ExperimentConfig {
  // env
  std::string env_name = "exploration";        // exploration | beach_bar | linear_quadratic
  std::string env_geometry = "one_room";       // exploration only
  int env_width = 5;
  int env_height = 5;
  int env_dimension = 1;                       // beach bar only
  int env_size = 11;
  bool env_closure_noise = false;
  int horizon = 10;
  // LQ parameters
  int lq_L = 50;
  int lq_M = 3;
  double lq_sigma = 1.0;
  double lq_q = 0.01;
  double lq_kappa = 0.5;
  double lq_c_term = 1.0;
  double lq_delta = 1.0;
  double lq_rho = 0.5;
  std::string lq_noise_variant = "none";       // none | xi1 | xi2

  // solver
  std::string solver_name = "master_omd_reference";  // fp | omd | master_omd_reference | master_omd_neural
  int iterations = 10;
  double tau = 50.0;
  double gamma = 0.99;
  double alpha = 1.0;
  long max_steps = 2000;
  long buffer_capacity = 2000;
  int batch_size = 32;
  int gradient_steps = 1;
  int target_sync = 4;
  long learning_starts = 100;
  double exploration_fraction = 0.1;
  double learning_rate = 1e-4;
  std::string optimizer = "adam";              // adam | sgd
  bool include_population = true;
  std::vector<long> hidden = {64, 64};
  long max_cache_entries = 10'000'000;
  double stop_fraction = 0.0;

  // initial distributions
  std::string mu0_train_kind = "fixed_points";  // fixed_points | gaussians | random_points
  int mu0_train_count = 1;
  long mu0_train_seed = 0;
  std::string mu0_test_kind = "none";           // none disables test-set evaluation
  int mu0_test_count = 1;
  long mu0_test_seed = 1;

  // noise
  std::string noise_kind = "none";              // none | closure | lq_step
  int noise_window_lo = -1;                     // -1 -> default window
  int noise_window_hi = -1;
  int noise_paths = 1;
  long noise_seed = 0;
  std::string noise_variant = "xi1";            // xi1 | xi2 | both

  // run
  std::vector<long> seeds = {42, 3407, 303, 109, 312};
  std::string output_dir = "out";
  std::string label = "experiment";
  bool export_flows = true;
  bool export_svg = true;
  bool export_policy = false;

  static ExperimentConfig parse(const std::string& text, std::vector<ConfigError>& errors) {
    ConfigDoc doc = ConfigDoc::parse(text, errors);
    ExperimentConfig c;
    c.env_name = doc.get_enum("env.name", c.env_name,
                              {"exploration", "beach_bar", "linear_quadratic"}, errors);
    c.env_geometry =
        doc.get_enum("env.geometry", c.env_geometry, {"one_room", "four_rooms"}, errors);
    c.env_width = static_cast<int>(doc.get_int("env.width", c.env_width, errors));
    c.env_height = static_cast<int>(doc.get_int("env.height", c.env_height, errors));
    c.env_dimension = static_cast<int>(doc.get_int("env.dimension", c.env_dimension, errors));
    c.env_size = static_cast<int>(doc.get_int("env.size", c.env_size, errors));
    c.env_closure_noise = doc.get_bool("env.closure_noise", c.env_closure_noise, errors);
    c.horizon = static_cast<int>(doc.get_int("env.horizon", c.horizon, errors));
    c.lq_L = static_cast<int>(doc.get_int("env.L", c.lq_L, errors));
    c.lq_M = static_cast<int>(doc.get_int("env.M", c.lq_M, errors));
    c.lq_sigma = doc.get_double("env.sigma", c.lq_sigma, errors);
    c.lq_q = doc.get_double("env.q", c.lq_q, errors);
    c.lq_kappa = doc.get_double("env.kappa", c.lq_kappa, errors);
    c.lq_c_term = doc.get_double("env.c_term", c.lq_c_term, errors);
    c.lq_delta = doc.get_double("env.delta", c.lq_delta, errors);
    c.lq_rho = doc.get_double("env.rho", c.lq_rho, errors);
    c.lq_noise_variant = doc.get_enum("env.noise_variant", c.lq_noise_variant,
                                      {"none", "xi1", "xi2"}, errors);

    c.solver_name = doc.get_enum(
        "solver.name", c.solver_name,
        {"fp", "omd", "master_omd_reference", "master_omd_neural"}, errors);
    c.iterations = static_cast<int>(doc.get_int("solver.iterations", c.iterations, errors));
    c.tau = doc.get_double("solver.tau", c.tau, errors);
    c.gamma = doc.get_double("solver.gamma", c.gamma, errors);
    c.alpha = doc.get_double("solver.alpha", c.alpha, errors);
    c.max_steps = doc.get_int("solver.max_steps", c.max_steps, errors);
    c.buffer_capacity = doc.get_int("solver.buffer_capacity", c.buffer_capacity, errors);
    c.batch_size = static_cast<int>(doc.get_int("solver.batch_size", c.batch_size, errors));
    c.gradient_steps =
        static_cast<int>(doc.get_int("solver.gradient_steps", c.gradient_steps, errors));
    c.target_sync = static_cast<int>(doc.get_int("solver.target_sync", c.target_sync, errors));
    c.learning_starts = doc.get_int("solver.learning_starts", c.learning_starts, errors);
    c.exploration_fraction =
        doc.get_double("solver.exploration_fraction", c.exploration_fraction, errors);
    c.learning_rate = doc.get_double("solver.learning_rate", c.learning_rate, errors);
    c.optimizer = doc.get_enum("solver.optimizer", c.optimizer, {"adam", "sgd"}, errors);
    c.include_population =
        doc.get_bool("solver.include_population", c.include_population, errors);
    c.hidden = doc.get_int_list("solver.hidden", c.hidden, errors);
    c.max_cache_entries = doc.get_int("solver.max_cache_entries", c.max_cache_entries, errors);
    c.stop_fraction = doc.get_double("solver.stop_fraction", c.stop_fraction, errors);

    c.mu0_train_kind = doc.get_enum("mu0.train.kind", c.mu0_train_kind,
                                    {"fixed_points", "gaussians", "random_points"}, errors);
    c.mu0_train_count =
        static_cast<int>(doc.get_int("mu0.train.count", c.mu0_train_count, errors));
    c.mu0_train_seed = doc.get_int("mu0.train.seed", c.mu0_train_seed, errors);
    c.mu0_test_kind = doc.get_enum("mu0.test.kind", c.mu0_test_kind,
                                   {"none", "fixed_points", "gaussians", "random_points"},
                                   errors);
    c.mu0_test_count = static_cast<int>(doc.get_int("mu0.test.count", c.mu0_test_count, errors));
    c.mu0_test_seed = doc.get_int("mu0.test.seed", c.mu0_test_seed, errors);

    c.noise_kind =
        doc.get_enum("noise.kind", c.noise_kind, {"none", "closure", "lq_step"}, errors);
    c.noise_window_lo =
        static_cast<int>(doc.get_int("noise.window_lo", c.noise_window_lo, errors));
    c.noise_window_hi =
        static_cast<int>(doc.get_int("noise.window_hi", c.noise_window_hi, errors));
    c.noise_paths = static_cast<int>(doc.get_int("noise.paths", c.noise_paths, errors));
    c.noise_seed = doc.get_int("noise.seed", c.noise_seed, errors);
    c.noise_variant =
        doc.get_enum("noise.variant", c.noise_variant, {"xi1", "xi2", "both"}, errors);

    c.seeds = doc.get_int_list("run.seeds", c.seeds, errors);
    c.output_dir = doc.get_string("run.output_dir", c.output_dir);
    c.label = doc.get_string("run.label", c.label);
    c.export_flows = doc.get_bool("export.flows", c.export_flows, errors);
    c.export_svg = doc.get_bool("export.svg", c.export_svg, errors);
    c.export_policy = doc.get_bool("export.policy", c.export_policy, errors);

    doc.reject_unknown(errors);
    c.validate(errors);
    return c;
  }

  // Cross-field preconditions, mirroring each module's own checks so a
  // bad document fails before any compute, with every violation listed.
  void validate(std::vector<ConfigError>& errors) const {
    if (horizon < 1) errors.push_back({"env.horizon", "must be >= 1"});
    if (env_name == "exploration") {
      if (env_width < 2 || env_height < 2)
        errors.push_back({"env.width", "exploration grid needs width, height >= 2"});
      if (env_geometry == "four_rooms" && (env_width % 2 == 0 || env_height % 2 == 0))
        errors.push_back({"env.geometry",
                          "four_rooms requires odd width and height so walls with "
                          "single-door openings fit"});
    }
    if (env_name == "beach_bar") {
      if (env_size < 3) errors.push_back({"env.size", "beach bar needs size >= 3"});
      if (env_dimension != 1 && env_dimension != 2)
        errors.push_back({"env.dimension", "must be 1 or 2"});
    }
    if (env_name == "linear_quadratic") {
      if (lq_L < 1) errors.push_back({"env.L", "must be >= 1"});
      if (lq_M < 1) errors.push_back({"env.M", "must be >= 1"});
      if (lq_rho < 0.0 || lq_rho > 1.0) errors.push_back({"env.rho", "must be in [0, 1]"});
    }
    if (iterations < 0) errors.push_back({"solver.iterations", "must be >= 0"});
    if (!(tau > 0.0)) errors.push_back({"solver.tau", "must be positive"});
    if (gamma < 0.0 || gamma > 1.0) errors.push_back({"solver.gamma", "must be in [0, 1]"});
    if (max_steps < 1) errors.push_back({"solver.max_steps", "must be >= 1"});
    if (buffer_capacity < 1) errors.push_back({"solver.buffer_capacity", "must be >= 1"});
    if (batch_size < 1) errors.push_back({"solver.batch_size", "must be >= 1"});
    if (exploration_fraction <= 0.0 || exploration_fraction > 1.0)
      errors.push_back({"solver.exploration_fraction", "must be in (0, 1]"});
    if (!(learning_rate > 0.0)) errors.push_back({"solver.learning_rate", "must be positive"});
    for (long h : hidden)
      if (h < 1) errors.push_back({"solver.hidden", "layer sizes must be >= 1"});
    if (mu0_train_count < 1) errors.push_back({"mu0.train.count", "must be >= 1"});
    if (mu0_test_kind != "none" && mu0_test_count < 1)
      errors.push_back({"mu0.test.count", "must be >= 1"});
    if (noise_kind == "closure" && noise_window_lo >= 0 && noise_window_hi >= 0) {
      if (noise_window_lo >= noise_window_hi || noise_window_hi > horizon)
        errors.push_back({"noise.window_lo", "closure window must satisfy 0 <= lo < hi <= horizon"});
    }
    if (noise_kind == "lq_step" && env_name != "linear_quadratic")
      errors.push_back({"noise.kind", "lq_step noise requires the linear_quadratic env"});
    if (seeds.empty()) errors.push_back({"run.seeds", "must list at least one seed"});
  }

  // Every effective key, sorted, one per line. Re-parsing the dump
  // yields the same config.
  std::string canonical_dump() const {
    std::ostringstream os;
    auto list = [](const std::vector<long>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? "," : "") + std::to_string(v[i]);
      return s;
    };
    os << "env.L = " << lq_L << '\n';
    os << "env.M = " << lq_M << '\n';
    os << "env.c_term = " << lq_c_term << '\n';
    os << "env.closure_noise = " << (env_closure_noise ? "true" : "false") << '\n';
    os << "env.delta = " << lq_delta << '\n';
    os << "env.dimension = " << env_dimension << '\n';
    os << "env.geometry = " << env_geometry << '\n';
    os << "env.height = " << env_height << '\n';
    os << "env.horizon = " << horizon << '\n';
    os << "env.kappa = " << lq_kappa << '\n';
    os << "env.name = " << env_name << '\n';
    os << "env.noise_variant = " << lq_noise_variant << '\n';
    os << "env.q = " << lq_q << '\n';
    os << "env.rho = " << lq_rho << '\n';
    os << "env.sigma = " << lq_sigma << '\n';
    os << "env.size = " << env_size << '\n';
    os << "env.width = " << env_width << '\n';
    os << "export.flows = " << (export_flows ? "true" : "false") << '\n';
    os << "export.policy = " << (export_policy ? "true" : "false") << '\n';
    os << "export.svg = " << (export_svg ? "true" : "false") << '\n';
    os << "mu0.test.count = " << mu0_test_count << '\n';
    os << "mu0.test.kind = " << mu0_test_kind << '\n';
    os << "mu0.test.seed = " << mu0_test_seed << '\n';
    os << "mu0.train.count = " << mu0_train_count << '\n';
    os << "mu0.train.kind = " << mu0_train_kind << '\n';
    os << "mu0.train.seed = " << mu0_train_seed << '\n';
    os << "noise.kind = " << noise_kind << '\n';
    os << "noise.paths = " << noise_paths << '\n';
    os << "noise.seed = " << noise_seed << '\n';
    os << "noise.variant = " << noise_variant << '\n';
    os << "noise.window_hi = " << noise_window_hi << '\n';
    os << "noise.window_lo = " << noise_window_lo << '\n';
    os << "run.label = " << label << '\n';
    os << "run.output_dir = " << output_dir << '\n';
    os << "run.seeds = " << list(seeds) << '\n';
    os << "solver.alpha = " << alpha << '\n';
    os << "solver.batch_size = " << batch_size << '\n';
    os << "solver.buffer_capacity = " << buffer_capacity << '\n';
    os << "solver.exploration_fraction = " << exploration_fraction << '\n';
    os << "solver.gamma = " << gamma << '\n';
    os << "solver.gradient_steps = " << gradient_steps << '\n';
    os << "solver.hidden = " << list(hidden) << '\n';
    os << "solver.include_population = " << (include_population ? "true" : "false") << '\n';
    os << "solver.iterations = " << iterations << '\n';
    os << "solver.learning_rate = " << learning_rate << '\n';
    os << "solver.learning_starts = " << learning_starts << '\n';
    os << "solver.max_cache_entries = " << max_cache_entries << '\n';
    os << "solver.max_steps = " << max_steps << '\n';
    os << "solver.name = " << solver_name << '\n';
    os << "solver.optimizer = " << optimizer << '\n';
    os << "solver.stop_fraction = " << stop_fraction << '\n';
    os << "solver.target_sync = " << target_sync << '\n';
    os << "solver.tau = " << tau << '\n';
    return os.str();
  }
};

inline std::string format_errors(const std::vector<ConfigError>& errors) {
  std::string out;
  for (const auto& e : errors) out += e.path + ": " + e.message + "\n";
  return out;
}

}  // namespace mfg

#endif  // MFG_CONFIG_HPP
