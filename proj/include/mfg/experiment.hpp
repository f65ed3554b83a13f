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

#ifndef MFG_EXPERIMENT_HPP
#define MFG_EXPERIMENT_HPP

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "mfg/config.hpp"
#include "mfg/core.hpp"
#include "mfg/env.hpp"
#include "mfg/exact.hpp"
#include "mfg/meanfield.hpp"
#include "mfg/neural.hpp"
#include "mfg/noise.hpp"
#include "mfg/solvers.hpp"

namespace mfg {

// ---------------------------------------------------------------------------
// Config -> domain objects
// ---------------------------------------------------------------------------

inline EnvModel build_env(const ExperimentConfig& cfg) {
  if (cfg.env_name == "exploration") {
    auto geometry = cfg.env_geometry == "four_rooms" ? ExplorationGeometry::kFourRooms
                                                     : ExplorationGeometry::kOneRoom;
    return make_exploration(geometry, cfg.env_width, cfg.env_height, cfg.horizon);
  }
  if (cfg.env_name == "beach_bar") {
    auto dim = cfg.env_dimension == 2 ? BeachBarDimension::kTwoD : BeachBarDimension::kOneD;
    return make_beach_bar(dim, cfg.env_size, cfg.env_closure_noise, cfg.horizon);
  }
  LqParams p;
  p.L = cfg.lq_L;
  p.M = cfg.lq_M;
  p.sigma = cfg.lq_sigma;
  p.q = cfg.lq_q;
  p.kappa = cfg.lq_kappa;
  p.c_term = cfg.lq_c_term;
  p.delta = cfg.lq_delta;
  p.rho = cfg.lq_rho;
  p.noise_variant = cfg.lq_noise_variant == "xi1"   ? LqNoise::kXi1
                    : cfg.lq_noise_variant == "xi2" ? LqNoise::kXi2
                                                    : LqNoise::kNone;
  return make_linear_quadratic(p, cfg.horizon);
}

inline std::vector<CommonNoisePath> build_noise_paths(const ExperimentConfig& cfg) {
  std::vector<CommonNoisePath> paths;
  if (cfg.noise_kind == "closure") {
    std::pair<int, int> window = (cfg.noise_window_lo >= 0 && cfg.noise_window_hi >= 0)
                                     ? std::pair<int, int>{cfg.noise_window_lo,
                                                           cfg.noise_window_hi}
                                     : default_closure_window(cfg.horizon);
    for (int i = 0; i < cfg.noise_paths; ++i)
      paths.push_back(closure_process(cfg.horizon, window,
                                      static_cast<std::uint64_t>(cfg.noise_seed) + i));
  } else if (cfg.noise_kind == "lq_step") {
    if (cfg.noise_variant == "xi1" || cfg.noise_variant == "both")
      paths.push_back(lq_step_process(LqNoiseVariant::kXi1, cfg.horizon));
    if (cfg.noise_variant == "xi2" || cfg.noise_variant == "both")
      paths.push_back(lq_step_process(LqNoiseVariant::kXi2, cfg.horizon));
  } else {
    paths.push_back(zero_path(cfg.horizon));
  }
  return paths;
}

inline InitialSetKind parse_set_kind(const std::string& kind) {
  if (kind == "fixed_points") return InitialSetKind::kFixedPoints;
  if (kind == "gaussians") return InitialSetKind::kGaussians;
  return InitialSetKind::kRandomPoints;
}

// Output directory resolution: relative paths go under the
// MFGLAB_OUTPUT_ROOT env var when it is set.
inline std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg) {
  std::filesystem::path dir(cfg.output_dir);
  if (dir.is_relative()) {
    const char* root = std::getenv("MFGLAB_OUTPUT_ROOT");
    if (root != nullptr && *root != '\0') dir = std::filesystem::path(root) / dir;
  }
  return dir;
}

// ---------------------------------------------------------------------------
// Minimal SVG line plot (mean curve + std-dev band)
// ---------------------------------------------------------------------------

inline void write_exploitability_svg(std::ostream& os, const std::vector<double>& mean,
                                     const std::vector<double>& stddev,
                                     const std::string& title) {
  const double w = 640, h = 420, ml = 60, mr = 20, mt = 40, mb = 40;
  double lo = 0.0, hi = 1e-12;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    hi = std::max(hi, mean[i] + stddev[i]);
    lo = std::min(lo, mean[i] - stddev[i]);
  }
  auto px = [&](std::size_t i) {
    return ml + (w - ml - mr) * (mean.size() > 1 ? static_cast<double>(i) / (mean.size() - 1)
                                                 : 0.5);
  };
  auto py = [&](double v) { return h - mb - (h - mt - mb) * (v - lo) / (hi - lo); };
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\">\n";
  os << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
     << title << "</text>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\""
     << h - mb << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
     << "\" stroke=\"black\"/>\n";
  if (!mean.empty()) {
    os << "<polygon fill=\"#9ecae1\" fill-opacity=\"0.5\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < mean.size(); ++i)
      os << px(i) << ',' << py(mean[i] + stddev[i]) << ' ';
    for (std::size_t i = mean.size(); i-- > 0;)
      os << px(i) << ',' << py(mean[i] - stddev[i]) << ' ';
    os << "\"/>\n";
    os << "<polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < mean.size(); ++i) os << px(i) << ',' << py(mean[i]) << ' ';
    os << "\"/>\n";
  }
  os << "<text x=\"" << ml << "\" y=\"" << h - mb + 20
     << "\" font-size=\"11\">iteration</text>\n";
  os << "<text x=\"8\" y=\"" << mt << "\" font-size=\"11\">exploitability</text>\n";
  os << "</svg>\n";
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

struct RunOutcome {
  int exit_code = 0;
  std::string message;
  std::filesystem::path output_dir;
  // Per-seed traces, for programmatic callers (tests).
  std::vector<SolverTrace> traces;
};

namespace detail {

inline void write_csv_value(std::ostream& os, double v) {
  os << std::setprecision(17) << v;
}

// One seed of the configured solver. The tabular references are
// seed-invariant by construction; the seed still tags their outputs.
inline SolverTrace run_one_seed(const EnvModel& env, const ExperimentConfig& cfg,
                                const InitialDistributionSet& train_set,
                                const std::vector<CommonNoisePath>& paths,
                                std::uint64_t seed,
                                std::shared_ptr<MasterPolicy>* final_policy) {
  if (cfg.solver_name == "fp") {
    FpOptions opts;
    opts.iterations = cfg.iterations;
    opts.convergence_fraction = cfg.stop_fraction;
    opts.path = paths.front();
    FpResult r = run_fp(env, train_set, opts);
    if (final_policy != nullptr)
      *final_policy = std::make_shared<MixturePolicy>(r.policies.front().second);
    return r.trace;
  }
  if (cfg.solver_name == "omd") {
    // Population-independent OMD runs per mu0; traces merge entrywise.
    std::vector<SolverTrace> traces;
    std::shared_ptr<TimeStatePolicy> last;
    for (const auto& [label, mu0] : train_set.members) {
      OmdOptions opts;
      opts.iterations = cfg.iterations;
      opts.tau = cfg.tau;
      opts.path = paths.front();
      OmdResult r = run_omd(env, mu0, opts);
      last = std::make_shared<TimeStatePolicy>(std::move(r.policy));
      traces.push_back(std::move(r.trace));
    }
    if (final_policy != nullptr) *final_policy = last;
    SolverTrace merged;
    for (std::size_t k = 0; k < traces.front().iterations.size(); ++k) {
      SolverIterationStats stats;
      stats.iteration = static_cast<int>(k) + 1;
      stats.report.iteration = stats.iteration;
      for (std::size_t mi = 0; mi < traces.size(); ++mi) {
        for (auto e : traces[mi].iterations[k].report.entries) {
          e.mu0_label = train_set.members[mi].first;
          stats.report.entries.push_back(std::move(e));
        }
      }
      stats.report.finalize();
      stats.mean_gap = stats.report.mean_gap;
      merged.iterations.push_back(std::move(stats));
    }
    return merged;
  }
  if (cfg.solver_name == "master_omd_reference") {
    MasterOmdOptions opts;
    opts.iterations = cfg.iterations;
    opts.tau = cfg.tau;
    opts.max_cache_entries = static_cast<std::size_t>(cfg.max_cache_entries);
    opts.stop_below_fraction_of_first = cfg.stop_fraction;
    MasterOmdResult r = master_omd_reference(env, train_set, paths, opts);
    if (final_policy != nullptr) *final_policy = r.policy;
    return r.trace;
  }
  TrainConfig tc;
  tc.iterations = cfg.iterations;
  tc.tau = cfg.tau;
  tc.gamma = cfg.gamma;
  tc.alpha = cfg.alpha;
  tc.hidden.assign(cfg.hidden.begin(), cfg.hidden.end());
  tc.max_steps = cfg.max_steps;
  tc.buffer_capacity = static_cast<std::size_t>(cfg.buffer_capacity);
  tc.batch_size = cfg.batch_size;
  tc.gradient_steps = cfg.gradient_steps;
  tc.target_sync = cfg.target_sync;
  tc.learning_starts = cfg.learning_starts;
  tc.exploration_fraction = cfg.exploration_fraction;
  tc.lr = cfg.learning_rate;
  tc.optimizer = cfg.optimizer == "sgd" ? OptimizerKind::kSgd : OptimizerKind::kAdam;
  tc.include_population = cfg.include_population;
  tc.seed = seed;
  TrainResult r = train_master_omd(env, train_set, paths, tc);
  if (final_policy != nullptr)
    *final_policy = std::make_shared<NeuralMasterPolicy>(std::move(r.policy));
  return r.trace;
}

}  // namespace detail

inline RunOutcome run_experiment(const ExperimentConfig& cfg) {
  RunOutcome outcome;
  outcome.output_dir = resolve_output_dir(cfg);
  std::error_code ec;
  std::filesystem::create_directories(outcome.output_dir, ec);
  std::ofstream log(outcome.output_dir / "run.log");
  try {
    EnvModel env = build_env(cfg);
    std::vector<CommonNoisePath> paths = build_noise_paths(cfg);
    InitialDistributionSet train_set =
        make_initial_set(parse_set_kind(cfg.mu0_train_kind), cfg.mu0_train_count, env,
                         static_cast<std::uint64_t>(cfg.mu0_train_seed), "training");
    InitialDistributionSet test_set;
    if (cfg.mu0_test_kind != "none")
      test_set = make_initial_set(parse_set_kind(cfg.mu0_test_kind), cfg.mu0_test_count, env,
                                  static_cast<std::uint64_t>(cfg.mu0_test_seed), "testing");

    log << "label: " << cfg.label << "\nconfig:\n" << cfg.canonical_dump();
    for (const auto& w : env.warnings) log << "warning: " << w << '\n';

    std::ofstream exp_csv(outcome.output_dir / "exploitability.csv");
    exp_csv << std::setprecision(17);
    write_exploitability_header(exp_csv);
    std::ofstream test_csv;
    if (!test_set.members.empty()) {
      test_csv.open(outcome.output_dir / "test_exploitability.csv");
      test_csv << std::setprecision(17);
      write_exploitability_header(test_csv);
    }

    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
      std::uint64_t seed = static_cast<std::uint64_t>(cfg.seeds[si]);
      std::shared_ptr<MasterPolicy> final_policy;
      SolverTrace trace =
          detail::run_one_seed(env, cfg, train_set, paths, seed, &final_policy);
      for (auto& stats : trace.iterations) {
        stats.report.seed = seed;
        write_exploitability_rows(exp_csv, stats.report);
      }
      // Training-set and test-set aggregates never mix: test rows go to
      // their own file, evaluated once on the final policy.
      if (!test_set.members.empty() && final_policy) {
        ExploitabilityReport test_report =
            exploitability(env, *final_policy, test_set, paths);
        test_report.iteration =
            trace.iterations.empty() ? cfg.iterations
                                     : trace.iterations.back().iteration;
        test_report.seed = seed;
        write_exploitability_rows(test_csv, test_report);
      }
      if (cfg.export_flows && si == 0 && final_policy) {
        for (const auto& [label, mu0] : train_set.members) {
          for (const auto& path : paths) {
            MeanFieldFlow flow = induced_flow(env, *final_policy, mu0, path, label);
            std::ofstream fcsv(outcome.output_dir /
                               ("flow_" + label + "_" + path.label + ".csv"));
            fcsv << std::setprecision(17);
            write_flow_csv(fcsv, flow);
          }
        }
      }
      outcome.traces.push_back(std::move(trace));
    }

    // summary.csv: per-iteration mean and std-dev of the per-seed mean
    // gaps. Early stopping can shorten traces; aggregate the common
    // prefix.
    std::size_t rows = outcome.traces.front().iterations.size();
    for (const auto& t : outcome.traces) rows = std::min(rows, t.iterations.size());
    std::ofstream sum_csv(outcome.output_dir / "summary.csv");
    sum_csv << std::setprecision(17);
    sum_csv << "iteration,mean_gap,std_gap\n";
    std::vector<double> means, stds;
    for (std::size_t k = 0; k < rows; ++k) {
      double m = 0.0;
      for (const auto& t : outcome.traces) m += t.iterations[k].mean_gap;
      m /= outcome.traces.size();
      double v = 0.0;
      for (const auto& t : outcome.traces) {
        double d = t.iterations[k].mean_gap - m;
        v += d * d;
      }
      double s = std::sqrt(v / outcome.traces.size());
      sum_csv << (k + 1) << ',' << m << ',' << s << '\n';
      means.push_back(m);
      stds.push_back(s);
    }
    if (cfg.export_svg) {
      std::ofstream svg(outcome.output_dir / "exploitability.svg");
      write_exploitability_svg(svg, means, stds, cfg.label);
    }
    log << "status: ok\n";
  } catch (const std::exception& e) {
    log << "status: error\nerror: " << e.what() << '\n';
    outcome.exit_code = 2;
    outcome.message = e.what();
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// Theorem-1 check mode
// ---------------------------------------------------------------------------

inline RunOutcome run_theorem1_check(const ExperimentConfig& cfg) {
  RunOutcome outcome;
  outcome.output_dir = resolve_output_dir(cfg);
  std::error_code ec;
  std::filesystem::create_directories(outcome.output_dir, ec);
  std::ofstream log(outcome.output_dir / "run.log");
  try {
    EnvModel env = build_env(cfg);
    std::vector<CommonNoisePath> paths = build_noise_paths(cfg);
    InitialDistributionSet train_set =
        make_initial_set(parse_set_kind(cfg.mu0_train_kind), cfg.mu0_train_count, env,
                         static_cast<std::uint64_t>(cfg.mu0_train_seed), "training");
    Theorem1Report report =
        theorem1_residual(env, train_set, paths, cfg.iterations, cfg.tau,
                          static_cast<std::size_t>(cfg.max_cache_entries));
    std::ofstream csv(outcome.output_dir / "theorem1.csv");
    csv << std::setprecision(17);
    csv << "iterations,tau,max_residual,max_flow_divergence,flows_diverged\n";
    csv << cfg.iterations << ',' << cfg.tau << ',' << report.max_residual << ','
        << report.max_flow_divergence << ',' << (report.flows_diverged ? 1 : 0) << '\n';
    std::ostringstream msg;
    msg << std::setprecision(6) << "theorem1 max residual " << report.max_residual;
    if (report.flows_diverged) msg << " (" << report.diagnostics << ")";
    outcome.message = msg.str();
    log << "status: ok\n" << outcome.message << '\n';
  } catch (const std::exception& e) {
    log << "status: error\nerror: " << e.what() << '\n';
    outcome.exit_code = 2;
    outcome.message = e.what();
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// Ad-hoc teaming evaluation
// ---------------------------------------------------------------------------

inline RunOutcome run_adhoc_eval(const ExperimentConfig& cfg, const std::string& checkpoint,
                                 int join_step, double fraction) {
  RunOutcome outcome;
  outcome.output_dir = resolve_output_dir(cfg);
  std::error_code ec;
  std::filesystem::create_directories(outcome.output_dir, ec);
  std::ofstream log(outcome.output_dir / "run.log");
  try {
    EnvModel env = build_env(cfg);
    if (join_step < 0 || join_step >= env.horizon)
      throw std::invalid_argument("adhoc: join_step must be in [0, horizon)");
    NeuralMasterPolicy policy = load_checkpoint(checkpoint);
    if (policy.spec().num_states != env.states.size ||
        policy.spec().horizon != env.horizon)
      throw std::invalid_argument("adhoc: checkpoint does not match the configured env");
    if (!policy.spec().include_population) {
      // The scenario's whole point is reacting to the population shift.
      outcome.message =
          "warning: checkpoint is population-independent; the injected team cannot "
          "change its behavior and this scenario exercises nothing";
      log << outcome.message << '\n';
    }
    std::vector<CommonNoisePath> paths = build_noise_paths(cfg);
    const CommonNoisePath& path = paths.front();
    InitialDistributionSet train_set =
        make_initial_set(parse_set_kind(cfg.mu0_train_kind), cfg.mu0_train_count, env,
                         static_cast<std::uint64_t>(cfg.mu0_train_seed), "training");
    Vec mu0 = train_set.members.front().second;
    Vec newcomers = uniform_distribution(env.states.size);
    if (cfg.mu0_test_kind != "none") {
      InitialDistributionSet joiners =
          make_initial_set(parse_set_kind(cfg.mu0_test_kind), cfg.mu0_test_count, env,
                           static_cast<std::uint64_t>(cfg.mu0_test_seed), "testing");
      newcomers = joiners.members.front().second;
    }

    MeanFieldFlow base = induced_flow(env, policy, mu0, path, "base");
    MeanFieldFlow perturbed;
    perturbed.path = path;
    perturbed.mu0_label = "adhoc";
    perturbed.mu.push_back(mu0);
    for (int n = 0; n < env.horizon; ++n) {
      if (n == join_step)
        perturbed.mu.back() = inject_adhoc_team(perturbed.mu.back(), newcomers, fraction);
      const Vec& mu = perturbed.mu.back();
      Vec next = propagate(
          mu, [&](int x) { return policy.action_probs(n, x, mu, &path); }, env, n,
          path.at(n));
      perturbed.mu.push_back(std::move(next));
    }

    std::ofstream base_csv(outcome.output_dir / "flow_unperturbed.csv");
    base_csv << std::setprecision(17);
    write_flow_csv(base_csv, base);
    std::ofstream adhoc_csv(outcome.output_dir / "flow_adhoc.csv");
    adhoc_csv << std::setprecision(17);
    write_flow_csv(adhoc_csv, perturbed);
    log << "status: ok\n";
  } catch (const std::exception& e) {
    log << "status: error\nerror: " << e.what() << '\n';
    outcome.exit_code = 2;
    outcome.message = e.what();
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// Replay-buffer capacity sweep
// ---------------------------------------------------------------------------

inline RunOutcome run_sweep_buffer(const ExperimentConfig& cfg,
                                   const std::vector<long>& capacities) {
  RunOutcome outcome;
  outcome.output_dir = resolve_output_dir(cfg);
  std::error_code ec;
  std::filesystem::create_directories(outcome.output_dir, ec);
  std::ofstream log(outcome.output_dir / "run.log");
  try {
    if (capacities.empty())
      throw std::invalid_argument("sweep-buffer: no capacities given");
    EnvModel env = build_env(cfg);
    std::vector<CommonNoisePath> paths = build_noise_paths(cfg);
    InitialDistributionSet train_set =
        make_initial_set(parse_set_kind(cfg.mu0_train_kind), cfg.mu0_train_count, env,
                         static_cast<std::uint64_t>(cfg.mu0_train_seed), "training");
    std::ofstream csv(outcome.output_dir / "sweep_buffer.csv");
    csv << std::setprecision(17);
    csv << "capacity,iteration,mean_gap\n";
    for (long cap : capacities) {
      if (cap < 1) throw std::invalid_argument("sweep-buffer: capacity must be >= 1");
      ExperimentConfig sub = cfg;
      sub.buffer_capacity = cap;
      sub.solver_name = "master_omd_neural";
      SolverTrace trace = detail::run_one_seed(
          env, sub, train_set, paths, static_cast<std::uint64_t>(cfg.seeds.front()),
          nullptr);
      for (const auto& stats : trace.iterations)
        csv << cap << ',' << stats.iteration << ',' << stats.mean_gap << '\n';
      outcome.traces.push_back(std::move(trace));
    }
    log << "status: ok\n";
  } catch (const std::exception& e) {
    log << "status: error\nerror: " << e.what() << '\n';
    outcome.exit_code = 2;
    outcome.message = e.what();
  }
  return outcome;
}

}  // namespace mfg

#endif  // MFG_EXPERIMENT_HPP
