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

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mfg/config.hpp"
#include "mfg/experiment.hpp"

namespace {

// Exit codes: 0 success, 1 validation error, 2 runtime error.
constexpr int kOk = 0;
constexpr int kValidationError = 1;
constexpr int kRuntimeError = 2;

bool load_config(const std::string& path, mfg::ExperimentConfig* cfg) {
  std::ifstream is(path);
  if (!is) {
    std::cerr << "cannot open config file: " << path << '\n';
    return false;
  }
  std::stringstream ss;
  ss << is.rdbuf();
  std::vector<mfg::ConfigError> errors;
  *cfg = mfg::ExperimentConfig::parse(ss.str(), errors);
  if (!errors.empty()) {
    std::cerr << "invalid config:\n" << mfg::format_errors(errors);
    return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mfglab: finite mean field game laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string checkpoint;
  int join_step = 0;
  double fraction = 0.5;
  std::vector<long> capacities;

  CLI::App* run = app.add_subcommand("run", "run a configured experiment");
  run->add_option("config", config_path, "config file")->required();

  CLI::App* check =
      app.add_subcommand("check-theorem1", "verify the OMD equivalence residual");
  check->add_option("config", config_path, "config file")->required();

  CLI::App* adhoc = app.add_subcommand("adhoc", "ad-hoc team joining evaluation");
  adhoc->add_option("config", config_path, "config file")->required();
  adhoc->add_option("--checkpoint", checkpoint, "policy checkpoint file")->required();
  adhoc->add_option("--join-step", join_step, "timestep at which the new team joins")
      ->required();
  adhoc->add_option("--fraction", fraction, "newcomer mass fraction in (0,1)")->required();

  CLI::App* sweep = app.add_subcommand("sweep-buffer", "replay-buffer capacity sweep");
  sweep->add_option("config", config_path, "config file")->required();
  sweep->add_option("--capacities", capacities, "buffer capacities to sweep")
      ->required()
      ->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  mfg::ExperimentConfig cfg;
  if (!load_config(config_path, &cfg)) return kValidationError;

  mfg::RunOutcome outcome;
  if (run->parsed()) {
    outcome = mfg::run_experiment(cfg);
  } else if (check->parsed()) {
    outcome = mfg::run_theorem1_check(cfg);
  } else if (adhoc->parsed()) {
    outcome = mfg::run_adhoc_eval(cfg, checkpoint, join_step, fraction);
  } else {
    outcome = mfg::run_sweep_buffer(cfg, capacities);
  }

  if (!outcome.message.empty())
    (outcome.exit_code == 0 ? std::cout : std::cerr) << outcome.message << '\n';
  if (outcome.exit_code == 0)
    std::cout << "artifacts written to " << outcome.output_dir.string() << '\n';
  return outcome.exit_code == 0 ? kOk : kRuntimeError;
}
