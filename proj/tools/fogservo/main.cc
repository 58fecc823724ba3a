// Copyright 2026 The FogServo Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// fogservo: scenario runner, parameter sweeps, browser bridge and log
// validation for the fog-robotic pickup stack.

#include <atomic>
#include <csignal>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fogservo/commands.h"

namespace {

std::atomic<bool> g_stop{false};

void OnSignal(int) { g_stop = true; }

}  // namespace

int main(int argc, char** argv) {
  using namespace fogservo::cli;
  ConfigureLogging();

  CLI::App app{"Fog-robotic pickup stack: run, sweep, serve, validate"};
  app.require_subcommand(1);

  RunArgs run;
  std::uint64_t run_seed = 0;
  int run_reps = 0;
  std::string run_out;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario headless");
  run_cmd->add_option("--config", run.config, "Scenario JSON")
      ->required()
      ->check(CLI::ExistingFile);
  auto* seed_opt = run_cmd->add_option("--seed", run_seed, "Override the seed");
  auto* reps_opt = run_cmd->add_option("--reps", run_reps, "Override repetitions")
                       ->check(CLI::PositiveNumber);
  run_cmd->add_flag("--live", run.options.live,
                    "Run nodes over loopback UDP in wall-clock time");
  auto* out_opt = run_cmd->add_option("--out", run_out, "Directory for logs");
  run_cmd->add_option("--workers", run.options.workers,
                      "Parallel repetitions (headless only)")
      ->check(CLI::PositiveNumber);

  SweepArgs sweep;
  std::uint64_t sweep_seed = 0;
  std::string sweep_out;
  auto* sweep_cmd =
      app.add_subcommand("sweep", "Run the cross product of a parameter grid");
  sweep_cmd->add_option("--config", sweep.config, "Base scenario JSON")
      ->required()
      ->check(CLI::ExistingFile);
  sweep_cmd->add_option("--grid", sweep.grid, "Grid JSON: {\"a.b\": [values]}")
      ->required()
      ->check(CLI::ExistingFile);
  auto* sweep_seed_opt =
      sweep_cmd->add_option("--seed", sweep_seed, "Override the seed");
  auto* sweep_out_opt =
      sweep_cmd->add_option("--out", sweep_out, "Directory for per-cell logs");
  sweep_cmd->add_option("--workers", sweep.workers, "Parallel repetitions")
      ->check(CLI::PositiveNumber);

  ServeArgs serve;
  std::uint64_t serve_seed = 0;
  std::string ui_dir;
  auto* serve_cmd = app.add_subcommand(
      "serve", "Run a scenario in wall-clock time behind a websocket bridge");
  serve_cmd->add_option("--config", serve.config, "Scenario JSON")
      ->required()
      ->check(CLI::ExistingFile);
  serve_cmd->add_option("--ws-port", serve.ws_port, "Websocket port (0: any)");
  auto* serve_seed_opt =
      serve_cmd->add_option("--seed", serve_seed, "Override the seed");
  auto* ui_opt = serve_cmd->add_option("--ui-dir", ui_dir,
                                       "Static files for the browser console")
                     ->check(CLI::ExistingDirectory);
  serve_cmd->add_option("--speed", serve.speed,
                        "Simulated seconds per wall second");

  std::vector<std::string> paths;
  auto* validate_cmd =
      app.add_subcommand("validate", "Check JSON-Lines logs against the schema");
  validate_cmd->add_option("paths", paths, "Log files or directories")
      ->required();

  CLI11_PARSE(app, argc, argv);

  if (*run_cmd) {
    if (*seed_opt) run.options.seed = run_seed;
    if (*reps_opt) run.options.repetitions = run_reps;
    if (*out_opt) run.options.out_dir = run_out;
    return RunCommand(run, std::cout);
  }
  if (*sweep_cmd) {
    if (*sweep_seed_opt) sweep.seed = sweep_seed;
    if (*sweep_out_opt) sweep.out_dir = sweep_out;
    return SweepCommand(sweep, std::cout);
  }
  if (*serve_cmd) {
    if (*serve_seed_opt) serve.seed = serve_seed;
    if (*ui_opt) serve.static_dir = ui_dir;
    std::signal(SIGINT, OnSignal);
    std::signal(SIGTERM, OnSignal);
    serve.stop = &g_stop;
    return ServeCommand(serve, std::cout);
  }
  return ValidateCommand(paths, std::cout);
}
