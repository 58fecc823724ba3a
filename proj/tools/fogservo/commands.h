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


#ifndef FOGSERVO_TOOLS_COMMANDS_H_
#define FOGSERVO_TOOLS_COMMANDS_H_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fogservo/experiment.h"

namespace fogservo::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // runtime error or invalid logs
inline constexpr int kExitConfig = 2;   // unreadable or invalid config

struct RunArgs {
  std::string config;
  experiment::RunOptions options;
};

struct SweepArgs {
  std::string config;
  std::string grid;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
  int workers = 1;
};

struct ServeArgs {
  std::string config;
  std::uint16_t ws_port = 8765;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> static_dir;
  double speed = 1.0;  // virtual seconds per wall second
  Micros frame_period = 50'000;
  // Set from another thread or a signal handler to stop serving.
  const std::atomic<bool>* stop = nullptr;
  // Called once the websocket is listening.
  std::function<void(std::uint16_t port)> on_listening;
};

// Each command prints its result to `out` and diagnostics through spdlog.
int RunCommand(const RunArgs& args, std::ostream& out);
int SweepCommand(const SweepArgs& args, std::ostream& out);
int ServeCommand(const ServeArgs& args, std::ostream& out);
int ValidateCommand(const std::vector<std::string>& paths, std::ostream& out);

// Applies FOGSERVO_LOG_LEVEL (trace, debug, info, warn, error, off).
void ConfigureLogging();

}  // namespace fogservo::cli

#endif  // FOGSERVO_TOOLS_COMMANDS_H_
