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

#ifndef FOGSERVO_EXPERIMENT_H_
#define FOGSERVO_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fogservo/scenario.h"
#include "fogservo/topology.h"

namespace fogservo::experiment {

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the scenario seed
  std::optional<int> repetitions;     // overrides the scenario count
  bool live = false;
  std::optional<std::filesystem::path> out_dir;
  int workers = 1;
};

struct Summary {
  std::string name;
  std::vector<topology::RunMetrics> runs;
  int successes = 0;
  int falls = 0;
  double success_rate = 0.0;
  double mean_duration_s = 0.0;
  std::optional<double> mean_stop_latency_ms;
  std::optional<double> max_stop_latency_ms;
};

std::uint64_t RepetitionSeed(std::uint64_t seed, int repetition);

// Runs every repetition and, with an output directory, writes
// rep_NNN/{telemetry,phases,delivery}.jsonl plus summary.json.
Summary Run(const scenario::Scenario& s, const RunOptions& options = {});

void WriteLogs(const std::filesystem::path& dir, const topology::RunLogs& logs);

nlohmann::ordered_json ToJson(const topology::RunMetrics& m);
nlohmann::ordered_json ToJson(const Summary& s);

// Parameter grid: dotted scenario paths, each with a list of values.
struct Grid {
  std::vector<std::pair<std::string, std::vector<nlohmann::json>>> axes;
  std::size_t cells() const;
};

Grid ParseGrid(const nlohmann::ordered_json& doc);

// One CSV row per cell of the cross product; the first axis varies slowest.
std::string Sweep(const nlohmann::json& base, const Grid& grid,
                  const RunOptions& options = {});

}  // namespace fogservo::experiment

#endif  // FOGSERVO_EXPERIMENT_H_
