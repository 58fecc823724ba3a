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


#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "fogservo/experiment.h"
#include "fogservo/log_schema.h"

namespace fogservo::experiment {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

const std::filesystem::path kConfigs = std::filesystem::path(FOGSERVO_SOURCE_DIR) / "configs";

json ReadJson(const std::string& name) {
  std::ifstream in(kConfigs / name);
  return json::parse(in);
}

std::vector<std::vector<std::string>> ParseCsv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() /
            ("fogservo_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::remove_all(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

TEST(RepetitionSeed, DistinctAndStable) {
  EXPECT_EQ(RepetitionSeed(7, 3), RepetitionSeed(7, 3));
  EXPECT_NE(RepetitionSeed(7, 3), RepetitionSeed(7, 4));
  EXPECT_NE(RepetitionSeed(7, 3), RepetitionSeed(8, 3));
}

TEST(Run, SummaryAggregates) {
  const auto s = scenario::LoadScenario((kConfigs / "teleop_trace.json").string());
  const Summary sum = experiment::Run(s);
  ASSERT_EQ(sum.runs.size(), 3u);
  EXPECT_EQ(sum.successes, 3);
  EXPECT_EQ(sum.falls, 0);
  EXPECT_DOUBLE_EQ(sum.success_rate, 1.0);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(sum.runs[i].repetition, i);
    EXPECT_EQ(sum.runs[i].seed, RepetitionSeed(5, i));
  }
  ASSERT_TRUE(sum.max_stop_latency_ms);
  EXPECT_GE(*sum.max_stop_latency_ms, *sum.mean_stop_latency_ms);
  const ordered_json j = ToJson(sum);
  EXPECT_EQ(j["name"], "teleop_trace");
  EXPECT_EQ(j["runs"].size(), 3u);
}

TEST(Run, OverridesAndWorkersDoNotChangeResults) {
  auto s = scenario::LoadScenario((kConfigs / "auto_static.json").string());
  RunOptions one;
  one.repetitions = 4;
  one.seed = 99;
  RunOptions many = one;
  many.workers = 3;
  const Summary a = experiment::Run(s, one);
  const Summary b = experiment::Run(s, many);
  ASSERT_EQ(a.runs.size(), 4u);
  EXPECT_EQ(ToJson(a).dump(), ToJson(b).dump());
  EXPECT_EQ(a.runs[0].seed, RepetitionSeed(99, 0));
}

TEST(Run, WritesValidLogs) {
  TempDir dir;
  auto s = scenario::LoadScenario((kConfigs / "auto_static.json").string());
  s.cloud_edge.drop = 0.2;
  s.cloud_edge.jitter_ms = 20;
  s.cloud_edge.latency_ms = 50;
  RunOptions o;
  o.repetitions = 2;
  o.out_dir = dir.path();
  experiment::Run(s, o);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "summary.json"));
  for (const char* rep : {"rep_000", "rep_001"}) {
    for (const char* file : {"telemetry.jsonl", "phases.jsonl", "delivery.jsonl"}) {
      const auto path = dir.path() / rep / file;
      ASSERT_TRUE(std::filesystem::exists(path)) << path;
      const auto report = logs::ValidateFile(path, *logs::KindFromPath(path));
      EXPECT_TRUE(report.ok()) << path << ": " << report.errors.front();
      EXPECT_GT(report.lines, 0u) << path;
    }
  }
}

TEST(Run, ByteIdenticalLogsUnderFixedSeed) {
  TempDir a;
  TempDir b;
  auto s = scenario::LoadScenario((kConfigs / "moving_carrier.json").string());
  s.cloud_edge.drop = 0.1;
  s.cloud_edge.jitter_ms = 30;
  s.cloud_edge.latency_ms = 80;
  s.cloud_edge.reorder = 0.05;
  RunOptions o;
  o.repetitions = 2;
  o.out_dir = a.path() / "run";
  experiment::Run(s, o);
  o.out_dir = b.path() / "run";
  o.workers = 2;
  experiment::Run(s, o);
  for (const auto& entry : std::filesystem::recursive_directory_iterator(a.path() / "run")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), a.path());
    std::ifstream fa(entry.path(), std::ios::binary);
    std::ifstream fb(b.path() / rel, std::ios::binary);
    ASSERT_TRUE(fb) << rel;
    const std::string sa((std::istreambuf_iterator<char>(fa)), {});
    const std::string sb((std::istreambuf_iterator<char>(fb)), {});
    EXPECT_EQ(sa, sb) << rel;
  }
}

TEST(Grid, KeepsFileOrder) {
  const auto doc = ordered_json::parse(R"({"z.b": [1, 2], "a.c": [3, 4, 5]})");
  const Grid g = ParseGrid(doc);
  ASSERT_EQ(g.axes.size(), 2u);
  EXPECT_EQ(g.axes[0].first, "z.b");
  EXPECT_EQ(g.axes[1].first, "a.c");
  EXPECT_EQ(g.cells(), 6u);
}

TEST(Grid, RejectsMalformed) {
  EXPECT_THROW(ParseGrid(ordered_json::parse("[]")), ConfigError);
  EXPECT_THROW(ParseGrid(ordered_json::parse(R"({"seed": 3})")), ConfigError);
  EXPECT_THROW(ParseGrid(ordered_json::parse(R"({"seed": []})")), ConfigError);
}

TEST(Sweep, SingleCellMatchesRun) {
  const json base = ReadJson("teleop_trace.json");
  const Grid grid = ParseGrid(ordered_json::parse(R"({"seed": [5]})"));
  const auto rows = ParseCsv(Sweep(base, grid));
  ASSERT_EQ(rows.size(), 2u);
  const Summary s = experiment::Run(scenario::ParseScenario(base));
  EXPECT_EQ(rows[0][0], "seed");
  EXPECT_EQ(rows[1][0], "5");
  EXPECT_EQ(std::stoi(rows[1][1]), static_cast<int>(s.runs.size()));
  EXPECT_EQ(std::stoi(rows[1][2]), s.successes);
  EXPECT_DOUBLE_EQ(std::stod(rows[1][7]), *s.max_stop_latency_ms);
}

TEST(Sweep, StopLatencyTracksLinkLatency) {
  const json base = ReadJson("teleop_trace.json");
  const Grid grid =
      ParseGrid(ordered_json::parse(R"({"link.cloud_edge.latency_ms": [0, 100, 200, 400]})"));
  const auto rows = ParseCsv(Sweep(base, grid));
  ASSERT_EQ(rows.size(), 5u);
  const scenario::Scenario s = scenario::ParseScenario(base);
  const double tick_ms = kEdgeTick / 1000.0;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const double link = std::stod(rows[r][0]) + s.rcu_delay / 1000.0;
    const double expected = (s.heartbeat.window + s.heartbeat.shape.fall) / 1000.0 + link;
    const double measured = std::stod(rows[r][7]);
    EXPECT_GE(measured, expected - tick_ms) << rows[r][0];
    EXPECT_LE(measured, expected + tick_ms) << rows[r][0];
  }
}

TEST(Sweep, ReproducibleAndOrdered) {
  const json base = ReadJson("auto_static.json");
  const Grid grid = ParseGrid(ordered_json::parse(
      R"({"link.cloud_edge.latency_ms": [0, 200], "link.cloud_edge.drop": [0.0, 0.3]})"));
  RunOptions o;
  o.repetitions = 2;
  const std::string a = Sweep(base, grid, o);
  EXPECT_EQ(a, Sweep(base, grid, o));
  const auto rows = ParseCsv(a);
  ASSERT_EQ(rows.size(), 5u);
  const double want[4][2] = {{0, 0.0}, {0, 0.3}, {200, 0.0}, {200, 0.3}};
  for (int r = 0; r < 4; ++r) {
    EXPECT_EQ(std::stod(rows[r + 1][0]), want[r][0]);
    EXPECT_EQ(std::stod(rows[r + 1][1]), want[r][1]);
  }
}

TEST(Sweep, SuccessNonIncreasingInDrop) {
  const json base = ReadJson("auto_static.json");
  const Grid grid = ParseGrid(
      ordered_json::parse(R"({"link.cloud_edge.drop": [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]})"));
  const auto rows = ParseCsv(Sweep(base, grid));
  ASSERT_EQ(rows.size(), 7u);
  for (std::size_t r = 2; r < rows.size(); ++r) {
    EXPECT_LE(std::stoi(rows[r][2]), std::stoi(rows[r - 1][2])) << rows[r][0];
  }
}

}  // namespace
}  // namespace fogservo::experiment
