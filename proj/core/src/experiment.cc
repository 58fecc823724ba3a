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

#include "fogservo/experiment.h"

#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace fogservo::experiment {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string Number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string CsvCell(const json& v) {
  if (v.is_number()) return Number(v.get<double>());
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n") != std::string::npos) {
    std::string quoted = "\"";
    for (char c : s) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
    return quoted + "\"";
  }
  return s;
}

void WriteLines(const std::filesystem::path& path,
                const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

}  // namespace

std::uint64_t RepetitionSeed(std::uint64_t seed, int repetition) {
  return DeriveSeed(seed, 1000 + static_cast<std::uint64_t>(repetition));
}

void WriteLogs(const std::filesystem::path& dir, const topology::RunLogs& logs) {
  std::filesystem::create_directories(dir);
  WriteLines(dir / "telemetry.jsonl", logs.telemetry);
  WriteLines(dir / "phases.jsonl", logs.phases);
  WriteLines(dir / "delivery.jsonl", logs.delivery);
}

Summary Run(const scenario::Scenario& s, const RunOptions& options) {
  const std::uint64_t seed = options.seed.value_or(s.seed);
  const int reps = options.repetitions.value_or(s.repetitions);
  if (reps < 1) throw InvalidParameter("need at least one repetition");

  Summary summary;
  summary.name = s.name;
  summary.runs.resize(static_cast<std::size_t>(reps));
  std::atomic<int> next{0};
  std::mutex error_mu;
  std::exception_ptr error;

  auto worker = [&] {
    for (int i = next++; i < reps; i = next++) {
      try {
        const std::uint64_t rep_seed = RepetitionSeed(seed, i);
        topology::RunLogs logs;
        topology::RunMetrics m;
        if (options.live) {
          m = topology::RunLive(s, rep_seed, &logs);
        } else {
          topology::VirtualTopology topo(s, rep_seed);
          m = topo.Run();
          logs = topo.Logs();
        }
        m.repetition = i;
        if (options.out_dir) {
          char name[32];
          std::snprintf(name, sizeof(name), "rep_%03d", i);
          WriteLogs(*options.out_dir / name, logs);
        }
        summary.runs[static_cast<std::size_t>(i)] = m;
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  // Live runs share the wall clock; keep them sequential.
  const int workers = options.live ? 1 : std::clamp(options.workers, 1, reps);
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  double duration_sum = 0.0;
  double stop_sum = 0.0;
  int stop_count = 0;
  for (const auto& m : summary.runs) {
    summary.successes += m.success ? 1 : 0;
    summary.falls += m.fell ? 1 : 0;
    duration_sum += m.duration_s;
    if (m.stop_latency_ms) {
      stop_sum += *m.stop_latency_ms;
      ++stop_count;
      summary.max_stop_latency_ms =
          std::max(summary.max_stop_latency_ms.value_or(0.0), *m.stop_latency_ms);
    }
  }
  summary.success_rate = static_cast<double>(summary.successes) / reps;
  summary.mean_duration_s = duration_sum / reps;
  if (stop_count > 0) summary.mean_stop_latency_ms = stop_sum / stop_count;

  if (options.out_dir) {
    std::filesystem::create_directories(*options.out_dir);
    std::ofstream out(*options.out_dir / "summary.json", std::ios::binary);
    out << ToJson(summary).dump(2) << '\n';
  }
  return summary;
}

ordered_json ToJson(const topology::RunMetrics& m) {
  ordered_json j;
  j["repetition"] = m.repetition;
  j["seed"] = m.seed;
  j["success"] = m.success;
  j["duration_s"] = m.duration_s;
  j["min_e_norm"] = m.min_e_norm ? json(*m.min_e_norm) : json(nullptr);
  j["fell"] = m.fell;
  j["stop_latency_ms"] =
      m.stop_latency_ms ? json(*m.stop_latency_ms) : json(nullptr);
  j["final_phase"] = m.final_phase;
  return j;
}

ordered_json ToJson(const Summary& s) {
  ordered_json j;
  j["name"] = s.name;
  j["repetitions"] = s.runs.size();
  j["successes"] = s.successes;
  j["success_rate"] = s.success_rate;
  j["falls"] = s.falls;
  j["mean_duration_s"] = s.mean_duration_s;
  j["mean_stop_latency_ms"] =
      s.mean_stop_latency_ms ? json(*s.mean_stop_latency_ms) : json(nullptr);
  j["max_stop_latency_ms"] =
      s.max_stop_latency_ms ? json(*s.max_stop_latency_ms) : json(nullptr);
  ordered_json runs = ordered_json::array();
  for (const auto& m : s.runs) runs.push_back(ToJson(m));
  j["runs"] = runs;
  return j;
}

std::size_t Grid::cells() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.second.size();
  return axes.empty() ? 0 : n;
}

Grid ParseGrid(const nlohmann::ordered_json& doc) {
  if (!doc.is_object() || doc.empty()) {
    throw ConfigError("<grid>", "expected a non-empty object of parameter lists");
  }
  Grid g;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!it.value().is_array() || it.value().empty()) {
      throw ConfigError(it.key(), "expected a non-empty array of values");
    }
    g.axes.emplace_back(it.key(), std::vector<json>(it.value().begin(),
                                                    it.value().end()));
  }
  return g;
}

std::string Sweep(const json& base, const Grid& grid,
                  const RunOptions& options) {
  std::ostringstream csv;
  for (const auto& a : grid.axes) csv << a.first << ',';
  csv << "repetitions,successes,success_rate,falls,mean_duration_s,"
         "mean_stop_latency_ms,max_stop_latency_ms\n";
  const std::size_t cells = grid.cells();
  for (std::size_t cell = 0; cell < cells; ++cell) {
    json doc = base;
    std::vector<const json*> values(grid.axes.size());
    std::size_t rest = cell;
    for (std::size_t a = grid.axes.size(); a-- > 0;) {
      const auto& axis = grid.axes[a];
      values[a] = &axis.second[rest % axis.second.size()];
      rest /= axis.second.size();
    }
    for (std::size_t a = 0; a < grid.axes.size(); ++a) {
      scenario::SetDotted(doc, grid.axes[a].first, *values[a]);
    }
    RunOptions cell_options = options;
    if (options.out_dir) {
      cell_options.out_dir = *options.out_dir / ("cell_" + std::to_string(cell));
    }
    const Summary s = Run(scenario::ParseScenario(doc), cell_options);
    for (const json* v : values) csv << CsvCell(*v) << ',';
    csv << s.runs.size() << ',' << s.successes << ',' << Number(s.success_rate)
        << ',' << s.falls << ',' << Number(s.mean_duration_s) << ','
        << (s.mean_stop_latency_ms ? Number(*s.mean_stop_latency_ms) : "") << ','
        << (s.max_stop_latency_ms ? Number(*s.max_stop_latency_ms) : "") << '\n';
  }
  return csv.str();
}

}  // namespace fogservo::experiment
