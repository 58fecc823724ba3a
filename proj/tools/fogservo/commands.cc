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


#include "fogservo/commands.h"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "fogservo/log_schema.h"
#include "fogservo/scenario.h"
#include "fogservo/topology.h"
#include "fogservo/ws_bridge.h"

namespace fogservo::cli {
namespace {

using Clock = std::chrono::steady_clock;

template <typename Json>
Json ReadJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open file");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path, e.what());
  }
}

// Maps exceptions to exit codes so every subcommand reports errors alike.
template <typename F>
int Guarded(const char* command, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    spdlog::error("{}: {}", command, e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    spdlog::error("{}: {}", command, e.what());
    return kExitFailure;
  }
}

}  // namespace

void ConfigureLogging() {
  const char* env = std::getenv("FOGSERVO_LOG_LEVEL");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
}

int RunCommand(const RunArgs& args, std::ostream& out) {
  return Guarded("run", [&] {
    const auto s = scenario::LoadScenario(args.config);
    spdlog::info("run {}: {} repetition(s){}", s.name,
                 args.options.repetitions.value_or(s.repetitions),
                 args.options.live ? " over loopback UDP" : "");
    const auto summary = experiment::Run(s, args.options);
    for (const auto& m : summary.runs) {
      spdlog::debug("rep {}: success={} phase={}", m.repetition, m.success,
                    m.final_phase);
    }
    out << experiment::ToJson(summary).dump(2) << '\n';
    return kExitOk;
  });
}

int SweepCommand(const SweepArgs& args, std::ostream& out) {
  return Guarded("sweep", [&] {
    const auto base = ReadJson<nlohmann::json>(args.config);
    const auto grid = experiment::ParseGrid(ReadJson<nlohmann::ordered_json>(args.grid));
    spdlog::info("sweep: {} cell(s)", grid.cells());
    experiment::RunOptions options;
    options.seed = args.seed;
    options.out_dir = args.out_dir;
    options.workers = args.workers;
    out << experiment::Sweep(base, grid, options);
    return kExitOk;
  });
}

int ServeCommand(const ServeArgs& args, std::ostream& out) {
  return Guarded("serve", [&] {
    if (!(args.speed > 0.0)) throw ConfigError("--speed", "must be positive");
    const auto s = scenario::LoadScenario(args.config);
    topology::VirtualTopology topo(s, args.seed.value_or(s.seed));

    // Commands arrive on the bridge thread; the clock loop applies them.
    std::mutex mu;
    std::deque<nodes::Payload> inbox;
    bridge::WsBridge ws(
        args.ws_port,
        [&](const nlohmann::json& cmd) {
          auto payload = topology::ParseUiCommand(cmd);
          std::lock_guard lock(mu);
          inbox.push_back(std::move(payload));
        },
        args.static_dir);
    spdlog::info("serve {}: ws://127.0.0.1:{}/", s.name, ws.port());
    if (args.on_listening) args.on_listening(ws.port());

    const auto start = Clock::now();
    auto next_frame = start;
    while (!(args.stop && args.stop->load())) {
      const auto wall = Clock::now();
      {
        std::lock_guard lock(mu);
        while (!inbox.empty()) {
          topo.Relay(inbox.front());
          inbox.pop_front();
        }
      }
      const double elapsed =
          std::chrono::duration<double>(wall - start).count() * args.speed;
      topo.AdvanceTo(FromSeconds(elapsed));
      if (wall >= next_frame) {
        ws.Publish(topo.Snapshot().dump());
        next_frame += std::chrono::microseconds(args.frame_period);
        if (next_frame < wall) next_frame = wall;
      }
      if (topo.Finished()) break;
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    ws.Publish(topo.Snapshot().dump());
    out << experiment::ToJson(topo.Metrics()).dump() << '\n';
    return kExitOk;
  });
}

int ValidateCommand(const std::vector<std::string>& paths, std::ostream& out) {
  return Guarded("validate", [&] {
    std::vector<std::filesystem::path> files;
    for (const auto& p : paths) {
      if (std::filesystem::is_directory(p)) {
        for (const auto& e : std::filesystem::recursive_directory_iterator(p)) {
          if (e.is_regular_file() && e.path().extension() == ".jsonl") {
            files.push_back(e.path());
          }
        }
      } else {
        files.emplace_back(p);
      }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ConfigError("validate", "no .jsonl files found");
    bool ok = true;
    for (const auto& f : files) {
      const auto kind = logs::KindFromPath(f);
      if (!kind) {
        out << f.string() << ": unknown log kind\n";
        ok = false;
        continue;
      }
      const auto report = logs::ValidateFile(f, *kind);
      out << f.string() << ": " << report.lines << " line(s), "
          << (report.ok() ? "ok" : "invalid") << '\n';
      for (const auto& e : report.errors) out << "  " << e << '\n';
      ok = ok && report.ok();
    }
    return ok ? kExitOk : kExitFailure;
  });
}

}  // namespace fogservo::cli
