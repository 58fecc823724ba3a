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


// Acceptance suite. Prints one PASS or FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "fogservo/dynamics.h"
#include "fogservo/experiment.h"
#include "fogservo/heartbeat.h"
#include "fogservo/ibvs.h"
#include "fogservo/netsim.h"
#include "fogservo/packet.h"
#include "fogservo/scenario.h"
#include "oracles/oracles.h"

namespace fogservo::acceptance {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using WallClock = std::chrono::steady_clock;

const fs::path kConfigs = fs::path(FOGSERVO_SOURCE_DIR) / "configs";

struct Verdict {
  bool pass = false;
  std::string detail;
};

double WallSeconds(WallClock::time_point since) {
  return std::chrono::duration<double>(WallClock::now() - since).count();
}

std::string Format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

scenario::Scenario LoadWith(const std::string& name,
                            const std::vector<std::pair<std::string, json>>& edits) {
  std::ifstream in(kConfigs / name);
  json doc = json::parse(in);
  for (const auto& [path, value] : edits) scenario::SetDotted(doc, path, value);
  return scenario::ParseScenario(doc);
}

// From a 5 degree lean with no velocity command, the robot settles below
// 0.5 degrees within 3 s and survives 60 s of random arm displacements.
Verdict BalanceStability() {
  const dynamics::RobotModel model;
  constexpr int kTrials = 50;
  constexpr double kSettled = 0.5 * std::numbers::pi / 180.0;
  const auto start = WallClock::now();
  int falls = 0;
  int late = 0;
  double worst_settle = 0.0;
  for (int trial = 0; trial < kTrials; ++trial) {
    Rng rng(DeriveSeed(1000, trial));
    auto s = model.MakeState({0, 0}, 0, 0.65, 5.0 * std::numbers::pi / 180.0);
    const dynamics::LimbConfig rest = s.limbs;
    std::optional<Micros> settled_at;
    Micros next_push = FromSeconds(rng.Uniform(0.5, 2.0));
    for (Micros t = 0; t < 60 * kMicrosPerSecond; t += kEdgeTick) {
      if (!settled_at && std::abs(s.lean_angle) < kSettled) settled_at = t;
      if (t >= next_push) {
        dynamics::LimbConfig limbs = rest;
        for (auto& arm : limbs.arm_com) {
          const double r = rng.Uniform(0.0, 0.1);
          const double a = rng.Uniform(0.0, 2.0 * std::numbers::pi);
          arm += r * Eigen::Vector2d(std::cos(a), std::sin(a));
        }
        s = model.SetLimbs(s, limbs, false);
        next_push = t + FromSeconds(rng.Uniform(0.5, 2.0));
      }
      s = model.Step(s, model.BalanceCommand(s, 0.0));
      if (s.fallen) break;
    }
    if (s.fallen) ++falls;
    const double settle = settled_at ? ToSeconds(*settled_at) : 1e9;
    if (settle > 3.0) ++late;
    worst_settle = std::max(worst_settle, settle);
  }
  const double wall = WallSeconds(start);
  return {falls == 0 && late == 0 && wall < 10.0,
          Format("%d trials x 60 s, %d falls, %d settled late, worst settle "
                 "%.3f s, wall %.2f s",
                 kTrials, falls, late, worst_settle, wall)};
}

// Central differences of the projection under camera twists against the
// closed-form interaction matrix.
Verdict InteractionMatrixFidelity() {
  const auto start = WallClock::now();
  Rng rng(2000);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    vision::CameraPose pose;
    const Eigen::Vector3d axis =
        Eigen::Vector3d(rng.Normal(), rng.Normal(), rng.Normal()).normalized();
    pose.rotation = Eigen::AngleAxisd(rng.Uniform(-3, 3), axis).toRotationMatrix();
    pose.position = Eigen::Vector3d(rng.Uniform(-5, 5), rng.Uniform(-5, 5),
                                    rng.Uniform(-5, 5));
    const double x = rng.Uniform(-0.6, 0.6);
    const double y = rng.Uniform(-0.5, 0.5);
    const double z = rng.Uniform(0.3, 6.0);
    const Eigen::Vector3d world = pose.rotation * Eigen::Vector3d(x * z, y * z, z) +
                                  pose.position;
    const auto fd = oracle::FiniteDifferenceInteraction(pose, world, 1e-6);
    const auto l = ibvs::PointInteractionMatrix(x, y, z);
    worst = std::max(worst, (fd - l).norm() / l.norm());
  }
  const double wall = WallSeconds(start);
  return {worst < 1e-4 && wall < 5.0,
          Format("1000 samples, worst relative error %.2e, wall %.3f s", worst,
                 wall)};
}

Verdict PseudoInverseConditions() {
  Rng rng(3000);
  double worst = 0.0;
  int rank_two = 0;
  for (int i = 0; i < 100; ++i) {
    ibvs::InteractionMatrix l;
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 6; ++c) l(r, c) = rng.Uniform(-2, 2);
    }
    if (Eigen::FullPivLU<Eigen::MatrixXd>(l).rank() == 2) ++rank_two;
    const ibvs::PseudoInverseMatrix p = ibvs::PseudoInverse(l);
    const auto lp = l * p;
    const auto pl = p * l;
    const auto oracle = oracle::SvdPseudoInverse<2, 6>(l);
    for (double err : {(l * p * l - l).cwiseAbs().maxCoeff(),
                       (p * l * p - p).cwiseAbs().maxCoeff(),
                       (lp - lp.transpose()).cwiseAbs().maxCoeff(),
                       (pl - pl.transpose()).cwiseAbs().maxCoeff(),
                       (p - oracle).cwiseAbs().maxCoeff()}) {
      worst = std::max(worst, err);
    }
  }
  return {worst < 1e-10 && rank_two == 100,
          Format("100 rank-2 matrices (%d verified), worst deviation %.2e",
                 rank_two, worst)};
}

// Random press/release traces streamed over a lossy, jittery link into a
// heartbeat channel sampled at the edge tick.
Verdict HeartbeatTiming() {
  constexpr Micros kWindow = heartbeat::kDefaultWindow;
  const heartbeat::RampShape shape{};
  constexpr double kJitterMs = 50.0;
  // Uniform jitter of +-50 ms spreads one-way delays over 100 ms.
  constexpr Micros kJitterSpread = static_cast<Micros>(2 * kJitterMs) * kMicrosPerMilli;
  constexpr Micros kMaxSendGap = kWindow - kJitterSpread;

  int flickers = 0;
  int overruns = 0;
  std::uint64_t spans_checked = 0;
  std::uint64_t presses = 0;
  double worst_margin_ms = -1e9;  // measured stop minus bound, largest
  double worst_stop_ms = 0.0;
  for (int trace = 0; trace < 1000; ++trace) {
    Rng rng(DeriveSeed(4000, trace));
    netsim::LinkProfile profile;
    profile.latency_ms = rng.Uniform(0.0, 200.0);
    profile.jitter_ms = kJitterMs;
    profile.drop = 0.3;
    profile.seed = DeriveSeed(4001, trace);
    const Micros max_delay =
        static_cast<Micros>(std::ceil((profile.latency_ms + kJitterMs) * 1000.0));
    const Micros bound = heartbeat::StopLatencyBound(kWindow, shape) + max_delay + kEdgeTick;

    netsim::VirtualClock clock;
    heartbeat::HeartbeatChannel channel(heartbeat::CommandType::kForward, kWindow, shape);
    struct Arrival {
      Micros at;
      Micros sent;
    };
    std::vector<Arrival> arrivals;
    netsim::VirtualLink link("cloud_edge", clock, profile,
                             [&](std::span<const std::uint8_t> bytes, Micros now) {
                               const auto p = nodes::Decode(bytes);
                               const auto& v = std::get<nodes::VelocityCmd>(p.payload);
                               channel.Ingest({p.seq, v.forward}, now);
                               arrivals.push_back({now, static_cast<Micros>(p.send_ts)});
                             });

    // Presses separated by idle gaps longer than any stop bound.
    std::vector<Micros> releases;
    std::uint32_t seq = 0;
    Micros t = FromSeconds(rng.Uniform(0.0, 0.5));
    const int n_presses = 1 + static_cast<int>(rng.Uniform(0, 4));
    for (int k = 0; k < n_presses; ++k) {
      const Micros end = t + FromSeconds(rng.Uniform(0.05, 3.0));
      Micros last = t;
      for (Micros send = t; send <= end;
           send += FromSeconds(rng.Uniform(0.005, ToSeconds(kMaxSendGap) - 1e-3))) {
        nodes::Packet p;
        p.seq = seq++;
        p.send_ts = static_cast<std::uint64_t>(send);
        p.payload = nodes::VelocityCmd{0.5f, 0.0f};
        clock.Schedule(send, [&link, bytes = nodes::Encode(p), send] {
          link.Send(bytes, send);
        });
        last = send;
      }
      releases.push_back(last);
      t = last + FromSeconds(rng.Uniform(0.8, 2.0));
    }
    presses += releases.size();

    struct Tick {
      Micros t;
      bool active;
      double value;
    };
    std::vector<Tick> ticks;
    for (Micros now = 0; now <= t + kMicrosPerSecond; now += kEdgeTick) {
      clock.RunUntil(now);
      const double value = channel.Sample(now);
      ticks.push_back({now, channel.Active(now), value});
    }

    // No flicker: between consecutive arrivals sent less than the window
    // minus the jitter spread apart, the output stays active and never
    // decreases.
    for (std::size_t i = 1; i < arrivals.size(); ++i) {
      const auto& a = arrivals[i - 1];
      const auto& b = arrivals[i];
      if (b.sent - a.sent >= kMaxSendGap) continue;
      ++spans_checked;
      double prev = -1.0;
      for (const Tick& tk : ticks) {
        if (tk.t < a.at || tk.t > b.at) continue;
        if (!tk.active || tk.value < prev) {
          ++flickers;
          break;
        }
        prev = tk.value;
      }
    }

    // Stop time: release to the first edge tick with zero output.
    for (Micros release : releases) {
      const auto it = std::find_if(ticks.begin(), ticks.end(), [&](const Tick& tk) {
        return tk.t >= release && tk.value == 0.0;
      });
      const Micros stop = it == ticks.end() ? Micros{1} << 40 : it->t - release;
      worst_stop_ms = std::max(worst_stop_ms, ToSeconds(stop) * 1e3);
      worst_margin_ms = std::max(worst_margin_ms, ToSeconds(stop - bound) * 1e3);
      if (stop > bound) ++overruns;
    }
  }
  return {flickers == 0 && overruns == 0,
          Format("1000 traces, %llu presses, %llu spans, %d flickers, %d stop "
                 "overruns, worst stop %.1f ms, closest to bound %.1f ms",
                 static_cast<unsigned long long>(presses),
                 static_cast<unsigned long long>(spans_checked), flickers, overruns,
                 worst_stop_ms, worst_margin_ms)};
}

Verdict AutoPickupStatic() {
  const auto ideal = experiment::Run(LoadWith("auto_static.json", {}));
  const auto lossy = experiment::Run(LoadWith(
      "auto_static.json",
      {{"link.cloud_edge.latency_ms", 200}, {"link.cloud_edge.drop", 0.3}}));
  const int n_ideal = static_cast<int>(ideal.runs.size());
  const int n_lossy = static_cast<int>(lossy.runs.size());
  return {n_ideal == 10 && ideal.successes == 10 && n_lossy == 10 &&
              lossy.successes >= 9,
          Format("ideal link %d/%d, 200 ms + 30%% drop %d/%d", ideal.successes,
                 n_ideal, lossy.successes, n_lossy)};
}

Verdict MovingCarrierAndYank() {
  const auto carrier = experiment::Run(LoadWith("moving_carrier.json", {}));
  const auto yank = experiment::Run(LoadWith("yank.json", {}));
  int detected = 0;
  for (const auto& m : yank.runs) {
    if (!m.success && m.final_phase == "done" && !m.fell) ++detected;
  }
  const int n_carrier = static_cast<int>(carrier.runs.size());
  const int n_yank = static_cast<int>(yank.runs.size());
  return {n_carrier == 10 && carrier.successes >= 9 && carrier.falls == 0 &&
              n_yank > 0 && detected == n_yank,
          Format("carrier %d/%d, yank done-with-failure and balanced %d/%d",
                 carrier.successes, n_carrier, detected, n_yank)};
}

nodes::Packet RandomPacket(Rng& rng) {
  auto f = [&rng] { return static_cast<float>(rng.Uniform(-1e3, 1e3)); };
  auto flag = [&rng] { return rng.Uniform() < 0.5; };
  nodes::Packet p;
  p.seq = static_cast<std::uint32_t>(rng.Uniform(0, 4294967295.0));
  p.send_ts = static_cast<std::uint64_t>(rng.Uniform(0, 1.8e19));
  switch (static_cast<int>(rng.Uniform(0, 6))) {
    case 0: p.payload = nodes::VelocityCmd{f(), f()}; break;
    case 1: p.payload = nodes::HeightCmd{f()}; break;
    case 2: p.payload = nodes::GraspCmd{}; break;
    case 3:
      p.payload = nodes::TagObservationMsg{flag(), f(), f(), f(),
                                           static_cast<std::uint64_t>(rng.Uniform(0, 1e15))};
      break;
    case 4:
      p.payload = nodes::ModeCmd{flag() ? nodes::Mode::kAuto : nodes::Mode::kTeleop};
      break;
    default: {
      nodes::TelemetryMsg t{f(), f(), f(), f(), f(), f(), f(), f(), flag(), flag(),
                            static_cast<std::uint8_t>(rng.Uniform(0, 3)),
                            flag() ? nodes::Mode::kAuto : nodes::Mode::kTeleop};
      p.payload = t;
    }
  }
  return p;
}

// Decoding must either succeed or throw DecodeError.
bool DecodesCleanly(std::span<const std::uint8_t> bytes) {
  try {
    nodes::Decode(bytes);
  } catch (const nodes::DecodeError&) {
  } catch (...) {
    return false;
  }
  return true;
}

Verdict WireFormat() {
  nodes::Packet example;
  example.seq = 7;
  example.send_ts = 0x0102030405060708ULL;
  example.payload = nodes::VelocityCmd{0.5f, 0.0f};
  const std::vector<std::uint8_t> layout = {
      0x46, 0x52, 0x01, 0x01, 0x00, 0x00, 0x00, 0x07, 0x01, 0x02, 0x03, 0x04,
      0x05, 0x06, 0x07, 0x08, 0x00, 0x08, 0x3F, 0x00, 0x00, 0x00, 0x00, 0x00,
      0x00, 0x00};
  const bool layout_ok = nodes::Encode(example) == layout;

  Rng rng(5000);
  int mismatches = 0;
  int escapes = 0;
  std::uint64_t truncations = 0;
  for (int i = 0; i < 100'000; ++i) {
    const nodes::Packet p = RandomPacket(rng);
    const auto bytes = nodes::Encode(p);
    if (!(nodes::Decode(bytes) == p)) ++mismatches;
    if (i % 10 == 0) {
      for (std::size_t n = 0; n < bytes.size(); ++n) {
        ++truncations;
        bool threw = false;
        try {
          nodes::Decode(std::span(bytes).first(n));
        } catch (const nodes::DecodeError&) {
          threw = true;
        } catch (...) {
        }
        if (!threw) ++escapes;
      }
      auto mutated = bytes;
      mutated[static_cast<std::size_t>(rng.Uniform(0, mutated.size()))] ^=
          static_cast<std::uint8_t>(1 + rng.Uniform(0, 255));
      if (!DecodesCleanly(mutated)) ++escapes;
      std::vector<std::uint8_t> noise(static_cast<std::size_t>(rng.Uniform(0, 64)));
      for (auto& b : noise) b = static_cast<std::uint8_t>(rng.Uniform(0, 256));
      if (!DecodesCleanly(noise)) ++escapes;
    }
  }
  return {layout_ok && mismatches == 0 && escapes == 0,
          Format("layout %s, 100000 roundtrips with %d mismatches, %llu "
                 "truncations and fuzz with %d bad outcomes",
                 layout_ok ? "exact" : "WRONG", mismatches,
                 static_cast<unsigned long long>(truncations), escapes)};
}

std::vector<std::pair<std::string, std::string>> ReadTree(const fs::path& root) {
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    files.emplace_back(fs::relative(e.path(), root).string(),
                       std::string(std::istreambuf_iterator<char>(in), {}));
  }
  std::sort(files.begin(), files.end());
  return files;
}

Verdict Determinism() {
  const fs::path root = fs::temp_directory_path() / "fogservo_acceptance_logs";
  int scenarios = 0;
  int identical = 0;
  std::size_t files = 0;
  std::vector<fs::path> configs;
  for (const auto& e : fs::directory_iterator(kConfigs)) {
    if (e.path().extension() == ".json" && e.path().stem() != "stop_latency_grid") {
      configs.push_back(e.path());
    }
  }
  std::sort(configs.begin(), configs.end());
  for (const auto& cfg : configs) {
    const auto s = scenario::LoadScenario(cfg.string());
    ++scenarios;
    std::vector<std::vector<std::pair<std::string, std::string>>> trees;
    // Two sequential runs and one parallel run of the same seed.
    for (int workers : {1, 1, 4}) {
      const fs::path dir = root / (s.name + "_" + std::to_string(trees.size()));
      fs::remove_all(dir);
      experiment::RunOptions options;
      options.out_dir = dir;
      options.workers = workers;
      experiment::Run(s, options);
      trees.push_back(ReadTree(dir));
    }
    if (!trees[0].empty() && trees[0] == trees[1] && trees[0] == trees[2]) ++identical;
    files += trees[0].size();
  }
  fs::remove_all(root);
  return {scenarios > 0 && identical == scenarios,
          Format("%d/%d scenarios byte-identical across repeated and parallel "
                 "runs (%zu files each)",
                 identical, scenarios, files)};
}

}  // namespace
}  // namespace fogservo::acceptance

int main() {
  using namespace fogservo::acceptance;
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"balance_stability", BalanceStability},
      {"interaction_matrix_fidelity", InteractionMatrixFidelity},
      {"pseudo_inverse", PseudoInverseConditions},
      {"heartbeat_timing", HeartbeatTiming},
      {"auto_pickup_static", AutoPickupStatic},
      {"moving_carrier_and_yank", MovingCarrierAndYank},
      {"wire_format", WireFormat},
      {"determinism", Determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %-28s %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
    std::fflush(stdout);
    if (!v.pass) ++failed;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
