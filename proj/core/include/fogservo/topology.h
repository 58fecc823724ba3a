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

#ifndef FOGSERVO_TOPOLOGY_H_
#define FOGSERVO_TOPOLOGY_H_

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "fogservo/netsim.h"
#include "fogservo/nodes.h"
#include "fogservo/scenario.h"

namespace fogservo::topology {

// Ground truth of the box: a static pose or a carrier path, possibly yanked
// away once a grasp starts. Safe to share between node threads.
class World {
 public:
  explicit World(scenario::TargetSpec spec);

  Eigen::Vector3d BoxAt(Micros t) const;
  vision::TagTarget TagAt(Micros t) const;
  void OnGraspStart(Micros t);
  void OnGraspClosed(Micros t, bool held);
  bool held() const;

 private:
  Eigen::Vector3d PathAt(Micros t) const;

  scenario::TargetSpec spec_;
  mutable std::mutex mu_;
  std::optional<Micros> grasp_started_;
  std::optional<Eigen::Vector3d> held_at_;
};

struct RunMetrics {
  int repetition = 0;
  std::uint64_t seed = 0;
  bool success = false;
  double duration_s = 0.0;
  std::optional<double> min_e_norm;
  bool fell = false;
  std::optional<double> stop_latency_ms;  // largest observed
  std::string final_phase;
};

struct RunLogs {
  std::vector<std::string> telemetry;
  std::vector<std::string> phases;
  std::vector<std::string> delivery;
};

// Start state for one repetition: placement sampled from the scenario ranges.
dynamics::RobotState PlaceRobot(const scenario::Scenario& s,
                                const dynamics::RobotModel& model, Rng& rng);

nodes::EdgeConfig MakeEdgeConfig(const scenario::Scenario& s);
nodes::CloudConfig MakeCloudConfig(const scenario::Scenario& s,
                                   std::uint64_t seed);

// Browser console command to packet payload. Throws InvalidParameter.
nodes::Payload ParseUiCommand(const nlohmann::json& cmd);

// Cloud, RCU and edge on one virtual clock, linked by seeded impaired links.
class VirtualTopology {
 public:
  VirtualTopology(const scenario::Scenario& s, std::uint64_t seed);
  ~VirtualTopology();
  VirtualTopology(const VirtualTopology&) = delete;
  VirtualTopology& operator=(const VirtualTopology&) = delete;

  // Runs to the scenario end (or shortly after the pickup settles).
  RunMetrics Run();
  void AdvanceTo(Micros t);
  bool Finished() const;
  Micros now() const { return clock_.now(); }

  RunMetrics Metrics() const;
  RunLogs Logs() const;
  // State frame for the browser console.
  nlohmann::json Snapshot() const;
  void Relay(const nodes::Payload& payload);

  const nodes::EdgeNode& edge() const { return *edge_; }
  const nodes::CloudNode& cloud() const { return *cloud_; }
  const nodes::RcuNode& rcu() const { return *rcu_; }
  const World& world() const { return world_; }
  const std::vector<std::unique_ptr<netsim::VirtualLink>>& links() const {
    return links_;
  }
  const scenario::Scenario& scenario() const { return scenario_; }

 private:
  class ClockExecutor;

  scenario::Scenario scenario_;
  std::uint64_t seed_;
  netsim::VirtualClock clock_;
  std::unique_ptr<ClockExecutor> executor_;
  World world_;
  std::vector<std::unique_ptr<netsim::VirtualLink>> links_;
  std::unique_ptr<nodes::CloudNode> cloud_;
  std::unique_ptr<nodes::RcuNode> rcu_;
  std::unique_ptr<nodes::EdgeNode> edge_;
  std::vector<std::string> telemetry_log_;
  std::vector<std::string> phase_log_;
  Micros end_ = 0;
  bool started_ = false;
};

// Same topology over loopback UDP with shaping proxies; every node runs on its
// own thread against the wall clock. Not reproducible.
RunMetrics RunLive(const scenario::Scenario& s, std::uint64_t seed,
                   RunLogs* logs = nullptr);

std::string DeliveryLine(const std::string& link,
                         const netsim::DeliveryRecord& r);

}  // namespace fogservo::topology

#endif  // FOGSERVO_TOPOLOGY_H_
