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

#ifndef FOGSERVO_SCENARIO_H_
#define FOGSERVO_SCENARIO_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "fogservo/common.h"
#include "fogservo/dynamics.h"
#include "fogservo/netsim.h"
#include "fogservo/nodes.h"
#include "fogservo/pickup.h"
#include "fogservo/vision.h"

namespace fogservo::scenario {

enum class RunMode { kTeleop, kAuto, kTeleopThenAuto };

// Robot start relative to the tag: `distance` metres from the tag along a
// direction `bearing` off its normal, facing the tag.
struct Placement {
  double distance = 2.0;
  double bearing_min = 0.0;  // rad
  double bearing_max = 0.0;  // rad
  double heading_jitter = 0.0;  // rad, uniform half-width
  double height = 0.65;
  double lean = 0.0;
};

// Box is yanked away a fixed delay after the grasp starts.
struct Yank {
  Micros delay = 300'000;
  Micros duration = 300'000;
  Eigen::Vector3d offset = Eigen::Vector3d(0.3, 0.0, 0.0);
};

struct TargetSpec {
  vision::TagTarget tag;
  // Carrier path; empty for a static box. The first waypoint replaces the
  // tag position.
  std::vector<Eigen::Vector3d> waypoints;
  double speed = 0.2;  // m/s along the path
  Micros start = 0;    // path start time
  std::optional<Yank> yank;
};

struct HeartbeatSettings {
  Micros window = 250'000;
  heartbeat::RampShape shape;
  bool adaptive = false;
  Micros adaptive_min = 100'000;
  Micros adaptive_max = 500'000;
};

struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  Micros duration = 30'000'000;
  int repetitions = 1;
  RunMode mode = RunMode::kAuto;
  // Stop the run this long after the pickup finishes; unset runs to the end.
  std::optional<Micros> linger_after_finish = 1'000'000;

  netsim::LinkProfile cloud_edge;
  netsim::LinkProfile rcu_edge;
  Micros rcu_delay = 2'000;
  HeartbeatSettings heartbeat;

  dynamics::BodyParams body;
  dynamics::ControllerGains gains;
  Placement placement;
  double max_forward = 1.0;
  double max_yaw_rate = 1.5;
  double max_height_rate = 0.2;
  Micros telemetry_period = 50'000;

  vision::CameraModel camera;
  vision::VisibilityLimits limits;
  double recognition_rate_hz = 5.0;
  double pixel_noise = 0.5;

  ibvs::PickupConfig pickup;
  std::optional<Micros> engage_at;
  ibvs::GraspScript script;
  ibvs::GraspEnvelope envelope;  // tolerances; centre follows the target size

  Micros publish_period = 50'000;
  std::vector<nodes::TeleopStep> trace;
  TargetSpec target;

  nlohmann::json raw;  // document the scenario was parsed from
};

// Strict schema: unknown keys and out-of-range values throw ConfigError with
// the dotted path of the offending field.
Scenario ParseScenario(const nlohmann::json& doc);
Scenario LoadScenario(const std::string& path);

// Sets `doc[a][b]...` for path "a.b..."; intermediate objects are created.
void SetDotted(nlohmann::json& doc, const std::string& path,
               const nlohmann::json& value);

}  // namespace fogservo::scenario

#endif  // FOGSERVO_SCENARIO_H_
