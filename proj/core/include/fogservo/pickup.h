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

#ifndef FOGSERVO_PICKUP_H_
#define FOGSERVO_PICKUP_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "fogservo/common.h"
#include "fogservo/dynamics.h"
#include "fogservo/ibvs.h"
#include "fogservo/vision.h"

namespace fogservo::ibvs {

// Region, relative to the camera pose at the moment the grasp commits, where
// the hard-coded grasp closes on the box. The base motion the script induces
// is part of the script. Horizontal distances are measured along the robot
// heading.
struct GraspEnvelope {
  double standoff = 0.5;        // m, camera to box centre, horizontal
  double height_offset = -0.08; // m, box centre minus camera height
  double position_tolerance = 0.05;
  double bearing_tolerance = 10.0 * 3.14159265358979323846 / 180.0;

  // Envelope around the point `depth` metres along the optical axis of a
  // camera whose body is pitched by `body_pitch`.
  static GraspEnvelope CenteredOn(const vision::CameraModel& camera,
                                  double depth, double body_pitch);

  bool Contains(const Eigen::Vector3d& camera_position, double heading,
                const Eigen::Vector3d& box) const;
};

// Pre-defined dual-arm grasp motion: reach, close, lift.
struct GraspScript {
  Micros duration = 2'500'000;
  Eigen::Vector2d rest = Eigen::Vector2d(0.08, 0.12);
  Eigen::Vector2d reach = Eigen::Vector2d(0.35, 0.02);
  Eigen::Vector2d lift = Eigen::Vector2d(0.30, 0.15);

  // Arm CoM (both arms) at `elapsed` into the script, hip frame.
  Eigen::Vector2d ArmComAt(Micros elapsed) const;
  bool Finished(Micros elapsed) const { return elapsed >= duration; }
  // The hands close while holding the reach pose.
  Micros CloseAt() const { return duration * 55 / 100; }
};

enum class Phase : std::uint8_t {
  kNavigate,
  kHeightAdjust,
  kGrasp,
  kDone,
  kAborted,
};
std::string_view Name(Phase phase);

enum class GraspStatus : std::uint8_t {
  kIdle = 0,
  kRunning = 1,
  kSucceeded = 2,
  kFailed = 3,
};

enum class DepthSource { kMeasured, kDesired };

struct PickupConfig {
  double target_size_px = 100.0;
  double center_tolerance_px = 5.0;
  double size_tolerance_px = 3.0;
  Micros settle_time = 600'000;
  Micros lost_hold = 2'000'000;
  Micros abort_after = 10'000'000;
  // Observations older than this (capture to now) count as lost.
  Micros max_observation_age = 1'000'000;
  double lambda = 0.8;       // 1/s
  double depth_gain = 0.8;   // (m/s) per m of depth error
  DepthSource depth_source = DepthSource::kMeasured;
  double side_world = 0.10;
  ActuatorLimits limits;
};

struct PhaseEvent {
  Micros t = 0;
  Phase phase = Phase::kNavigate;
  double e_norm = 0.0;
  double depth = 0.0;
  std::optional<bool> success;  // set on kDone
};

// Three-phase automatic pickup: drive until the tag sits on the vertical
// centre line at the target size, adjust height until it is centred, then
// fire the grasp script and wait for its result.
class PickupController {
 public:
  struct Command {
    std::optional<RobotEffort> velocity;  // stream while set
    bool grasp_trigger = false;
  };

  PickupController(PickupConfig config, vision::CameraModel camera);

  void Engage(Micros now);
  bool engaged() const { return engaged_; }

  // Called once per recognised frame.
  Command Update(const vision::TagObservation& obs, Micros now);
  void OnGraspStatus(GraspStatus status, Micros now);

  Phase phase() const { return phase_; }
  bool finished() const {
    return phase_ == Phase::kDone || phase_ == Phase::kAborted;
  }
  std::optional<bool> success() const { return success_; }
  const std::optional<RobotEffort>& current() const { return current_; }
  const std::vector<PhaseEvent>& events() const { return events_; }
  std::optional<double> min_error_norm() const { return min_e_norm_; }
  std::optional<Micros> engaged_at() const { return engaged_at_; }
  std::optional<Micros> finished_at() const { return finished_at_; }
  double last_error_norm() const { return last_e_norm_; }
  double desired_depth() const;
  const PickupConfig& config() const { return config_; }

 private:
  void Transition(Phase next, Micros now, std::optional<bool> success = {});
  Command Servo(const vision::TagObservation& obs, Micros now);

  PickupConfig config_;
  vision::CameraModel camera_;
  bool engaged_ = false;
  Phase phase_ = Phase::kNavigate;
  std::optional<bool> success_;
  std::optional<RobotEffort> current_;
  std::optional<Micros> engaged_at_;
  std::optional<Micros> finished_at_;
  std::optional<Micros> settled_since_;
  // Time of the last fresh observation, or of engagement before the first.
  Micros last_fresh_ = 0;
  GraspStatus grasp_status_ = GraspStatus::kIdle;
  std::vector<PhaseEvent> events_;
  std::optional<double> min_e_norm_;
  double last_e_norm_ = 0.0;
  double last_depth_ = 0.0;
};

struct CalibrationTrial {
  bool success = false;
  double side_px = 0.0;
};

struct CalibrationResult {
  double standoff = 0.0;
  double target_size_px = 0.0;
  std::vector<double> success_rate;  // per candidate
};

// Runs `trials` grasps per candidate standoff and returns the pixel size seen
// at the standoff with the highest success rate (ties go to the nearer
// standoff). Throws Error when no candidate ever succeeds.
CalibrationResult CalibrateTargetSize(
    std::span<const double> standoffs, int trials,
    const std::function<CalibrationTrial(double standoff, int trial)>& run);

// Grasp trial in simulation: a balancing robot placed `standoff` metres
// (camera to tag, horizontal) in front of the tag runs the grasp script.
// Placement is perturbed by up to `placement_noise` metres.
struct SimulatedGraspBench {
  dynamics::RobotModel model;
  vision::CameraModel camera;
  vision::TagTarget target;
  GraspScript script;
  GraspEnvelope envelope;
  double placement_noise = 0.01;
  std::uint64_t seed = 1;

  CalibrationTrial operator()(double standoff, int trial) const;
};

}  // namespace fogservo::ibvs

#endif  // FOGSERVO_PICKUP_H_
