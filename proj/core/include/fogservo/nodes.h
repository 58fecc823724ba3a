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

#ifndef FOGSERVO_NODES_H_
#define FOGSERVO_NODES_H_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fogservo/common.h"
#include "fogservo/dynamics.h"
#include "fogservo/heartbeat.h"
#include "fogservo/packet.h"
#include "fogservo/pickup.h"
#include "fogservo/vision.h"

namespace fogservo::nodes {

// Timer service for one node. Callbacks run on the node's own execution
// context, never concurrently with its datagram handler.
class Executor {
 public:
  virtual ~Executor() = default;
  virtual Micros Now() const = 0;
  virtual void At(Micros t, std::function<void()> cb) = 0;
};

using Sender = std::function<void(std::span<const std::uint8_t>)>;

// Numbers each outgoing packet of one node.
class PacketWriter {
 public:
  explicit PacketWriter(Sender send) : send_(std::move(send)) {}
  std::uint32_t Send(const Payload& payload, Micros now);
  std::uint32_t next_seq() const { return next_seq_; }

 private:
  Sender send_;
  std::uint32_t next_seq_ = 1;
};

// Appends one JSON object per line.
using LineSink = std::function<void(const std::string&)>;

struct EdgeConfig {
  dynamics::RobotModel model;
  Micros window = heartbeat::kDefaultWindow;
  heartbeat::RampShape shape;
  bool adaptive_window = false;
  Micros adaptive_min = 100'000;
  Micros adaptive_max = 500'000;
  double max_forward = 1.0;      // m/s
  double max_yaw_rate = 1.5;     // rad/s
  double max_height_rate = 0.2;  // m/s
  Micros tick = kEdgeTick;
  Micros telemetry_period = 50'000;
  vision::CameraModel camera;
  ibvs::GraspScript script;
  ibvs::GraspEnvelope envelope;
  // When set, the envelope is re-centred at grasp start on the point this far
  // along the optical axis, using the body pitch at that moment.
  std::optional<double> grasp_depth;
  // While the grasp script runs the base holds the spot where it started:
  // v_des += gain * (distance back to that spot along the heading).
  double grasp_hold_gain = 1.0;  // 1/s
};

// Ground truth the edge needs to close the grasp on the box.
struct GraspWorld {
  std::function<Eigen::Vector3d(Micros)> box_position;
  std::function<void(Micros)> on_grasp_start;
  std::function<void(Micros, bool)> on_grasp_closed;
};

struct EdgeCounters {
  std::uint64_t received = 0;
  std::uint64_t decode_errors = 0;
  std::uint64_t rejected = 0;  // decoded but non-finite values
  std::uint64_t observations = 0;
  std::uint64_t ticks = 0;
};

// Low-level controller: reconstructs commands from heartbeat streams and
// runs the balance loop at the tick rate. The robot is simulated in place.
class EdgeNode {
 public:
  EdgeNode(EdgeConfig config, dynamics::RobotState initial, GraspWorld world,
           Sender uplink);

  // Schedules the control loop; the first tick fires at Now().
  void Start(Executor& executor);
  void OnDatagram(std::span<const std::uint8_t> bytes, Micros now);
  void set_telemetry_log(LineSink sink) { telemetry_log_ = std::move(sink); }

  const dynamics::RobotState& state() const { return state_; }
  ibvs::GraspStatus grasp_status() const { return grasp_status_; }
  std::optional<Micros> grasp_finished_at() const { return grasp_finished_at_; }
  Mode mode() const { return mode_; }
  double forward_command() const { return v_des_; }
  double yaw_command() const { return yaw_des_; }
  // Stop delays: last send time of a motion packet to zero motion output.
  const std::vector<Micros>& stop_latencies() const { return stop_latencies_; }
  const EdgeCounters& counters() const { return counters_; }
  const heartbeat::HeartbeatChannel& channel(heartbeat::CommandType type) const;
  const std::optional<TagObservationMsg>& last_observation() const {
    return last_obs_;
  }
  TelemetryMsg Telemetry() const;

 private:
  void Tick(Executor& executor);
  void Control(Micros now);
  void RunGrasp(Micros now);
  heartbeat::HeartbeatChannel& Channel(heartbeat::CommandType type);

  EdgeConfig config_;
  dynamics::RobotState state_;
  GraspWorld world_;
  PacketWriter uplink_;
  LineSink telemetry_log_;
  std::array<heartbeat::HeartbeatChannel, 6> channels_;
  heartbeat::EdgeTrigger grasp_trigger_{heartbeat::CommandType::kGrasp};
  heartbeat::EdgeTrigger mode_trigger_{heartbeat::CommandType::kAutoMode};
  std::optional<Mode> pending_mode_;
  Mode mode_ = Mode::kTeleop;
  double v_des_ = 0.0;
  double yaw_des_ = 0.0;
  std::optional<Micros> motion_sent_at_;
  bool moving_ = false;
  std::vector<Micros> stop_latencies_;
  ibvs::GraspStatus grasp_status_ = ibvs::GraspStatus::kIdle;
  std::optional<Micros> grasp_started_;
  bool grasp_closed_ = false;
  bool grasp_checked_ = false;
  ibvs::GraspEnvelope active_envelope_;
  std::optional<Micros> grasp_finished_at_;
  Eigen::Vector2d grasp_hold_ = Eigen::Vector2d::Zero();
  // Camera pose and heading when the grasp committed; the envelope is
  // anchored here.
  Eigen::Vector3d grasp_camera_ = Eigen::Vector3d::Zero();
  double grasp_heading_ = 0.0;
  dynamics::LimbConfig rest_limbs_;
  Micros next_telemetry_ = 0;
  std::optional<TagObservationMsg> last_obs_;
  EdgeCounters counters_;
};

enum class Direction : std::uint8_t { kDownlink = 0, kUplink = 1 };

struct RcuCounters {
  std::array<std::uint64_t, 2> forwarded{};
  std::array<std::uint64_t, 2> errors{};
};

// Gateway between cloud and edge. Validates and relays datagrams unchanged
// after a fixed processing delay.
class RcuNode {
 public:
  static constexpr Micros kProcessingDelay = 2'000;

  RcuNode(Executor& executor, Sender to_edge, Sender to_cloud,
          Micros delay = kProcessingDelay);

  void OnDatagram(Direction direction, std::span<const std::uint8_t> bytes,
                  Micros now);
  const RcuCounters& counters() const { return counters_; }
  Micros delay() const { return delay_; }

 private:
  Executor& executor_;
  Sender to_edge_;
  Sender to_cloud_;
  Micros delay_;
  RcuCounters counters_;
};

// A recorded operator command, replayed at the publish rate while active.
struct TeleopStep {
  Micros start = 0;
  Micros duration = 0;
  Payload payload;  // velocity and height repeat; grasp and mode fire once
};

struct CloudConfig {
  Micros publish_period = 50'000;  // teleop and servo command stream
  double recognition_rate_hz = 5.0;
  double pixel_noise = 0.5;
  std::uint64_t seed = 1;
  double wheel_radius = 0.10;
  vision::CameraModel camera;
  vision::VisibilityLimits limits;
  ibvs::PickupConfig pickup;
  std::vector<TeleopStep> trace;
  std::optional<Micros> engage_at;  // auto pickup start, if any
};

struct CloudCounters {
  std::uint64_t telemetry = 0;
  std::uint64_t decode_errors = 0;
  std::uint64_t commands_sent = 0;
  std::uint64_t observations = 0;
};

// High-level controller: relays operator commands, recognises the tag in the
// latest frame, and runs the automatic pickup.
class CloudNode {
 public:
  CloudNode(CloudConfig config, vision::RecognitionService::TargetAt target,
            Sender downlink);

  void Start(Executor& executor);
  void OnDatagram(std::span<const std::uint8_t> bytes, Micros now);
  // Operator command from an interactive client, sent immediately.
  void Relay(const Payload& payload, Micros now);
  void set_phase_log(LineSink sink) { phase_log_ = std::move(sink); }

  const ibvs::PickupController& pickup() const { return pickup_; }
  const std::optional<TelemetryMsg>& telemetry() const { return telemetry_; }
  const std::optional<vision::TagObservation>& observation() const {
    return observation_;
  }
  bool fell() const { return fell_; }
  const CloudCounters& counters() const { return counters_; }

 private:
  void Publish(Executor& executor);
  void Recognize(Executor& executor);
  void Engage(Micros now);
  void LogPhases();

  CloudConfig config_;
  PacketWriter downlink_;
  vision::RecognitionService recognition_;
  ibvs::PickupController pickup_;
  LineSink phase_log_;
  std::size_t logged_events_ = 0;
  std::vector<bool> fired_;
  std::optional<TelemetryMsg> telemetry_;
  std::optional<Micros> telemetry_ts_;
  std::optional<vision::TagObservation> observation_;
  bool fell_ = false;
  CloudCounters counters_;
};

dynamics::BodyPose PoseFromTelemetry(const TelemetryMsg& t);

}  // namespace fogservo::nodes

#endif  // FOGSERVO_NODES_H_
