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

#include "fogservo/nodes.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include <nlohmann/json.hpp>

namespace fogservo::nodes {
namespace {

using heartbeat::CommandSample;
using heartbeat::CommandType;
using heartbeat::HeartbeatChannel;

std::size_t Index(CommandType type) { return static_cast<std::size_t>(type); }

std::array<HeartbeatChannel, 6> MakeChannels(Micros window,
                                             const heartbeat::RampShape& s) {
  return {HeartbeatChannel(CommandType::kForward, window, s),
          HeartbeatChannel(CommandType::kBackward, window, s),
          HeartbeatChannel(CommandType::kTurnLeft, window, s),
          HeartbeatChannel(CommandType::kTurnRight, window, s),
          HeartbeatChannel(CommandType::kHeightUp, window, s),
          HeartbeatChannel(CommandType::kHeightDown, window, s)};
}

}  // namespace

std::uint32_t PacketWriter::Send(const Payload& payload, Micros now) {
  Packet p;
  p.seq = next_seq_++;
  p.send_ts = static_cast<std::uint64_t>(std::max<Micros>(now, 0));
  p.payload = payload;
  const auto bytes = Encode(p);
  send_(bytes);
  return p.seq;
}

dynamics::BodyPose PoseFromTelemetry(const TelemetryMsg& t) {
  dynamics::BodyPose pose;
  pose.ground_pos = Eigen::Vector2d(t.x, t.y);
  pose.heading = t.heading;
  pose.body_height = t.height;
  pose.body_pitch = t.body_pitch;
  return pose;
}

// ---------------------------------------------------------------------------
// Edge

EdgeNode::EdgeNode(EdgeConfig config, dynamics::RobotState initial,
                   GraspWorld world, Sender uplink)
    : config_(std::move(config)),
      state_(std::move(initial)),
      world_(std::move(world)),
      uplink_(std::move(uplink)),
      channels_(MakeChannels(config_.window, config_.shape)) {
  config_.shape.Validate();
  if (config_.tick <= 0 || config_.telemetry_period <= 0) {
    throw InvalidParameter("edge periods must be positive");
  }
  if (config_.adaptive_window) {
    for (auto& c : channels_) {
      c.EnableAdaptiveWindow(config_.adaptive_min, config_.adaptive_max);
    }
  }
}

HeartbeatChannel& EdgeNode::Channel(CommandType type) {
  return channels_[Index(type)];
}

const HeartbeatChannel& EdgeNode::channel(CommandType type) const {
  if (Index(type) >= channels_.size()) {
    throw InvalidParameter("not a streaming command type");
  }
  return channels_[Index(type)];
}

void EdgeNode::Start(Executor& executor) {
  next_telemetry_ = executor.Now();
  executor.At(executor.Now(), [this, &executor] { Tick(executor); });
}

void EdgeNode::OnDatagram(std::span<const std::uint8_t> bytes, Micros now) {
  ++counters_.received;
  Packet p;
  try {
    p = Decode(bytes);
  } catch (const DecodeError&) {
    ++counters_.decode_errors;
    return;
  }
  const auto sent = static_cast<Micros>(p.send_ts);
  auto stream = [&](CommandType positive, CommandType negative, double value,
                    double limit) {
    if (value == 0.0) return false;
    const CommandType type = value > 0.0 ? positive : negative;
    return Channel(type).Ingest(
        CommandSample{p.seq, std::min(std::abs(value), limit)}, now);
  };
  if (const auto* v = std::get_if<VelocityCmd>(&p.payload)) {
    if (!std::isfinite(v->forward) || !std::isfinite(v->yaw)) {
      ++counters_.rejected;
      return;
    }
    const bool a = stream(CommandType::kForward, CommandType::kBackward,
                          v->forward, config_.max_forward);
    const bool b = stream(CommandType::kTurnLeft, CommandType::kTurnRight,
                          v->yaw, config_.max_yaw_rate);
    if (a || b) {
      motion_sent_at_ = std::max(motion_sent_at_.value_or(sent), sent);
    }
  } else if (const auto* h = std::get_if<HeightCmd>(&p.payload)) {
    if (!std::isfinite(h->rate)) {
      ++counters_.rejected;
      return;
    }
    stream(CommandType::kHeightUp, CommandType::kHeightDown, h->rate,
           config_.max_height_rate);
  } else if (std::holds_alternative<GraspCmd>(p.payload)) {
    grasp_trigger_.Ingest(CommandSample{p.seq, 1.0}, now);
  } else if (const auto* m = std::get_if<ModeCmd>(&p.payload)) {
    if (mode_trigger_.Ingest(CommandSample{p.seq, 1.0}, now)) {
      pending_mode_ = m->mode;
    }
  } else if (const auto* o = std::get_if<TagObservationMsg>(&p.payload)) {
    ++counters_.observations;
    if (!last_obs_ || o->capture_ts >= last_obs_->capture_ts) last_obs_ = *o;
  }
}

void EdgeNode::Tick(Executor& executor) {
  const Micros now = executor.Now();
  Control(now);
  executor.At(now + config_.tick, [this, &executor] { Tick(executor); });
}

void EdgeNode::Control(Micros now) {
  ++counters_.ticks;
  const double dt = ToSeconds(config_.tick);
  v_des_ = Channel(CommandType::kForward).Sample(now) -
           Channel(CommandType::kBackward).Sample(now);
  yaw_des_ = Channel(CommandType::kTurnLeft).Sample(now) -
             Channel(CommandType::kTurnRight).Sample(now);
  const double rate = Channel(CommandType::kHeightUp).Sample(now) -
                      Channel(CommandType::kHeightDown).Sample(now);

  const bool moving = v_des_ != 0.0 || yaw_des_ != 0.0;
  if (moving_ && !moving && motion_sent_at_) {
    stop_latencies_.push_back(now - *motion_sent_at_);
  }
  moving_ = moving;

  if (mode_trigger_.Take() && pending_mode_) mode_ = *pending_mode_;

  if (rate != 0.0) {
    state_ = config_.model.SetHeight(state_, state_.height_target + rate * dt);
  }
  if (grasp_trigger_.Take() && grasp_status_ != ibvs::GraspStatus::kRunning &&
      !state_.fallen) {
    grasp_status_ = ibvs::GraspStatus::kRunning;
    grasp_started_ = now;
    grasp_closed_ = false;
    grasp_checked_ = false;
    grasp_hold_ = state_.ground_pos;
    grasp_camera_ = vision::PoseOnRobot(config_.camera,
                                        config_.model.Pose(state_),
                                        config_.model.body().wheel_radius)
                        .position;
    grasp_heading_ = state_.heading;
    active_envelope_ = config_.envelope;
    if (config_.grasp_depth) {
      const auto centred = ibvs::GraspEnvelope::CenteredOn(
          config_.camera, *config_.grasp_depth,
          config_.model.Pose(state_).body_pitch);
      active_envelope_.standoff = centred.standoff;
      active_envelope_.height_offset = centred.height_offset;
    }
    if (world_.on_grasp_start) world_.on_grasp_start(now);
  }
  double v_ref = v_des_;
  if (grasp_status_ == ibvs::GraspStatus::kRunning) {
    RunGrasp(now);
    const Eigen::Vector2d fwd(std::cos(state_.heading), std::sin(state_.heading));
    v_ref += config_.grasp_hold_gain * (grasp_hold_ - state_.ground_pos).dot(fwd);
  }

  const auto& model = config_.model;
  state_ = model.Step(
      state_,
      dynamics::WheelCommand{model.BalanceCommand(state_, v_ref), yaw_des_},
      config_.tick);

  if (now >= next_telemetry_) {
    next_telemetry_ = now + config_.telemetry_period;
    uplink_.Send(Telemetry(), now);
    if (telemetry_log_) {
      nlohmann::ordered_json j;
      j["t"] = ToSeconds(now);
      j["x"] = state_.ground_pos.x();
      j["y"] = state_.ground_pos.y();
      j["heading"] = state_.heading;
      j["psi"] = state_.lean_angle;
      j["psi_dot"] = state_.lean_rate;
      j["v"] = state_.com_velocity;
      j["height"] = state_.body_height;
      j["fallen"] = state_.fallen;
      j["grasping"] = state_.grasping;
      telemetry_log_(j.dump());
    }
  }
}

void EdgeNode::RunGrasp(Micros now) {
  const auto& script = config_.script;
  const Micros elapsed = now - *grasp_started_;
  if (!grasp_checked_ && elapsed >= script.CloseAt()) {
    grasp_checked_ = true;
    const Eigen::Vector3d box = world_.box_position
                                    ? world_.box_position(now)
                                    : Eigen::Vector3d::Constant(1e9);
    grasp_closed_ = !state_.fallen &&
                    active_envelope_.Contains(grasp_camera_, grasp_heading_, box);
    if (world_.on_grasp_closed) world_.on_grasp_closed(now, grasp_closed_);
  }
  dynamics::LimbConfig limbs = state_.limbs;
  const Eigen::Vector2d arm = script.ArmComAt(std::min(elapsed, script.duration));
  limbs.arm_com = {arm, arm};
  if (grasp_closed_) limbs.box_com = arm;
  state_ = config_.model.SetLimbs(state_, limbs, grasp_closed_);
  if (script.Finished(elapsed)) {
    grasp_finished_at_ = now;
    grasp_status_ = grasp_closed_ && !state_.fallen
                        ? ibvs::GraspStatus::kSucceeded
                        : ibvs::GraspStatus::kFailed;
  }
}

TelemetryMsg EdgeNode::Telemetry() const {
  TelemetryMsg t;
  t.x = static_cast<float>(state_.ground_pos.x());
  t.y = static_cast<float>(state_.ground_pos.y());
  t.heading = static_cast<float>(state_.heading);
  t.psi = static_cast<float>(state_.lean_angle);
  t.psi_dot = static_cast<float>(state_.lean_rate);
  t.v = static_cast<float>(state_.com_velocity);
  t.height = static_cast<float>(state_.body_height);
  t.body_pitch = static_cast<float>(config_.model.Pose(state_).body_pitch);
  t.fallen = state_.fallen;
  t.grasping = state_.grasping;
  t.grasp_status = static_cast<std::uint8_t>(grasp_status_);
  t.mode = mode_;
  return t;
}

// ---------------------------------------------------------------------------
// RCU

RcuNode::RcuNode(Executor& executor, Sender to_edge, Sender to_cloud,
                 Micros delay)
    : executor_(executor),
      to_edge_(std::move(to_edge)),
      to_cloud_(std::move(to_cloud)),
      delay_(delay) {
  if (delay < 0) throw InvalidParameter("RCU delay must be non-negative");
}

void RcuNode::OnDatagram(Direction direction,
                         std::span<const std::uint8_t> bytes, Micros now) {
  const auto d = static_cast<std::size_t>(direction);
  try {
    Decode(bytes);
  } catch (const DecodeError&) {
    ++counters_.errors[d];
    return;
  }
  std::vector<std::uint8_t> copy(bytes.begin(), bytes.end());
  executor_.At(now + delay_, [this, direction, d, copy = std::move(copy)] {
    ++counters_.forwarded[d];
    if (direction == Direction::kDownlink) {
      to_edge_(copy);
    } else {
      to_cloud_(copy);
    }
  });
}

// ---------------------------------------------------------------------------
// Cloud

CloudNode::CloudNode(CloudConfig config,
                     vision::RecognitionService::TargetAt target,
                     Sender downlink)
    : config_(std::move(config)),
      downlink_(std::move(downlink)),
      recognition_(config_.camera, config_.wheel_radius, std::move(target),
                   config_.recognition_rate_hz, config_.pixel_noise,
                   config_.seed, config_.limits),
      pickup_(config_.pickup, config_.camera),
      fired_(config_.trace.size(), false) {
  if (config_.publish_period <= 0) {
    throw InvalidParameter("publish period must be positive");
  }
}

void CloudNode::Start(Executor& executor) {
  executor.At(executor.Now(), [this, &executor] { Publish(executor); });
  executor.At(executor.Now(), [this, &executor] { Recognize(executor); });
  if (config_.engage_at) {
    executor.At(*config_.engage_at,
                [this, &executor] { Engage(executor.Now()); });
  }
}

void CloudNode::Engage(Micros now) {
  if (pickup_.engaged()) return;
  pickup_.Engage(now);
  downlink_.Send(ModeCmd{Mode::kAuto}, now);
  ++counters_.commands_sent;
  LogPhases();
}

void CloudNode::Relay(const Payload& payload, Micros now) {
  downlink_.Send(payload, now);
  ++counters_.commands_sent;
  if (const auto* m = std::get_if<ModeCmd>(&payload)) {
    if (m->mode == Mode::kAuto) Engage(now);
  }
}

void CloudNode::Publish(Executor& executor) {
  const Micros now = executor.Now();
  for (std::size_t i = 0; i < config_.trace.size(); ++i) {
    const TeleopStep& step = config_.trace[i];
    const bool repeating = std::holds_alternative<VelocityCmd>(step.payload) ||
                           std::holds_alternative<HeightCmd>(step.payload);
    if (repeating) {
      if (now >= step.start && now < step.start + step.duration) {
        Relay(step.payload, now);
      }
    } else if (!fired_[i] && now >= step.start) {
      fired_[i] = true;
      Relay(step.payload, now);
    }
  }
  if (pickup_.engaged() && !pickup_.finished() && pickup_.current()) {
    const ibvs::RobotEffort& e = *pickup_.current();
    downlink_.Send(VelocityCmd{static_cast<float>(e.forward),
                               static_cast<float>(e.yaw_rate)},
                   now);
    ++counters_.commands_sent;
    if (e.height_rate != 0.0) {
      downlink_.Send(HeightCmd{static_cast<float>(e.height_rate)}, now);
      ++counters_.commands_sent;
    }
  }
  executor.At(now + config_.publish_period,
              [this, &executor] { Publish(executor); });
}

void CloudNode::Recognize(Executor& executor) {
  const Micros now = executor.Now();
  std::optional<vision::FrameState> frame;
  if (telemetry_) {
    frame = vision::FrameState{PoseFromTelemetry(*telemetry_), *telemetry_ts_};
  }
  const vision::TagObservation obs = recognition_.Recognize(frame, now);
  observation_ = obs;
  ++counters_.observations;
  TagObservationMsg msg;
  msg.visible = obs.visible;
  msg.center_x = static_cast<float>(obs.center.x());
  msg.center_y = static_cast<float>(obs.center.y());
  msg.side_px = static_cast<float>(obs.side_px);
  msg.capture_ts = static_cast<std::uint64_t>(std::max<Micros>(obs.timestamp, 0));
  downlink_.Send(msg, now);

  if (pickup_.engaged() && !pickup_.finished()) {
    const auto cmd = pickup_.Update(obs, now);
    if (cmd.grasp_trigger) {
      downlink_.Send(GraspCmd{}, now);
      ++counters_.commands_sent;
    }
    LogPhases();
  }
  executor.At(now + recognition_.period(),
              [this, &executor] { Recognize(executor); });
}

void CloudNode::OnDatagram(std::span<const std::uint8_t> bytes, Micros now) {
  Packet p;
  try {
    p = Decode(bytes);
  } catch (const DecodeError&) {
    ++counters_.decode_errors;
    return;
  }
  const auto* t = std::get_if<TelemetryMsg>(&p.payload);
  if (t == nullptr) return;
  ++counters_.telemetry;
  const auto ts = static_cast<Micros>(p.send_ts);
  // Reordered telemetry must not roll the frame back.
  if (telemetry_ts_ && ts < *telemetry_ts_) return;
  telemetry_ = *t;
  telemetry_ts_ = ts;
  if (t->fallen) fell_ = true;
  if (pickup_.engaged()) {
    pickup_.OnGraspStatus(static_cast<ibvs::GraspStatus>(t->grasp_status), now);
    LogPhases();
  }
}

void CloudNode::LogPhases() {
  const auto& events = pickup_.events();
  for (; logged_events_ < events.size(); ++logged_events_) {
    if (!phase_log_) continue;
    const ibvs::PhaseEvent& e = events[logged_events_];
    nlohmann::ordered_json j;
    j["t"] = ToSeconds(e.t);
    j["phase"] = ibvs::Name(e.phase);
    j["e_norm"] = e.e_norm;
    j["Z"] = e.depth;
    if (e.success) j["success"] = *e.success;
    phase_log_(j.dump());
  }
}

}  // namespace fogservo::nodes
