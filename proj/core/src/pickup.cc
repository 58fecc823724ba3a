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

#include "fogservo/pickup.h"

#include <algorithm>
#include <cmath>
#include <utility>

namespace fogservo::ibvs {
namespace {

double Smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

bool Finite(const RobotEffort& e) {
  return std::isfinite(e.forward) && std::isfinite(e.yaw_rate) &&
         std::isfinite(e.height_rate);
}

}  // namespace

std::string_view Name(Phase phase) {
  switch (phase) {
    case Phase::kNavigate: return "navigate";
    case Phase::kHeightAdjust: return "height_adjust";
    case Phase::kGrasp: return "grasp";
    case Phase::kDone: return "done";
    case Phase::kAborted: return "aborted";
  }
  return "unknown";
}

GraspEnvelope GraspEnvelope::CenteredOn(const vision::CameraModel& camera,
                                        double depth, double body_pitch) {
  GraspEnvelope env;
  const double angle = camera.mount_pitch + body_pitch;
  env.standoff = depth * std::cos(angle);
  env.height_offset = -depth * std::sin(angle);
  return env;
}

bool GraspEnvelope::Contains(const Eigen::Vector3d& camera_position,
                             double heading, const Eigen::Vector3d& box) const {
  const Eigen::Vector3d d = box - camera_position;
  const double forward = d.x() * std::cos(heading) + d.y() * std::sin(heading);
  const double lateral = -d.x() * std::sin(heading) + d.y() * std::cos(heading);
  return std::abs(forward - standoff) <= position_tolerance &&
         std::abs(lateral) <= position_tolerance &&
         std::abs(d.z() - height_offset) <= position_tolerance &&
         std::abs(std::atan2(lateral, forward)) <= bearing_tolerance;
}

Eigen::Vector2d GraspScript::ArmComAt(Micros elapsed) const {
  const double u =
      static_cast<double>(elapsed) / static_cast<double>(duration);
  if (u < 0.5) return rest + Smoothstep(u / 0.5) * (reach - rest);
  if (u < 0.65) return reach;
  return reach + Smoothstep((u - 0.65) / 0.35) * (lift - reach);
}

PickupController::PickupController(PickupConfig config,
                                   vision::CameraModel camera)
    : config_(config), camera_(std::move(camera)) {
  if (!(config_.lambda > 0.0)) throw InvalidParameter("lambda must be > 0");
  if (!(config_.target_size_px > 0.0)) {
    throw InvalidParameter("target size must be > 0");
  }
  camera_.Validate();
}

double PickupController::desired_depth() const {
  return camera_.focal_px * config_.side_world / config_.target_size_px;
}

void PickupController::Engage(Micros now) {
  if (engaged_) return;
  engaged_ = true;
  engaged_at_ = now;
  last_fresh_ = now;
  phase_ = Phase::kNavigate;
  events_.push_back(PhaseEvent{now, phase_, last_e_norm_, last_depth_, {}});
}

void PickupController::Transition(Phase next, Micros now,
                                  std::optional<bool> success) {
  phase_ = next;
  settled_since_.reset();
  if (next == Phase::kDone || next == Phase::kAborted) {
    success_ = next == Phase::kDone ? success : std::optional<bool>(false);
    finished_at_ = now;
    current_.reset();
  }
  events_.push_back(PhaseEvent{now, next, last_e_norm_, last_depth_, success});
}

PickupController::Command PickupController::Update(
    const vision::TagObservation& obs, Micros now) {
  if (!engaged_ || finished()) return {};
  if (phase_ == Phase::kGrasp) {
    current_.reset();
    return Command{std::nullopt, grasp_status_ == GraspStatus::kIdle};
  }
  const bool fresh =
      obs.visible && now - obs.timestamp <= config_.max_observation_age;
  if (!fresh) {
    settled_since_.reset();
    const Micros lost = now - last_fresh_;
    if (lost > config_.abort_after) {
      Transition(Phase::kAborted, now);
      return {};
    }
    // Coast on the last command briefly, then go quiet and let the edge
    // heartbeat bring the robot to rest.
    if (lost > config_.lost_hold) current_.reset();
    return Command{current_, false};
  }
  last_fresh_ = now;
  return Servo(obs, now);
}

PickupController::Command PickupController::Servo(
    const vision::TagObservation& obs, Micros now) {
  const Eigen::Vector2d s = vision::PixelToNormalized(camera_, obs.center);
  const double depth =
      vision::DepthFromSize(obs, camera_, config_.side_world);
  if (!s.allFinite() || !std::isfinite(depth)) {
    Transition(Phase::kAborted, now);
    return {};
  }
  const double depth_star = desired_depth();
  FeatureError err;
  err.s = s;
  err.s_star = phase_ == Phase::kNavigate ? Eigen::Vector2d(0.0, s.y())
                                          : Eigen::Vector2d::Zero();
  err.depth =
      config_.depth_source == DepthSource::kMeasured ? depth : depth_star;

  RobotEffort effort;
  try {
    effort = ControlLaw(err, config_.lambda, config_.limits).robot;
  } catch (const DegenerateGeometry&) {
    // Hold the previous command.
    return Command{current_, false};
  }
  effort.forward = std::clamp(
      effort.forward + config_.depth_gain * (depth - depth_star),
      -config_.limits.forward, config_.limits.forward);
  if (phase_ == Phase::kNavigate) effort.height_rate = 0.0;

  last_e_norm_ = err.e().norm();
  last_depth_ = depth;
  if (!Finite(effort) || !std::isfinite(last_e_norm_)) {
    Transition(Phase::kAborted, now);
    return {};
  }
  min_e_norm_ = std::min(min_e_norm_.value_or(last_e_norm_), last_e_norm_);

  const Eigen::Vector2d pp = camera_.principal_point();
  bool in_tolerance = false;
  if (phase_ == Phase::kNavigate) {
    in_tolerance =
        std::abs(obs.center.x() - pp.x()) < config_.center_tolerance_px &&
        std::abs(obs.side_px - config_.target_size_px) <
            config_.size_tolerance_px;
  } else {
    in_tolerance =
        std::abs(obs.center.y() - pp.y()) < config_.center_tolerance_px;
  }
  if (!in_tolerance) {
    settled_since_.reset();
  } else {
    if (!settled_since_) settled_since_ = now;
    if (now - *settled_since_ >= config_.settle_time) {
      if (phase_ == Phase::kNavigate) {
        Transition(Phase::kHeightAdjust, now);
      } else {
        Transition(Phase::kGrasp, now);
        current_.reset();
        return Command{std::nullopt, true};
      }
    }
  }
  current_ = effort;
  return Command{current_, false};
}

void PickupController::OnGraspStatus(GraspStatus status, Micros now) {
  if (phase_ != Phase::kGrasp) return;
  grasp_status_ = status;
  if (status == GraspStatus::kSucceeded) Transition(Phase::kDone, now, true);
  if (status == GraspStatus::kFailed) Transition(Phase::kDone, now, false);
}

CalibrationResult CalibrateTargetSize(
    std::span<const double> standoffs, int trials,
    const std::function<CalibrationTrial(double, int)>& run) {
  if (standoffs.empty()) throw InvalidParameter("no candidate standoffs");
  if (trials < 1) throw InvalidParameter("need at least one trial");
  CalibrationResult result;
  std::vector<double> sizes;
  for (const double standoff : standoffs) {
    int ok = 0;
    double side_sum = 0.0;
    for (int i = 0; i < trials; ++i) {
      const CalibrationTrial t = run(standoff, i);
      ok += t.success ? 1 : 0;
      side_sum += t.side_px;
    }
    result.success_rate.push_back(static_cast<double>(ok) / trials);
    sizes.push_back(side_sum / trials);
  }
  if (standoffs.size() == 1) {
    result.standoff = standoffs[0];
    result.target_size_px = sizes[0];
    return result;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < standoffs.size(); ++i) {
    const double r = result.success_rate[i];
    const double rb = result.success_rate[best];
    if (r > rb || (r == rb && standoffs[i] < standoffs[best])) best = i;
  }
  if (result.success_rate[best] == 0.0) {
    throw Error("no candidate standoff produced a successful grasp; revise "
                "the grasp script");
  }
  result.standoff = standoffs[best];
  result.target_size_px = sizes[best];
  return result;
}

CalibrationTrial SimulatedGraspBench::operator()(double standoff,
                                                 int trial) const {
  Rng rng(DeriveSeed(seed, static_cast<std::uint64_t>(trial) * 7919 +
                               static_cast<std::uint64_t>(
                                   std::llround(standoff * 1e6))));
  const double wheel_radius = model.body().wheel_radius;
  const Eigen::Vector3d n = target.normal.normalized();
  const double heading = std::atan2(-n.y(), -n.x());
  const Eigen::Vector2d fwd(std::cos(heading), std::sin(heading));
  const Eigen::Vector2d left(-fwd.y(), fwd.x());

  // Solve for the ground position and height that put the camera at the
  // requested standoff and at the envelope's nominal height.
  Eigen::Vector2d ground = target.position.head<2>() - (standoff + 0.1) * fwd;
  double height = 0.65;
  dynamics::RobotState state;
  for (int it = 0; it < 6; ++it) {
    state = model.MakeState(ground, heading, height);
    const auto cam = vision::PoseOnRobot(camera, model.Pose(state), wheel_radius);
    const Eigen::Vector3d d = target.position - cam.position;
    ground += (d.head<2>().dot(fwd) - standoff) * fwd;
    height += d.z() - envelope.height_offset;
  }
  ground += rng.Uniform(-placement_noise, placement_noise) * fwd +
            rng.Uniform(-placement_noise, placement_noise) * left;
  state = model.MakeState(ground, heading, height);
  const double side_px =
      vision::Project(camera, model.Pose(state), wheel_radius, target).side_px;

  for (Micros t = 0; t < 500'000; t += kEdgeTick) {
    state = model.Step(state, model.BalanceCommand(state, 0.0));
  }
  bool closed = false;
  const auto start_cam =
      vision::PoseOnRobot(camera, model.Pose(state), wheel_radius);
  const double start_heading = state.heading;
  for (Micros t = 0; t <= script.duration; t += kEdgeTick) {
    if (!closed && t >= script.CloseAt()) {
      if (!envelope.Contains(start_cam.position, start_heading,
                             target.position)) {
        return CalibrationTrial{false, side_px};
      }
      closed = true;
    }
    dynamics::LimbConfig limbs = state.limbs;
    limbs.arm_com = {script.ArmComAt(t), script.ArmComAt(t)};
    limbs.box_com = script.ArmComAt(t);
    state = model.SetLimbs(state, limbs, closed);
    state = model.Step(state, model.BalanceCommand(state, 0.0));
  }
  return CalibrationTrial{closed && !state.fallen, side_px};
}

}  // namespace fogservo::ibvs
