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

#include "fogservo/dynamics.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace fogservo::dynamics {
namespace {

double WrapAngle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

}  // namespace

Eigen::Vector2d WeightedCentroid(std::span<const PointMass> masses) {
  double total = 0.0;
  Eigen::Vector2d moment = Eigen::Vector2d::Zero();
  for (const PointMass& m : masses) {
    if (!(m.mass >= 0.0)) throw InvalidParameter("negative or NaN mass");
    total += m.mass;
    moment += m.mass * m.position;
  }
  if (!(total > 0.0)) throw InvalidParameter("total mass must be positive");
  return moment / total;
}

Eigen::Vector2d LegCom(double knee_angle, double leg_segment) {
  // Wheel at (0, -2 l cos a); knee at wheel + (l sin a, l cos a). The leg CoM
  // is the mean of the thigh and shin midpoints.
  return {0.5 * leg_segment * std::sin(knee_angle),
          -leg_segment * std::cos(knee_angle)};
}

Eigen::Vector2d EstimateCom(const LimbConfig& limbs, double leg_segment,
                            double control_box_mass,
                            const Eigen::Vector2d& control_box_pos,
                            bool grasping) {
  const Eigen::Vector2d leg = LegCom(limbs.leg_knee_angle, leg_segment);
  const std::array<PointMass, 6> parts = {{
      {limbs.masses.arm_left, limbs.arm_com[0]},
      {limbs.masses.arm_right, limbs.arm_com[1]},
      {limbs.masses.leg_left, leg},
      {limbs.masses.leg_right, leg},
      {control_box_mass, control_box_pos},
      {grasping ? limbs.masses.box : 0.0, limbs.box_com},
  }};
  return WeightedCentroid(parts);
}

PendulumGeometry PendulumGeometry::FromPoints(
    const Eigen::Vector2d& com, const Eigen::Vector2d& wheel_center,
    const Eigen::Vector2d& gravity_dir, double wheel_radius) {
  PendulumGeometry g;
  g.com = com;
  g.wheel_center = wheel_center;
  g.pendulum = com - wheel_center;
  g.gravity_dir = gravity_dir.normalized();
  g.length = g.pendulum.norm();
  g.wheel_radius = wheel_radius;
  return g;
}

double LeanAngle(const PendulumGeometry& geometry) {
  const Eigen::Vector2d& l = geometry.pendulum;
  const double len = l.norm();
  if (!(len > 1e-9)) throw SingularGeometry("pendulum length is zero");
  const Eigen::Vector2d up = -geometry.gravity_dir.normalized();
  // Same angle as acos(L.(-G) / |L|), evaluated with atan2 so it keeps full
  // precision near upright. Sign: component of L along "forward" = up rotated
  // clockwise.
  const double along = l.dot(up);
  const double across = l.x() * up.y() - l.y() * up.x();
  return std::atan2(across, along);
}

RobotModel::RobotModel(BodyParams body, ControllerGains gains)
    : body_(std::move(body)), gains_(gains) {
  if (!(body_.wheel_radius > 0.0) || !(body_.leg_segment > 0.0) ||
      !(body_.wheel_time_constant > 0.0) || !(body_.control_box_mass > 0.0)) {
    throw InvalidParameter("body parameters must be positive");
  }
  if (!(body_.height_min < body_.height_max) ||
      !(body_.knee_min < body_.knee_max)) {
    throw InvalidParameter("empty height or knee range");
  }
  if (!(gains_.t_max > 0.0)) throw InvalidParameter("t_max must be positive");
}

double RobotModel::HipAboveAxle(double knee_angle) const {
  return 2.0 * body_.leg_segment * std::cos(knee_angle);
}

double RobotModel::HeightForKnee(double knee_angle) const {
  return body_.wheel_radius + HipAboveAxle(knee_angle);
}

double RobotModel::KneeForHeight(double height) const {
  const double c = (height - body_.wheel_radius) / (2.0 * body_.leg_segment);
  return std::acos(std::clamp(c, -1.0, 1.0));
}

Eigen::Vector2d RobotModel::EstimateCom(const LimbConfig& limbs,
                                        bool grasping) const {
  return dynamics::EstimateCom(limbs, body_.leg_segment,
                               body_.control_box_mass, body_.control_box_pos,
                               grasping);
}

void RobotModel::Rebase(RobotState& s) const {
  const double pitch = s.lean_angle - s.com_offset_angle;
  Eigen::Vector2d com = EstimateCom(s.limbs, s.grasping);
  com.y() += HipAboveAxle(s.limbs.leg_knee_angle);
  s.pendulum_length = com.norm();
  if (!(s.pendulum_length > 1e-9)) throw SingularGeometry("CoM on the axle");
  s.com_offset_angle = std::atan2(com.x(), com.y());
  s.lean_angle = pitch + s.com_offset_angle;
  s.com_velocity = body_.wheel_radius * s.wheel_speed +
                   s.lean_rate * s.pendulum_length * std::cos(s.lean_angle);
}

RobotState RobotModel::MakeState(const Eigen::Vector2d& ground_pos,
                                 double heading, double height, double lean,
                                 const LimbConfig& limbs) const {
  RobotState s;
  s.ground_pos = ground_pos;
  s.heading = WrapAngle(heading);
  s.limbs = limbs;
  const double h = std::clamp(height, body_.height_min, body_.height_max);
  s.limbs.leg_knee_angle =
      std::clamp(KneeForHeight(h), body_.knee_min, body_.knee_max);
  s.body_height = HeightForKnee(s.limbs.leg_knee_angle);
  s.height_target = h;
  s.height_clamped = h != height;
  s.com_offset_angle = 0.0;
  s.lean_angle = 0.0;
  Rebase(s);
  s.lean_angle = lean;
  s.com_velocity = s.lean_rate * s.pendulum_length * std::cos(lean);
  s.fallen = std::abs(lean) >= body_.fall_angle;
  return s;
}

PendulumGeometry RobotModel::Geometry(const RobotState& s) const {
  const Eigen::Vector2d wheel(0.0, body_.wheel_radius);
  const Eigen::Vector2d com =
      wheel + s.pendulum_length * Eigen::Vector2d(std::sin(s.lean_angle),
                                                  std::cos(s.lean_angle));
  return PendulumGeometry::FromPoints(com, wheel, Eigen::Vector2d(0.0, -1.0),
                                      body_.wheel_radius);
}

BodyPose RobotModel::Pose(const RobotState& s) const {
  return BodyPose{s.ground_pos, s.heading, s.body_height,
                  s.lean_angle - s.com_offset_angle};
}

double RobotModel::BalanceCommand(const RobotState& s, double v_des) const {
  if (s.fallen) return 0.0;
  const double len = s.pendulum_length;
  const double psi = s.lean_angle;
  const double c = std::cos(psi);
  // Lean-rate setpoint proportional to the velocity error.
  const double rate_target = gains_.k_v * (v_des - s.com_velocity);
  // Axle acceleration that cancels gravity and drives psi, psi_dot to their
  // setpoints; the wheel servo realises it over one time constant.
  const double accel =
      body_.gravity * std::tan(psi) +
      len / c *
          (gains_.k_lean * psi + gains_.k_rate * (s.lean_rate - rate_target));
  const double v = s.com_velocity + body_.wheel_time_constant * accel;
  const double t = PendulumWheelVelocity(v, s.lean_rate, len);
  return std::clamp(t, -gains_.t_max, gains_.t_max);
}

RobotState RobotModel::Step(const RobotState& state, const WheelCommand& cmd,
                            Micros dt) const {
  RobotState s = state;
  s.t += dt;
  if (s.fallen) return s;
  const double h = ToSeconds(dt);
  const double len = s.pendulum_length;
  const double forward = std::clamp(cmd.forward, -gains_.t_max, gains_.t_max);

  const double v_wheel = body_.wheel_radius * s.wheel_speed;
  // The first-order wheel servo is integrated exactly under the held command;
  // the pendulum sees its mean acceleration over the tick.
  const double v_next =
      forward + (v_wheel - forward) * std::exp(-h / body_.wheel_time_constant);
  const double accel = (v_next - v_wheel) / h;
  const double psi_ddot = body_.gravity / len * std::sin(s.lean_angle) -
                          accel / len * std::cos(s.lean_angle);
  // Semi-implicit Euler.
  s.lean_rate += psi_ddot * h;
  s.lean_angle += s.lean_rate * h;
  s.wheel_speed = v_next / body_.wheel_radius;

  s.yaw_rate += gains_.yaw_rate_gain * (cmd.yaw_rate - s.yaw_rate) * h;
  s.heading = WrapAngle(s.heading + s.yaw_rate * h);
  s.ground_pos +=
      v_next * h * Eigen::Vector2d(std::cos(s.heading), std::sin(s.heading));

  const double knee_goal = std::clamp(KneeForHeight(s.height_target),
                                      body_.knee_min, body_.knee_max);
  const double max_step = body_.knee_slew_rate * h;
  const double dk =
      std::clamp(knee_goal - s.limbs.leg_knee_angle, -max_step, max_step);
  if (dk != 0.0) {
    s.limbs.leg_knee_angle += dk;
    s.body_height = HeightForKnee(s.limbs.leg_knee_angle);
    Rebase(s);
  } else {
    s.com_velocity =
        v_next + s.lean_rate * s.pendulum_length * std::cos(s.lean_angle);
  }
  if (std::abs(s.lean_angle) >= body_.fall_angle) s.fallen = true;
  return s;
}

RobotState RobotModel::SetHeight(const RobotState& state,
                                 double target_height) const {
  RobotState s = state;
  const double clamped =
      std::clamp(target_height, body_.height_min, body_.height_max);
  s.height_clamped = clamped != target_height;
  s.height_target = clamped;
  return s;
}

RobotState RobotModel::SetLimbs(const RobotState& state, const LimbConfig& limbs,
                                bool grasping) const {
  RobotState s = state;
  const double knee = s.limbs.leg_knee_angle;
  s.limbs = limbs;
  s.limbs.leg_knee_angle = knee;
  s.grasping = grasping;
  Rebase(s);
  if (std::abs(s.lean_angle) >= body_.fall_angle) s.fallen = true;
  return s;
}

}  // namespace fogservo::dynamics
