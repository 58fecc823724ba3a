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

#ifndef FOGSERVO_DYNAMICS_H_
#define FOGSERVO_DYNAMICS_H_

#include <array>
#include <span>

#include <Eigen/Core>

#include "fogservo/common.h"

namespace fogservo::dynamics {

// Planar (sagittal) model of a two-wheeled, two-legged balancing robot with a
// kinematic yaw degree of freedom.
//
// Frames: the "hip frame" has its origin at the control box joint, x forward
// and z up, with the body upright. The pendulum is the vector from the wheel
// axle to the whole-body centre of mass.

struct PointMass {
  double mass = 0.0;        // kg
  Eigen::Vector2d position = Eigen::Vector2d::Zero();  // m
};

// Mass-weighted centroid. Zero masses are allowed; a non-positive total or a
// negative entry throws InvalidParameter.
Eigen::Vector2d WeightedCentroid(std::span<const PointMass> masses);

struct LimbMasses {
  double arm_left = 1.5;
  double arm_right = 1.5;
  double leg_left = 2.0;
  double leg_right = 2.0;
  double box = 1.0;  // carried box, only counted while grasping
};

struct LimbConfig {
  std::array<Eigen::Vector2d, 2> arm_com = {Eigen::Vector2d(0.08, 0.12),
                                            Eigen::Vector2d(0.08, 0.12)};
  // Inclination of thigh and shin from vertical; the knee bend is twice this.
  double leg_knee_angle = 0.8;
  Eigen::Vector2d box_com = Eigen::Vector2d(0.45, 0.10);
  LimbMasses masses;
};

struct BodyParams {
  double wheel_radius = 0.10;   // m
  double leg_segment = 0.41;    // thigh and shin length, m
  double gravity = 9.81;        // m/s^2
  double knee_min = 0.2;        // rad
  double knee_max = 1.8;        // rad
  double height_min = 0.4;      // m
  double height_max = 0.9;      // m
  double fall_angle = 0.5;      // rad
  double knee_slew_rate = 0.5;  // rad/s
  double wheel_time_constant = 0.05;  // s, wheel velocity servo
  double control_box_mass = 10.0;     // kg
  Eigen::Vector2d control_box_pos = Eigen::Vector2d(0.0, 0.05);  // hip frame
};

struct ControllerGains {
  double k_v = 0.25;         // s/m, lean-rate setpoint per unit velocity error
  double t_max = 2.0;        // m/s, wheel command limit
  double k_lean = 20.0;      // 1/s^2
  double k_rate = 8.0;       // 1/s
  double yaw_rate_gain = 1.5;  // 1/s
};

struct PendulumGeometry {
  Eigen::Vector2d com = Eigen::Vector2d::Zero();
  Eigen::Vector2d wheel_center = Eigen::Vector2d::Zero();
  Eigen::Vector2d pendulum = Eigen::Vector2d::Zero();  // com - wheel_center
  Eigen::Vector2d gravity_dir = Eigen::Vector2d(0.0, -1.0);
  double length = 0.0;
  double wheel_radius = 0.0;

  static PendulumGeometry FromPoints(const Eigen::Vector2d& com,
                                     const Eigen::Vector2d& wheel_center,
                                     const Eigen::Vector2d& gravity_dir,
                                     double wheel_radius);
};

// Signed deviation of the pendulum from the anti-gravity direction; positive
// when the centre of mass is ahead of the axle. Throws SingularGeometry for a
// vanishing pendulum.
double LeanAngle(const PendulumGeometry& geometry);

// Wheel rim speed that realises CoM velocity `com_velocity` while the
// pendulum rotates at `lean_rate`: R*omega = v - psi_dot * |L|.
constexpr double PendulumWheelVelocity(double com_velocity, double lean_rate,
                                       double length) {
  return com_velocity - lean_rate * length;
}

struct RobotState {
  Micros t = 0;
  Eigen::Vector2d ground_pos = Eigen::Vector2d::Zero();  // world, m
  double heading = 0.0;     // rad
  double yaw_rate = 0.0;    // rad/s
  double body_height = 0.65;
  double height_target = 0.65;
  double lean_angle = 0.0;  // psi
  double lean_rate = 0.0;   // psi_dot
  double wheel_speed = 0.0; // omega, rad/s
  double com_velocity = 0.0;
  double pendulum_length = 0.0;
  // Angle of the CoM from the hip-frame vertical, so body pitch = psi - this.
  double com_offset_angle = 0.0;
  LimbConfig limbs;
  bool grasping = false;
  bool fallen = false;
  bool height_clamped = false;  // last height request was out of range
};

// Camera-relevant pose of the body.
struct BodyPose {
  Eigen::Vector2d ground_pos = Eigen::Vector2d::Zero();
  double heading = 0.0;
  double body_height = 0.65;
  double body_pitch = 0.0;  // forward positive
};

struct WheelCommand {
  double forward = 0.0;   // T = R*omega, m/s
  double yaw_rate = 0.0;  // rad/s
};

class RobotModel {
 public:
  RobotModel() = default;
  RobotModel(BodyParams body, ControllerGains gains);

  const BodyParams& body() const { return body_; }
  const ControllerGains& gains() const { return gains_; }

  // Upright, stationary robot at the given pose; `lean` is applied as an
  // initial pendulum deviation.
  RobotState MakeState(const Eigen::Vector2d& ground_pos, double heading,
                       double height, double lean = 0.0,
                       const LimbConfig& limbs = LimbConfig{}) const;

  double HeightForKnee(double knee_angle) const;
  double KneeForHeight(double height) const;

  // Whole-body CoM in the hip frame.
  Eigen::Vector2d EstimateCom(const LimbConfig& limbs, bool grasping) const;
  PendulumGeometry Geometry(const RobotState& state) const;
  BodyPose Pose(const RobotState& state) const;
  // Hip position relative to the wheel axle, upright body.
  double HipAboveAxle(double knee_angle) const;

  double BalanceCommand(const RobotState& state, double v_des) const;

  RobotState Step(const RobotState& state, const WheelCommand& cmd,
                  Micros dt = kEdgeTick) const;
  RobotState Step(const RobotState& state, double forward,
                  Micros dt = kEdgeTick) const {
    return Step(state, WheelCommand{forward, 0.0}, dt);
  }

  // Sets the height setpoint. Knee motion happens in Step at a bounded rate.
  RobotState SetHeight(const RobotState& state, double target_height) const;

  // Replaces limb configuration (arms, box, grasp flag) keeping body pitch,
  // so the pendulum angle jumps by the change of CoM direction.
  RobotState SetLimbs(const RobotState& state, const LimbConfig& limbs,
                      bool grasping) const;

 private:
  // Recomputes pendulum length and offset angle; keeps body pitch fixed.
  void Rebase(RobotState& state) const;

  BodyParams body_;
  ControllerGains gains_;
};

// CoM of one leg (thigh + shin) in the hip frame.
Eigen::Vector2d LegCom(double knee_angle, double leg_segment);

// Mass-weighted CoM of arms, legs, control box and, while grasping, the
// carried box. Hip frame.
Eigen::Vector2d EstimateCom(const LimbConfig& limbs, double leg_segment,
                            double control_box_mass,
                            const Eigen::Vector2d& control_box_pos,
                            bool grasping);

}  // namespace fogservo::dynamics

#endif  // FOGSERVO_DYNAMICS_H_
