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

#ifndef FOGSERVO_IBVS_H_
#define FOGSERVO_IBVS_H_

#include <Eigen/Core>

#include "fogservo/common.h"

namespace fogservo::ibvs {

// Camera twist ordering: (v_x, v_y, v_z, w_x, w_y, w_z) in the camera frame
// (x right, y down, z along the optical axis).
using Twist = Eigen::Matrix<double, 6, 1>;
using InteractionMatrix = Eigen::Matrix<double, 2, 6>;
using PseudoInverseMatrix = Eigen::Matrix<double, 6, 2>;

// Interaction matrix of a normalised image point (x, y) at depth Z:
//   [ -1/Z   0   x/Z   xy    -(1+x^2)   y ]
//   [  0   -1/Z  y/Z  1+y^2   -xy      -x ]
// Throws InvalidDepth unless Z > 0.
InteractionMatrix PointInteractionMatrix(double x, double y, double depth);

// Moore-Penrose inverse of a full-row-rank 2x6 matrix, computed from a QR
// factorisation of its transpose (L^T = QR gives L+ = Q R^-T). Throws
// DegenerateGeometry when the rows are (numerically) dependent.
PseudoInverseMatrix PseudoInverse(const InteractionMatrix& l);

struct FeatureError {
  Eigen::Vector2d s = Eigen::Vector2d::Zero();       // measured, normalised
  Eigen::Vector2d s_star = Eigen::Vector2d::Zero();  // desired, normalised
  double depth = 1.0;                                // Z used in L, m

  Eigen::Vector2d e() const { return s - s_star; }
};

// Velocities on the three actuated degrees of freedom.
struct RobotEffort {
  double forward = 0.0;      // m/s
  double yaw_rate = 0.0;     // rad/s, counter-clockwise from above
  double height_rate = 0.0;  // m/s
};

struct ActuatorLimits {
  double forward = 0.4;
  double yaw_rate = 0.6;
  double height_rate = 0.1;
};

struct ControlOutput {
  Twist camera_twist = Twist::Zero();  // v_c = -lambda L+ e
  Twist effort = Twist::Zero();        // v_s = -v_c
  RobotEffort robot;
};

// Maps an effort twist onto forward, yaw and height motion. With the camera
// looking forward, forward motion is +v_z of the camera (-v_s z), yaw about
// world up is rotation about camera -y (+v_s w_y), and rising is camera -y
// (+v_s v_y). Each output is clamped to its limit.
RobotEffort ToRobot(const Twist& effort, const ActuatorLimits& limits);

// Requires lambda > 0 (InvalidParameter otherwise). Degenerate geometry
// propagates from PseudoInverse.
ControlOutput ControlLaw(const FeatureError& error, double lambda,
                         const ActuatorLimits& limits = {});

}  // namespace fogservo::ibvs

#endif  // FOGSERVO_IBVS_H_
