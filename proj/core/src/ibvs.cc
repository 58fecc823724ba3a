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

#include "fogservo/ibvs.h"

#include <algorithm>
#include <cmath>

#include <Eigen/QR>

namespace fogservo::ibvs {

InteractionMatrix PointInteractionMatrix(double x, double y, double depth) {
  if (!(depth > 0.0)) throw InvalidDepth("depth must be positive");
  const double inv_z = 1.0 / depth;
  InteractionMatrix l;
  l << -inv_z, 0.0, x * inv_z, x * y, -(1.0 + x * x), y,
      0.0, -inv_z, y * inv_z, 1.0 + y * y, -x * y, -x;
  return l;
}

PseudoInverseMatrix PseudoInverse(const InteractionMatrix& l) {
  const Eigen::Matrix<double, 6, 2> lt = l.transpose();
  Eigen::HouseholderQR<Eigen::Matrix<double, 6, 2>> qr(lt);
  const Eigen::Matrix<double, 6, 2> q =
      qr.householderQ() * Eigen::Matrix<double, 6, 2>::Identity();
  const Eigen::Matrix2d r =
      qr.matrixQR().topRows<2>().triangularView<Eigen::Upper>();
  const double scale = std::max(std::abs(r(0, 0)), std::abs(r(1, 1)));
  if (!(scale > 0.0) || !std::isfinite(scale) ||
      std::min(std::abs(r(0, 0)), std::abs(r(1, 1))) <= 1e-12 * scale) {
    throw DegenerateGeometry("interaction matrix is rank deficient");
  }
  // R^-T for upper-triangular R.
  Eigen::Matrix2d r_inv_t;
  r_inv_t << 1.0 / r(0, 0), 0.0,
      -r(0, 1) / (r(0, 0) * r(1, 1)), 1.0 / r(1, 1);
  return q * r_inv_t;
}

RobotEffort ToRobot(const Twist& effort, const ActuatorLimits& limits) {
  RobotEffort out;
  out.forward = std::clamp(-effort(2), -limits.forward, limits.forward);
  out.yaw_rate = std::clamp(effort(4), -limits.yaw_rate, limits.yaw_rate);
  out.height_rate =
      std::clamp(effort(1), -limits.height_rate, limits.height_rate);
  return out;
}

ControlOutput ControlLaw(const FeatureError& error, double lambda,
                         const ActuatorLimits& limits) {
  if (!(lambda > 0.0)) throw InvalidParameter("gain must be positive");
  const InteractionMatrix l =
      PointInteractionMatrix(error.s.x(), error.s.y(), error.depth);
  ControlOutput out;
  out.camera_twist = -lambda * (PseudoInverse(l) * error.e());
  out.effort = -out.camera_twist;
  out.robot = ToRobot(out.effort, limits);
  return out;
}

}  // namespace fogservo::ibvs
