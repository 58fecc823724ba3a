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


// Independent reference computations used as test oracles. None of these
// call into the code under test except where noted (the finite-difference
// Jacobian re-projects through the vision module by design).

#ifndef FOGSERVO_TESTS_ORACLES_H_
#define FOGSERVO_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "fogservo/vision.h"

namespace fogservo::oracle {

// Plain scalar sums, no vectors: sum(m x) / sum(m), sum(m y) / sum(m).
inline Eigen::Vector2d BruteForceCom(const std::vector<double>& m,
                                     const std::vector<double>& x,
                                     const std::vector<double>& y) {
  double total = 0.0;
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    total += m[i];
    mx += m[i] * x[i];
    my += m[i] * y[i];
  }
  return {mx / total, my / total};
}

// Moore-Penrose inverse from a full SVD, independent of any QR path.
template <int R, int C>
Eigen::Matrix<double, C, R> SvdPseudoInverse(
    const Eigen::Matrix<double, R, C>& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(a),
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double tol = 1e-12 * std::max(R, C) * s(0);
  Eigen::MatrixXd sinv = Eigen::MatrixXd::Zero(C, R);
  for (int i = 0; i < s.size(); ++i) {
    if (s(i) > tol) sinv(i, i) = 1.0 / s(i);
  }
  return svd.matrixV() * sinv * svd.matrixU().transpose();
}

// Pendulum on a servoed wheel: psi, psi_dot and the axle speed. The wheel
// speed relaxes to the commanded T with time constant tau.
struct PendulumParams {
  double g = 9.81;
  double length = 0.5;
  double tau = 0.05;
};

struct PendulumState {
  double psi = 0.0;
  double psi_dot = 0.0;
  double v_wheel = 0.0;
};

inline PendulumState Derivative(const PendulumParams& p,
                                const PendulumState& s, double t_cmd) {
  const double a = (t_cmd - s.v_wheel) / p.tau;
  return {s.psi_dot,
          p.g / p.length * std::sin(s.psi) - a / p.length * std::cos(s.psi),
          a};
}

// Classical RK4 with the command held constant over `h`.
inline PendulumState Rk4Step(const PendulumParams& p, const PendulumState& s,
                             double t_cmd, double h) {
  auto add = [](const PendulumState& a, const PendulumState& b, double k) {
    return PendulumState{a.psi + k * b.psi, a.psi_dot + k * b.psi_dot,
                         a.v_wheel + k * b.v_wheel};
  };
  const auto k1 = Derivative(p, s, t_cmd);
  const auto k2 = Derivative(p, add(s, k1, h / 2), t_cmd);
  const auto k3 = Derivative(p, add(s, k2, h / 2), t_cmd);
  const auto k4 = Derivative(p, add(s, k3, h), t_cmd);
  return {s.psi + h / 6 * (k1.psi + 2 * k2.psi + 2 * k3.psi + k4.psi),
          s.psi_dot + h / 6 *
                          (k1.psi_dot + 2 * k2.psi_dot + 2 * k3.psi_dot +
                           k4.psi_dot),
          s.v_wheel + h / 6 *
                          (k1.v_wheel + 2 * k2.v_wheel + 2 * k3.v_wheel +
                           k4.v_wheel)};
}

// Balance law written out from its definition: lean-rate setpoint from the
// velocity error, axle acceleration that drives psi and psi_dot to it, and
// the wheel command T = v - psi_dot L.
struct BalanceGains {
  double k_v = 0.25;
  double k_lean = 20.0;
  double k_rate = 8.0;
  double t_max = 2.0;
};

inline double BalanceLaw(const PendulumParams& p, const BalanceGains& k,
                         const PendulumState& s, double v_des) {
  const double v_com = s.v_wheel + s.psi_dot * p.length * std::cos(s.psi);
  const double rate_target = k.k_v * (v_des - v_com);
  const double accel =
      p.g * std::tan(s.psi) +
      p.length / std::cos(s.psi) *
          (k.k_lean * s.psi + k.k_rate * (s.psi_dot - rate_target));
  const double v = v_com + p.tau * accel;
  return std::clamp(v - s.psi_dot * p.length, -k.t_max, k.t_max);
}

// Skew-symmetric matrix of w.
inline Eigen::Matrix3d Hat(const Eigen::Vector3d& w) {
  Eigen::Matrix3d m;
  m << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return m;
}

// Pose of a camera moved by `twist` (camera frame, v then w) for unit time.
inline vision::CameraPose Moved(const vision::CameraPose& pose,
                                const Eigen::Matrix<double, 6, 1>& twist) {
  vision::CameraPose out;
  const Eigen::Vector3d w = twist.tail<3>();
  const double angle = w.norm();
  const Eigen::Matrix3d r =
      angle > 0.0 ? Eigen::AngleAxisd(angle, w / angle).toRotationMatrix()
                  : Eigen::Matrix3d::Identity();
  out.rotation = pose.rotation * r;
  out.position = pose.position + pose.rotation * twist.head<3>();
  return out;
}

// Central-difference Jacobian of the normalised image point of world point
// `p` with respect to camera twists, by re-projecting through the vision
// module.
inline Eigen::Matrix<double, 2, 6> FiniteDifferenceInteraction(
    const vision::CameraPose& pose, const Eigen::Vector3d& p, double delta) {
  Eigen::Matrix<double, 2, 6> j;
  for (int k = 0; k < 6; ++k) {
    Eigen::Matrix<double, 6, 1> d = Eigen::Matrix<double, 6, 1>::Zero();
    d(k) = delta;
    const Eigen::Vector2d plus = vision::Normalize(Moved(pose, d).ToCamera(p));
    const Eigen::Vector2d minus =
        vision::Normalize(Moved(pose, -d).ToCamera(p));
    j.col(k) = (plus - minus) / (2.0 * delta);
  }
  return j;
}

}  // namespace fogservo::oracle

#endif  // FOGSERVO_TESTS_ORACLES_H_
