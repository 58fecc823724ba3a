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

#include "fogservo/vision.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include <Eigen/Geometry>

namespace fogservo::vision {

void CameraModel::Validate() const {
  if (!(focal_px > 0.0)) throw InvalidParameter("focal length must be > 0");
  if (width <= 0 || height <= 0) throw InvalidParameter("empty image size");
}

CameraPose PoseOnRobot(const CameraModel& camera,
                       const dynamics::BodyPose& body, double wheel_radius) {
  const double ch = std::cos(body.heading);
  const double sh = std::sin(body.heading);
  const Eigen::Vector3d fwd(ch, sh, 0.0);
  const Eigen::Vector3d left(-sh, ch, 0.0);
  const Eigen::Vector3d up(0.0, 0.0, 1.0);
  const double cp = std::cos(body.body_pitch);
  const double sp = std::sin(body.body_pitch);
  // Upright body coordinates (forward, left, up) to world directions, with
  // the body pitched about the axle.
  auto to_world = [&](const Eigen::Vector3d& v) -> Eigen::Vector3d {
    const double f = v.x() * cp + v.z() * sp;
    const double u = -v.x() * sp + v.z() * cp;
    return f * fwd + v.y() * left + u * up;
  };

  const Eigen::Vector3d axle(body.ground_pos.x(), body.ground_pos.y(),
                             wheel_radius);
  const Eigen::Vector3d hip(0.0, 0.0, body.body_height - wheel_radius);

  const double p = camera.mount_pitch;
  const double y = camera.mount_yaw;
  const Eigen::Vector3d z_axis(std::cos(p) * std::cos(y),
                               std::cos(p) * std::sin(y), -std::sin(p));
  const Eigen::Vector3d x_axis(std::sin(y), -std::cos(y), 0.0);
  const Eigen::Vector3d y_axis = z_axis.cross(x_axis);

  CameraPose pose;
  pose.position = axle + to_world(hip + camera.mount_position);
  pose.rotation.col(0) = to_world(x_axis);
  pose.rotation.col(1) = to_world(y_axis);
  pose.rotation.col(2) = to_world(z_axis);
  return pose;
}

std::array<Eigen::Vector3d, 4> TagTarget::Corners() const {
  const Eigen::Vector3d n = normal.normalized();
  Eigen::Vector3d up = Eigen::Vector3d::UnitZ() - n.z() * n;
  if (up.norm() < 1e-9) up = Eigen::Vector3d::UnitX() - n.x() * n;
  up.normalize();
  // Right as seen by a viewer looking at the printed face (along -n).
  const Eigen::Vector3d right = (-n).cross(up);
  const double h = 0.5 * side;
  return {position - h * right + h * up, position + h * right + h * up,
          position + h * right - h * up, position - h * right - h * up};
}

Eigen::Vector2d Normalize(const Eigen::Vector3d& p) {
  return {p.x() / p.z(), p.y() / p.z()};
}

Eigen::Vector2d ToPixel(const CameraModel& camera, const Eigen::Vector3d& p) {
  return camera.focal_px * Normalize(p) + camera.principal_point();
}

Eigen::Vector2d PixelToNormalized(const CameraModel& camera,
                                  const Eigen::Vector2d& pixel) {
  return (pixel - camera.principal_point()) / camera.focal_px;
}

double SideLength(const std::array<Eigen::Vector2d, 4>& c) {
  return 0.5 * ((c[0] - c[3]).norm() + (c[1] - c[2]).norm());
}

TagObservation ProjectFromPose(const CameraModel& camera,
                               const CameraPose& pose, const TagTarget& target,
                               const VisibilityLimits& limits) {
  TagObservation obs;
  const auto corners = target.Corners();
  bool visible = true;
  for (std::size_t i = 0; i < corners.size(); ++i) {
    const Eigen::Vector3d pc = pose.ToCamera(corners[i]);
    if (!(pc.z() > limits.min_depth && pc.z() <= limits.max_depth)) {
      return obs;
    }
    obs.corners[i] = ToPixel(camera, pc);
    const Eigen::Vector2d& px = obs.corners[i];
    if (px.x() < 0.0 || px.x() > camera.width || px.y() < 0.0 ||
        px.y() > camera.height) {
      visible = false;
    }
  }
  const Eigen::Vector3d to_camera =
      (pose.position - target.position).normalized();
  const double cos_view =
      std::clamp(to_camera.dot(target.normal.normalized()), -1.0, 1.0);
  if (std::acos(cos_view) > limits.max_view_angle) visible = false;

  obs.center = ToPixel(camera, pose.ToCamera(target.position));
  obs.side_px = SideLength(obs.corners);
  obs.visible = visible && obs.side_px > 0.0;
  return obs;
}

TagObservation Project(const CameraModel& camera,
                       const dynamics::BodyPose& body, double wheel_radius,
                       const TagTarget& target,
                       const VisibilityLimits& limits) {
  return ProjectFromPose(camera, PoseOnRobot(camera, body, wheel_radius),
                         target, limits);
}

double DepthFromSize(const TagObservation& obs, const CameraModel& camera,
                     double side_world) {
  if (!obs.visible) throw NoMeasurement("tag not visible");
  if (!(obs.side_px > 0.0)) throw NoMeasurement("tag has zero pixel size");
  return camera.focal_px * side_world / obs.side_px;
}

RecognitionService::RecognitionService(CameraModel camera, double wheel_radius,
                                       TargetAt target, double rate_hz,
                                       double pixel_noise, std::uint64_t seed,
                                       VisibilityLimits limits)
    : camera_(std::move(camera)),
      wheel_radius_(wheel_radius),
      target_(std::move(target)),
      pixel_noise_(pixel_noise),
      rng_(seed),
      limits_(limits) {
  if (!(rate_hz >= 1.0 && rate_hz <= 10.0)) {
    throw InvalidParameter("recognition rate must be within [1, 10] Hz");
  }
  if (!(pixel_noise >= 0.0)) throw InvalidParameter("pixel noise must be >= 0");
  camera_.Validate();
  period_ = FromSeconds(1.0 / rate_hz);
}

std::optional<TagObservation> RecognitionService::Poll(
    const std::optional<FrameState>& frame, Micros now) {
  if (next_due_ && now < *next_due_) return std::nullopt;
  next_due_ = (next_due_ ? *next_due_ : now) + period_;
  if (*next_due_ <= now) next_due_ = now + period_;
  return Recognize(frame, now);
}

TagObservation RecognitionService::Recognize(
    const std::optional<FrameState>& frame, Micros now) {
  if (!frame) {
    TagObservation none;
    none.timestamp = now;
    return none;
  }
  TagObservation obs = Project(camera_, frame->body, wheel_radius_,
                               target_(frame->capture_time), limits_);
  obs.timestamp = frame->capture_time;
  if (obs.visible && pixel_noise_ > 0.0) {
    Eigen::Vector2d noise_sum = Eigen::Vector2d::Zero();
    for (auto& c : obs.corners) {
      const Eigen::Vector2d n =
          pixel_noise_ * Eigen::Vector2d(rng_.Normal(), rng_.Normal());
      c += n;
      noise_sum += n;
    }
    obs.center += 0.25 * noise_sum;
    obs.side_px = SideLength(obs.corners);
  }
  return obs;
}

}  // namespace fogservo::vision
