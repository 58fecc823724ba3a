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

#ifndef FOGSERVO_VISION_H_
#define FOGSERVO_VISION_H_

#include <array>
#include <functional>
#include <optional>

#include <Eigen/Core>

#include "fogservo/common.h"
#include "fogservo/dynamics.h"

namespace fogservo::vision {

// Pinhole camera with the principal point at the image centre. The mount is
// expressed in the hip frame (forward, left, up) of the robot; pitch is
// positive downward.
struct CameraModel {
  double focal_px = 500.0;
  int width = 640;
  int height = 480;
  Eigen::Vector3d mount_position = Eigen::Vector3d(0.05, 0.0, 0.15);
  double mount_pitch = 10.0 * 3.14159265358979323846 / 180.0;
  double mount_yaw = 0.0;

  Eigen::Vector2d principal_point() const {
    return {0.5 * width, 0.5 * height};
  }
  void Validate() const;
};

// Camera pose in the world. Columns of `rotation` are the camera axes
// (x right, y down, z along the optical axis) in world coordinates.
struct CameraPose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d position = Eigen::Vector3d::Zero();

  Eigen::Vector3d ToCamera(const Eigen::Vector3d& world) const {
    return rotation.transpose() * (world - position);
  }
};

CameraPose PoseOnRobot(const CameraModel& camera,
                       const dynamics::BodyPose& body, double wheel_radius);

// Planar square fiducial. `normal` points out of the printed face.
struct TagTarget {
  Eigen::Vector3d position = Eigen::Vector3d(2.0, 0.0, 0.75);
  Eigen::Vector3d normal = Eigen::Vector3d(-1.0, 0.0, 0.0);
  double side = 0.10;

  // Corners as seen from the front: top-left, top-right, bottom-right,
  // bottom-left.
  std::array<Eigen::Vector3d, 4> Corners() const;
};

struct TagObservation {
  bool visible = false;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();  // px
  double side_px = 0.0;
  std::array<Eigen::Vector2d, 4> corners{};
  Micros timestamp = 0;
};

struct VisibilityLimits {
  double max_view_angle = 25.0 * 3.14159265358979323846 / 180.0;
  double min_depth = 0.1;  // exclusive
  double max_depth = 6.0;  // inclusive
};

// Normalised image coordinates x = X/Z, y = Y/Z.
Eigen::Vector2d Normalize(const Eigen::Vector3d& point_camera);

// Pixel coordinates of a camera-frame point.
Eigen::Vector2d ToPixel(const CameraModel& camera,
                        const Eigen::Vector3d& point_camera);
Eigen::Vector2d PixelToNormalized(const CameraModel& camera,
                                  const Eigen::Vector2d& pixel);

// Pixel side length: mean length of the left and right edges.
double SideLength(const std::array<Eigen::Vector2d, 4>& corners);

TagObservation ProjectFromPose(const CameraModel& camera,
                               const CameraPose& pose, const TagTarget& target,
                               const VisibilityLimits& limits = {});

TagObservation Project(const CameraModel& camera,
                       const dynamics::BodyPose& body, double wheel_radius,
                       const TagTarget& target,
                       const VisibilityLimits& limits = {});

// Z = f * side_world / side_px. Throws NoMeasurement for invisible or
// degenerate observations.
double DepthFromSize(const TagObservation& obs, const CameraModel& camera,
                     double side_world);

// What the cloud recogniser sees: the robot pose of the frame it processes
// and the capture time of that frame.
struct FrameState {
  dynamics::BodyPose body;
  Micros capture_time = 0;
};

// Samples tag observations at a fixed rate from the most recent frame. The
// tag geometry is looked up at the frame's capture time.
class RecognitionService {
 public:
  using TargetAt = std::function<TagTarget(Micros)>;

  RecognitionService(CameraModel camera, double wheel_radius, TargetAt target,
                     double rate_hz, double pixel_noise, std::uint64_t seed,
                     VisibilityLimits limits = {});

  Micros period() const { return period_; }
  const CameraModel& camera() const { return camera_; }

  // Returns an observation when a sample is due at `now`. With no frame yet,
  // the record is invisible (never silence).
  std::optional<TagObservation> Poll(const std::optional<FrameState>& frame,
                                     Micros now);
  // Unconditional sample.
  TagObservation Recognize(const std::optional<FrameState>& frame, Micros now);

 private:
  CameraModel camera_;
  double wheel_radius_;
  TargetAt target_;
  Micros period_;
  double pixel_noise_;
  Rng rng_;
  VisibilityLimits limits_;
  std::optional<Micros> next_due_;
};

}  // namespace fogservo::vision

#endif  // FOGSERVO_VISION_H_
