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

#ifndef FOGSERVO_PACKET_H_
#define FOGSERVO_PACKET_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "fogservo/common.h"

namespace fogservo::nodes {

// Datagram layout, all multi-byte fields big-endian:
//   0  magic     'F' 'R' (0x46 0x52)
//   2  version   u8 = 1
//   3  msg_type  u8
//   4  seq       u32
//   8  send_ts   u64, microseconds
//  16  payload_len u16
//  18  payload
constexpr std::uint8_t kMagic0 = 0x46;
constexpr std::uint8_t kMagic1 = 0x52;
constexpr std::uint8_t kVersion = 1;
constexpr std::size_t kHeaderSize = 18;
constexpr std::size_t kMaxPacket = 512;

enum class MsgType : std::uint8_t {
  kVelocity = 0x01,
  kHeight = 0x02,
  kGrasp = 0x03,
  kTagObservation = 0x04,
  kMode = 0x05,
  kTelemetry = 0x06,
};

struct VelocityCmd {
  float forward = 0.0f;  // m/s
  float yaw = 0.0f;      // rad/s
  bool operator==(const VelocityCmd&) const = default;
};

struct HeightCmd {
  float rate = 0.0f;  // m/s
  bool operator==(const HeightCmd&) const = default;
};

struct GraspCmd {
  bool operator==(const GraspCmd&) const = default;
};

struct TagObservationMsg {
  bool visible = false;
  float center_x = 0.0f;
  float center_y = 0.0f;
  float side_px = 0.0f;
  std::uint64_t capture_ts = 0;
  bool operator==(const TagObservationMsg&) const = default;
};

enum class Mode : std::uint8_t { kTeleop = 0, kAuto = 1 };

struct ModeCmd {
  Mode mode = Mode::kTeleop;
  bool operator==(const ModeCmd&) const = default;
};

// Edge state uplink.
struct TelemetryMsg {
  float x = 0.0f;
  float y = 0.0f;
  float heading = 0.0f;
  float psi = 0.0f;
  float psi_dot = 0.0f;
  float v = 0.0f;
  float height = 0.0f;
  float body_pitch = 0.0f;
  bool fallen = false;
  bool grasping = false;
  std::uint8_t grasp_status = 0;
  Mode mode = Mode::kTeleop;
  bool operator==(const TelemetryMsg&) const = default;
};

using Payload = std::variant<VelocityCmd, HeightCmd, GraspCmd,
                             TagObservationMsg, ModeCmd, TelemetryMsg>;

struct Packet {
  std::uint32_t seq = 0;
  std::uint64_t send_ts = 0;
  Payload payload;

  MsgType type() const;
  bool operator==(const Packet&) const = default;
};

enum class DecodeErrorCode {
  kTruncated,
  kBadMagic,
  kBadVersion,
  kUnknownType,
  kLengthMismatch,
  kBadPayload,
};

std::string_view Name(DecodeErrorCode code);

class DecodeError : public Error {
 public:
  DecodeError(DecodeErrorCode code, const std::string& detail)
      : Error(std::string(Name(code)) + ": " + detail), code_(code) {}
  DecodeErrorCode code() const { return code_; }

 private:
  DecodeErrorCode code_;
};

std::size_t PayloadSize(MsgType type);
std::vector<std::uint8_t> Encode(const Packet& packet);
// Throws DecodeError; never reads past `bytes`.
Packet Decode(std::span<const std::uint8_t> bytes);

}  // namespace fogservo::nodes

#endif  // FOGSERVO_PACKET_H_
