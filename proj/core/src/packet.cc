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

#include "fogservo/packet.h"

#include <bit>
#include <string>
#include <type_traits>

namespace fogservo::nodes {
namespace {

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

  void U8(std::uint8_t v) { out_.push_back(v); }
  void U16(std::uint16_t v) {
    U8(static_cast<std::uint8_t>(v >> 8));
    U8(static_cast<std::uint8_t>(v));
  }
  void U32(std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) {
      U8(static_cast<std::uint8_t>(v >> shift));
    }
  }
  void U64(std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) {
      U8(static_cast<std::uint8_t>(v >> shift));
    }
  }
  void F32(float v) { U32(std::bit_cast<std::uint32_t>(v)); }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t U8() {
    Need(1);
    return in_[pos_++];
  }
  std::uint16_t U16() {
    const auto hi = U8();
    return static_cast<std::uint16_t>((hi << 8) | U8());
  }
  std::uint32_t U32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | U8();
    return v;
  }
  std::uint64_t U64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | U8();
    return v;
  }
  float F32() { return std::bit_cast<float>(U32()); }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void Need(std::size_t n) const {
    if (in_.size() - pos_ < n) {
      throw DecodeError(DecodeErrorCode::kTruncated, "unexpected end of buffer");
    }
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

bool Flag(std::uint8_t v) {
  if (v > 1) throw DecodeError(DecodeErrorCode::kBadPayload, "bad flag byte");
  return v == 1;
}

}  // namespace

std::string_view Name(DecodeErrorCode code) {
  switch (code) {
    case DecodeErrorCode::kTruncated: return "truncated";
    case DecodeErrorCode::kBadMagic: return "bad magic";
    case DecodeErrorCode::kBadVersion: return "bad version";
    case DecodeErrorCode::kUnknownType: return "unknown message type";
    case DecodeErrorCode::kLengthMismatch: return "payload length mismatch";
    case DecodeErrorCode::kBadPayload: return "bad payload";
  }
  return "decode error";
}

MsgType Packet::type() const {
  return std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, VelocityCmd>) return MsgType::kVelocity;
        if constexpr (std::is_same_v<T, HeightCmd>) return MsgType::kHeight;
        if constexpr (std::is_same_v<T, GraspCmd>) return MsgType::kGrasp;
        if constexpr (std::is_same_v<T, TagObservationMsg>)
          return MsgType::kTagObservation;
        if constexpr (std::is_same_v<T, ModeCmd>) return MsgType::kMode;
        if constexpr (std::is_same_v<T, TelemetryMsg>) return MsgType::kTelemetry;
      },
      payload);
}

std::size_t PayloadSize(MsgType type) {
  switch (type) {
    case MsgType::kVelocity: return 8;
    case MsgType::kHeight: return 4;
    case MsgType::kGrasp: return 0;
    case MsgType::kTagObservation: return 1 + 4 + 4 + 4 + 8;
    case MsgType::kMode: return 1;
    case MsgType::kTelemetry: return 8 * 4 + 4;
  }
  throw DecodeError(DecodeErrorCode::kUnknownType, "unknown message type");
}

std::vector<std::uint8_t> Encode(const Packet& packet) {
  const MsgType type = packet.type();
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + PayloadSize(type));
  Writer w(out);
  w.U8(kMagic0);
  w.U8(kMagic1);
  w.U8(kVersion);
  w.U8(static_cast<std::uint8_t>(type));
  w.U32(packet.seq);
  w.U64(packet.send_ts);
  w.U16(static_cast<std::uint16_t>(PayloadSize(type)));
  std::visit(
      [&w](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, VelocityCmd>) {
          w.F32(p.forward);
          w.F32(p.yaw);
        } else if constexpr (std::is_same_v<T, HeightCmd>) {
          w.F32(p.rate);
        } else if constexpr (std::is_same_v<T, TagObservationMsg>) {
          w.U8(p.visible ? 1 : 0);
          w.F32(p.center_x);
          w.F32(p.center_y);
          w.F32(p.side_px);
          w.U64(p.capture_ts);
        } else if constexpr (std::is_same_v<T, ModeCmd>) {
          w.U8(static_cast<std::uint8_t>(p.mode));
        } else if constexpr (std::is_same_v<T, TelemetryMsg>) {
          for (float f : {p.x, p.y, p.heading, p.psi, p.psi_dot, p.v, p.height,
                          p.body_pitch}) {
            w.F32(f);
          }
          w.U8(p.fallen ? 1 : 0);
          w.U8(p.grasping ? 1 : 0);
          w.U8(p.grasp_status);
          w.U8(static_cast<std::uint8_t>(p.mode));
        }
      },
      packet.payload);
  return out;
}

Packet Decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() > kMaxPacket) {
    throw DecodeError(DecodeErrorCode::kLengthMismatch, "datagram too long");
  }
  Reader r(bytes);
  const std::uint8_t m0 = r.U8();
  const std::uint8_t m1 = r.U8();
  if (m0 != kMagic0 || m1 != kMagic1) {
    throw DecodeError(DecodeErrorCode::kBadMagic, "expected 'FR'");
  }
  if (r.U8() != kVersion) {
    throw DecodeError(DecodeErrorCode::kBadVersion, "unsupported version");
  }
  const std::uint8_t raw_type = r.U8();
  if (raw_type < 0x01 || raw_type > 0x06) {
    throw DecodeError(DecodeErrorCode::kUnknownType,
                      "type " + std::to_string(raw_type));
  }
  const auto type = static_cast<MsgType>(raw_type);
  Packet p;
  p.seq = r.U32();
  p.send_ts = r.U64();
  const std::uint16_t len = r.U16();
  if (len != r.remaining()) {
    throw DecodeError(len > r.remaining() ? DecodeErrorCode::kTruncated
                                          : DecodeErrorCode::kLengthMismatch,
                      "payload_len " + std::to_string(len) + " with " +
                          std::to_string(r.remaining()) + " bytes present");
  }
  if (len != PayloadSize(type)) {
    throw DecodeError(DecodeErrorCode::kLengthMismatch,
                      "wrong payload size for message type");
  }
  switch (type) {
    case MsgType::kVelocity: {
      VelocityCmd v;
      v.forward = r.F32();
      v.yaw = r.F32();
      p.payload = v;
      break;
    }
    case MsgType::kHeight:
      p.payload = HeightCmd{r.F32()};
      break;
    case MsgType::kGrasp:
      p.payload = GraspCmd{};
      break;
    case MsgType::kTagObservation: {
      TagObservationMsg o;
      o.visible = Flag(r.U8());
      o.center_x = r.F32();
      o.center_y = r.F32();
      o.side_px = r.F32();
      o.capture_ts = r.U64();
      p.payload = o;
      break;
    }
    case MsgType::kMode: {
      const std::uint8_t m = r.U8();
      if (m > 1) throw DecodeError(DecodeErrorCode::kBadPayload, "bad mode");
      p.payload = ModeCmd{static_cast<Mode>(m)};
      break;
    }
    case MsgType::kTelemetry: {
      TelemetryMsg t;
      for (float* f : {&t.x, &t.y, &t.heading, &t.psi, &t.psi_dot, &t.v,
                       &t.height, &t.body_pitch}) {
        *f = r.F32();
      }
      t.fallen = Flag(r.U8());
      t.grasping = Flag(r.U8());
      t.grasp_status = r.U8();
      if (t.grasp_status > 3) {
        throw DecodeError(DecodeErrorCode::kBadPayload, "bad grasp status");
      }
      const std::uint8_t m = r.U8();
      if (m > 1) throw DecodeError(DecodeErrorCode::kBadPayload, "bad mode");
      t.mode = static_cast<Mode>(m);
      p.payload = t;
      break;
    }
  }
  return p;
}

}  // namespace fogservo::nodes
