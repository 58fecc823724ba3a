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

#ifndef FOGSERVO_HEARTBEAT_H_
#define FOGSERVO_HEARTBEAT_H_

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string_view>

#include "fogservo/common.h"

namespace fogservo::heartbeat {

enum class CommandType : std::uint8_t {
  kForward,
  kBackward,
  kTurnLeft,
  kTurnRight,
  kHeightUp,
  kHeightDown,
  kGrasp,
  kAutoMode,
};

std::string_view Name(CommandType type);

// Linear on/off shaping of a heartbeat signal.
struct RampShape {
  Micros rise = 200 * kMicrosPerMilli;
  Micros fall = 100 * kMicrosPerMilli;

  // Throws InvalidParameter unless 0 < fall < rise.
  void Validate() const;
};

constexpr Micros kDefaultWindow = 250 * kMicrosPerMilli;

// Worst-case delay from the last received packet to zero output.
constexpr Micros StopLatencyBound(Micros window, const RampShape& shape) {
  return window + shape.fall;
}

struct CommandSample {
  std::uint32_t seq = 0;
  double magnitude = 0.0;
};

struct ChannelStats {
  std::uint64_t accepted = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t stale = 0;     // older seq than the latched one
  std::uint64_t rejected = 0;  // malformed payload
};

// Tracks which sequence numbers were already seen, within a 64-packet
// horizon behind the newest one. Serial-number arithmetic handles wrap.
class SeqFilter {
 public:
  enum class Result { kNew, kOlder, kDuplicate };

  Result Check(std::uint32_t seq) const;
  void Remember(std::uint32_t seq);

 private:
  bool have_seq_ = false;
  std::uint32_t newest_ = 0;
  std::uint64_t mask_ = 0;  // bit i: newest_ - i was received
};

// Online estimate of packet inter-arrival statistics. The suggested window
// is mean + 3 sigma, clamped to [min_window, max_window].
class AdaptiveWindow {
 public:
  AdaptiveWindow(Micros min_window, Micros max_window,
                 std::uint32_t min_samples = 8)
      : min_window_(min_window),
        max_window_(max_window),
        min_samples_(min_samples) {}

  void Observe(Micros arrival);
  std::optional<Micros> Suggest() const;
  std::uint64_t samples() const { return count_; }
  double mean_us() const { return mean_; }
  double stddev_us() const;

 private:
  Micros min_window_;
  Micros max_window_;
  std::uint32_t min_samples_;
  std::optional<Micros> last_;
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Reconstructs a continuous control signal for one command type from a lossy
// packet stream. The channel is on while the latest arrival is younger than
// the window; its output is the latched magnitude scaled by a ramp that
// rises while on and falls while off.
//
// Single writer (Ingest) and single reader (Sample); both must be called with
// non-decreasing `now`.
class HeartbeatChannel {
 public:
  HeartbeatChannel(CommandType type, Micros window = kDefaultWindow,
                   RampShape shape = RampShape{});

  // Returns false for rejected packets (non-finite or negative magnitude).
  bool Ingest(const CommandSample& cmd, Micros now);
  double Sample(Micros now);

  bool Active(Micros now) const;
  CommandType type() const { return type_; }
  Micros window() const { return window_; }
  const RampShape& shape() const { return shape_; }
  std::optional<Micros> last_seen() const { return last_seen_; }
  double latched_value() const { return latched_; }
  double ramp_position() const {
    return static_cast<double>(ramp_) / static_cast<double>(RampFull());
  }
  const ChannelStats& stats() const { return stats_; }

  // Turns on window adaptation from observed inter-arrival times.
  void EnableAdaptiveWindow(Micros min_window, Micros max_window);
  const std::optional<AdaptiveWindow>& adaptive() const { return adaptive_; }

 private:
  void Advance(Micros now);

  CommandType type_;
  Micros window_;
  RampShape shape_;
  std::optional<Micros> last_seen_;
  double latched_ = 0.0;
  // Ramp position in units of 1 / (rise * fall) so both slopes are integral
  // and the output reaches exactly zero and one.
  std::int64_t RampFull() const {
    return std::max<Micros>(shape_.rise, 1) * std::max<Micros>(shape_.fall, 1);
  }
  std::int64_t ramp_ = 0;
  Micros updated_at_ = 0;
  SeqFilter seqs_;
  Micros default_window_;
  ChannelStats stats_;
  std::optional<AdaptiveWindow> adaptive_;
};

// Single-shot command (grasp, mode switch). Every distinct sequence number
// fires at most once; retransmissions with a new seq fire again, so callers
// decide whether a pending trigger is still meaningful.
class EdgeTrigger {
 public:
  explicit EdgeTrigger(CommandType type) : type_(type) {}

  bool Ingest(const CommandSample& cmd, Micros now);
  // Consumes the pending trigger, if any.
  std::optional<CommandSample> Take();
  CommandType type() const { return type_; }
  std::uint64_t fired() const { return fired_; }
  std::optional<Micros> last_fired_at() const { return last_at_; }

 private:
  CommandType type_;
  SeqFilter seqs_;
  std::optional<CommandSample> pending_;
  std::uint64_t fired_ = 0;
  std::optional<Micros> last_at_;
};

}  // namespace fogservo::heartbeat

#endif  // FOGSERVO_HEARTBEAT_H_
