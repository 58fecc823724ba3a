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

#include "fogservo/heartbeat.h"

#include <algorithm>
#include <cmath>

namespace fogservo::heartbeat {

std::string_view Name(CommandType type) {
  switch (type) {
    case CommandType::kForward: return "forward";
    case CommandType::kBackward: return "backward";
    case CommandType::kTurnLeft: return "turn_left";
    case CommandType::kTurnRight: return "turn_right";
    case CommandType::kHeightUp: return "height_up";
    case CommandType::kHeightDown: return "height_down";
    case CommandType::kGrasp: return "grasp";
    case CommandType::kAutoMode: return "auto_mode";
  }
  return "unknown";
}

void RampShape::Validate() const {
  if (rise <= 0 || fall <= 0) {
    throw InvalidParameter("ramp times must be positive");
  }
  if (fall >= rise) {
    throw InvalidParameter("fall time must be shorter than rise time");
  }
}

SeqFilter::Result SeqFilter::Check(std::uint32_t seq) const {
  if (!have_seq_) return Result::kNew;
  const auto ahead = static_cast<std::int32_t>(seq - newest_);
  if (ahead > 0) return Result::kNew;
  const auto behind = static_cast<std::uint32_t>(-static_cast<std::int64_t>(ahead));
  if (behind < 64 && (mask_ >> behind) & 1U) return Result::kDuplicate;
  return Result::kOlder;
}

void SeqFilter::Remember(std::uint32_t seq) {
  if (!have_seq_) {
    have_seq_ = true;
    newest_ = seq;
    mask_ = 1;
    return;
  }
  const auto ahead = static_cast<std::int32_t>(seq - newest_);
  if (ahead > 0) {
    mask_ = ahead >= 64 ? 0 : mask_ << ahead;
    mask_ |= 1;
    newest_ = seq;
  } else {
    const auto behind = static_cast<std::uint32_t>(-static_cast<std::int64_t>(ahead));
    if (behind < 64) mask_ |= std::uint64_t{1} << behind;
  }
}

void AdaptiveWindow::Observe(Micros arrival) {
  if (last_ && arrival > *last_) {
    const double gap = static_cast<double>(arrival - *last_);
    ++count_;
    const double delta = gap - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (gap - mean_);
  }
  if (!last_ || arrival > *last_) last_ = arrival;
}

double AdaptiveWindow::stddev_us() const {
  return count_ > 1 ? std::sqrt(m2_ / static_cast<double>(count_ - 1)) : 0.0;
}

std::optional<Micros> AdaptiveWindow::Suggest() const {
  if (count_ < min_samples_) return std::nullopt;
  const double w = mean_ + 3.0 * stddev_us();
  return std::clamp(static_cast<Micros>(std::llround(w)), min_window_,
                    max_window_);
}

HeartbeatChannel::HeartbeatChannel(CommandType type, Micros window,
                                   RampShape shape)
    : type_(type), window_(window), shape_(shape), default_window_(window) {
  if (window < 0) throw InvalidParameter("window must be non-negative");
  if (shape.rise < 0 || shape.fall < 0) {
    throw InvalidParameter("ramp times must be non-negative");
  }
}

void HeartbeatChannel::EnableAdaptiveWindow(Micros min_window,
                                            Micros max_window) {
  if (min_window > max_window) throw InvalidParameter("empty window range");
  adaptive_.emplace(min_window, max_window);
}

bool HeartbeatChannel::Active(Micros now) const {
  return last_seen_ && now - *last_seen_ < window_;
}

void HeartbeatChannel::Advance(Micros now) {
  if (now <= updated_at_) return;
  Micros t = updated_at_;
  if (last_seen_) {
    const Micros expiry = *last_seen_ + window_;
    if (t < expiry) {
      const Micros on_end = std::min(now, expiry);
      const Micros up = std::max<Micros>(shape_.fall, 1);
      ramp_ = shape_.rise == 0 ? RampFull()
                               : std::min(RampFull(), ramp_ + (on_end - t) * up);
      t = on_end;
    }
  }
  if (t < now) {
    const Micros down = std::max<Micros>(shape_.rise, 1);
    ramp_ = shape_.fall == 0
                ? 0
                : std::max<std::int64_t>(0, ramp_ - (now - t) * down);
  }
  updated_at_ = now;
}

bool HeartbeatChannel::Ingest(const CommandSample& cmd, Micros now) {
  if (!std::isfinite(cmd.magnitude) || cmd.magnitude < 0.0) {
    ++stats_.rejected;
    return false;
  }
  Advance(now);
  switch (seqs_.Check(cmd.seq)) {
    case SeqFilter::Result::kDuplicate:
      ++stats_.duplicates;
      return true;
    case SeqFilter::Result::kOlder:
      // Late arrival still shows the command was held, but must not replace
      // a newer magnitude.
      ++stats_.stale;
      break;
    case SeqFilter::Result::kNew:
      latched_ = cmd.magnitude;
      ++stats_.accepted;
      break;
  }
  seqs_.Remember(cmd.seq);
  if (adaptive_) {
    adaptive_->Observe(now);
    window_ = adaptive_->Suggest().value_or(default_window_);
  }
  last_seen_ = last_seen_ ? std::max(*last_seen_, now) : now;
  return true;
}

double HeartbeatChannel::Sample(Micros now) {
  Advance(now);
  return latched_ * ramp_position();
}

bool EdgeTrigger::Ingest(const CommandSample& cmd, Micros now) {
  if (seqs_.Check(cmd.seq) == SeqFilter::Result::kDuplicate) return false;
  seqs_.Remember(cmd.seq);
  pending_ = cmd;
  ++fired_;
  last_at_ = now;
  return true;
}

std::optional<CommandSample> EdgeTrigger::Take() {
  auto out = pending_;
  pending_.reset();
  return out;
}

}  // namespace fogservo::heartbeat
