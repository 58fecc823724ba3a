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

#ifndef FOGSERVO_NETSIM_H_
#define FOGSERVO_NETSIM_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "fogservo/common.h"

namespace fogservo::netsim {

constexpr std::size_t kMaxDatagram = 512;

enum class JitterModel { kUniform, kLogNormal };

// Link impairments. Latency and jitter are in milliseconds. With the uniform
// model jitter is the half-width of U(-jitter, +jitter); with the lognormal
// model the extra delay is jitter * exp(sigma * N(0,1)), always positive.
struct LinkProfile {
  double latency_ms = 0.0;
  double jitter_ms = 0.0;
  double drop = 0.0;
  double reorder = 0.0;
  std::uint64_t seed = 1;
  JitterModel jitter_model = JitterModel::kUniform;
  double lognormal_sigma = 0.5;

  // Throws InvalidParameter on negative latency or out-of-range probability.
  void Validate() const;
};

// Per-datagram fate decided by a seeded stream. Each decision consumes the
// same number of draws, so the schedule of datagram k depends only on seed
// and k.
class LinkShaper {
 public:
  explicit LinkShaper(const LinkProfile& profile);

  struct Decision {
    bool dropped = false;
    Micros deliver_at = 0;
    bool swap_with_previous = false;
  };

  Decision Decide(Micros now);
  const LinkProfile& profile() const { return profile_; }

 private:
  LinkProfile profile_;
  Rng rng_;
};

// Discrete-event clock. Events at equal timestamps fire in scheduling order.
class VirtualClock {
 public:
  using Callback = std::function<void()>;

  Micros now() const { return now_; }
  // `at` earlier than now() is treated as now().
  void Schedule(Micros at, Callback cb);
  // Fires every event with time <= t_end in order (including events that
  // those callbacks schedule inside the horizon), then sets now() = t_end.
  // Returns the number of events fired.
  std::size_t RunUntil(Micros t_end);
  std::size_t pending() const { return queue_.size(); }

 private:
  struct Event {
    Micros at;
    std::uint64_t order;
    Callback cb;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.at != b.at ? a.at > b.at : a.order > b.order;
    }
  };

  Micros now_ = 0;
  std::uint64_t next_order_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
};

struct DeliveryRecord {
  std::uint64_t seq = 0;
  Micros t_send = 0;
  std::optional<Micros> t_deliver;  // empty while in flight
  bool dropped = false;
  std::size_t bytes = 0;
};

struct LinkStats {
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t reordered = 0;
  std::uint64_t in_flight() const { return sent - delivered - dropped; }
};

using Receiver = std::function<void(std::span<const std::uint8_t>, Micros)>;

// One-directional impaired link on a VirtualClock.
class VirtualLink {
 public:
  VirtualLink(std::string name, VirtualClock& clock, const LinkProfile& profile,
              Receiver receiver);

  struct SendResult {
    std::uint64_t seq = 0;
    std::optional<Micros> deliver_at;  // empty when dropped
  };

  // Throws DatagramTooLarge for datagrams over kMaxDatagram bytes.
  SendResult Send(std::span<const std::uint8_t> datagram, Micros now);
  SendResult Send(std::span<const std::uint8_t> datagram) {
    return Send(datagram, clock_.now());
  }

  const std::string& name() const { return name_; }
  const LinkProfile& profile() const { return shaper_.profile(); }
  const LinkStats& stats() const { return stats_; }
  const std::vector<DeliveryRecord>& log() const { return log_; }

 private:
  struct Slot {
    std::vector<std::uint8_t> bytes;
    std::size_t log_index = 0;
    Micros deliver_at = 0;
    bool delivered = false;
  };

  void Deliver(const std::shared_ptr<Slot>& slot);

  std::string name_;
  VirtualClock& clock_;
  LinkShaper shaper_;
  Receiver receiver_;
  LinkStats stats_;
  std::vector<DeliveryRecord> log_;
  std::weak_ptr<Slot> previous_;
};

}  // namespace fogservo::netsim

#endif  // FOGSERVO_NETSIM_H_
