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

#include "fogservo/netsim.h"

#include <algorithm>
#include <cmath>
#include <utility>

namespace fogservo::netsim {

void LinkProfile::Validate() const {
  if (!(latency_ms >= 0.0)) throw InvalidParameter("latency must be >= 0");
  if (!(jitter_ms >= 0.0)) throw InvalidParameter("jitter must be >= 0");
  if (!(drop >= 0.0 && drop <= 1.0)) {
    throw InvalidParameter("drop probability outside [0, 1]");
  }
  if (!(reorder >= 0.0 && reorder <= 1.0)) {
    throw InvalidParameter("reorder probability outside [0, 1]");
  }
  if (!(lognormal_sigma >= 0.0)) {
    throw InvalidParameter("lognormal sigma must be >= 0");
  }
}

LinkShaper::LinkShaper(const LinkProfile& profile)
    : profile_(profile), rng_(profile.seed) {
  profile_.Validate();
}

LinkShaper::Decision LinkShaper::Decide(Micros now) {
  const double u_drop = rng_.Uniform();
  const double u_jitter = rng_.Uniform();
  const double u_reorder = rng_.Uniform();
  // Normal draw only for the lognormal model, so uniform-mode schedules are
  // not perturbed by the extra stream.
  double delay_ms = profile_.latency_ms;
  if (profile_.jitter_model == JitterModel::kUniform) {
    delay_ms += profile_.jitter_ms * (2.0 * u_jitter - 1.0);
  } else {
    delay_ms += profile_.jitter_ms *
                std::exp(profile_.lognormal_sigma * rng_.Normal());
  }
  Decision d;
  d.dropped = u_drop < profile_.drop;
  d.deliver_at = now + std::max<Micros>(0, FromMillis(delay_ms));
  d.swap_with_previous = u_reorder < profile_.reorder;
  return d;
}

void VirtualClock::Schedule(Micros at, Callback cb) {
  queue_.push(Event{std::max(at, now_), next_order_++, std::move(cb)});
}

std::size_t VirtualClock::RunUntil(Micros t_end) {
  std::size_t fired = 0;
  while (!queue_.empty() && queue_.top().at <= t_end) {
    Event ev = queue_.top();
    queue_.pop();
    now_ = ev.at;
    ev.cb();
    ++fired;
  }
  now_ = std::max(now_, t_end);
  return fired;
}

VirtualLink::VirtualLink(std::string name, VirtualClock& clock,
                         const LinkProfile& profile, Receiver receiver)
    : name_(std::move(name)),
      clock_(clock),
      shaper_(profile),
      receiver_(std::move(receiver)) {}

VirtualLink::SendResult VirtualLink::Send(
    std::span<const std::uint8_t> datagram, Micros now) {
  if (datagram.size() > kMaxDatagram) {
    throw DatagramTooLarge("datagram of " + std::to_string(datagram.size()) +
                           " bytes exceeds " + std::to_string(kMaxDatagram));
  }
  const LinkShaper::Decision d = shaper_.Decide(now);
  SendResult result;
  result.seq = stats_.sent++;
  log_.push_back(DeliveryRecord{result.seq, now, std::nullopt, d.dropped,
                                datagram.size()});
  if (d.dropped) {
    ++stats_.dropped;
    return result;
  }
  auto slot = std::make_shared<Slot>();
  slot->bytes.assign(datagram.begin(), datagram.end());
  slot->log_index = log_.size() - 1;
  slot->deliver_at = d.deliver_at;
  result.deliver_at = d.deliver_at;
  if (d.swap_with_previous) {
    // Exchange payloads with the previous in-flight datagram: the older one
    // takes this slot's (later) delivery time.
    if (auto prev = previous_.lock(); prev && !prev->delivered) {
      std::swap(prev->bytes, slot->bytes);
      std::swap(prev->log_index, slot->log_index);
      result.deliver_at = prev->deliver_at;
      ++stats_.reordered;
      // The older datagram now sits in this slot; it must not move again.
      clock_.Schedule(d.deliver_at, [this, slot] { Deliver(slot); });
      previous_.reset();
      return result;
    }
  }
  previous_ = slot;
  clock_.Schedule(d.deliver_at, [this, slot] { Deliver(slot); });
  return result;
}

void VirtualLink::Deliver(const std::shared_ptr<Slot>& slot) {
  slot->delivered = true;
  log_[slot->log_index].t_deliver = clock_.now();
  ++stats_.delivered;
  if (receiver_) receiver_(slot->bytes, clock_.now());
}

}  // namespace fogservo::netsim
