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

#ifndef FOGSERVO_UDP_H_
#define FOGSERVO_UDP_H_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "fogservo/netsim.h"

namespace fogservo::netsim {

// Non-copyable IPv4 datagram socket bound to 127.0.0.1.
class UdpSocket {
 public:
  // Port 0 picks an ephemeral port. Throws Error on socket failures.
  explicit UdpSocket(std::uint16_t port = 0);
  ~UdpSocket();
  UdpSocket(UdpSocket&& other) noexcept;
  UdpSocket& operator=(UdpSocket&& other) noexcept;
  UdpSocket(const UdpSocket&) = delete;
  UdpSocket& operator=(const UdpSocket&) = delete;

  std::uint16_t port() const { return port_; }
  int fd() const { return fd_; }
  void SendTo(std::span<const std::uint8_t> datagram, std::uint16_t port) const;
  std::optional<std::vector<std::uint8_t>> Receive(
      std::chrono::microseconds timeout) const;

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

// Loopback shaping proxy: datagrams sent to port() are forwarded to
// `destination` after the LinkShaper's delay, or dropped. Runs its own
// receive thread; stats are safe to read from any thread.
class ShapingProxy {
 public:
  ShapingProxy(const LinkProfile& profile, std::uint16_t destination);
  ~ShapingProxy();
  ShapingProxy(const ShapingProxy&) = delete;
  ShapingProxy& operator=(const ShapingProxy&) = delete;

  std::uint16_t port() const { return in_.port(); }
  LinkStats stats() const;

 private:
  struct Pending {
    Micros due;
    std::uint64_t order;
    std::vector<std::uint8_t> bytes;
    bool moved = false;  // holds a datagram already swapped once
  };

  void Run();
  Micros Now() const;

  UdpSocket in_;
  UdpSocket out_;
  std::uint16_t destination_;
  LinkShaper shaper_;
  std::chrono::steady_clock::time_point epoch_;
  mutable std::mutex mu_;
  LinkStats stats_;
  std::vector<Pending> pending_;
  std::uint64_t next_order_ = 0;
  std::atomic<bool> stop_{false};
  std::thread thread_;
};

}  // namespace fogservo::netsim

#endif  // FOGSERVO_UDP_H_
