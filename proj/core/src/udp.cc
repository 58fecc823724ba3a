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

#include "fogservo/udp.h"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <string>
#include <utility>

namespace fogservo::netsim {
namespace {

sockaddr_in Loopback(std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  return addr;
}

[[noreturn]] void ThrowErrno(const char* what) {
  throw Error(std::string(what) + ": " + std::strerror(errno));
}

}  // namespace

UdpSocket::UdpSocket(std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) ThrowErrno("socket");
  sockaddr_in addr = Loopback(port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd_);
    ThrowErrno("bind");
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

UdpSocket::~UdpSocket() {
  if (fd_ >= 0) ::close(fd_);
}

UdpSocket::UdpSocket(UdpSocket&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)), port_(other.port_) {}

UdpSocket& UdpSocket::operator=(UdpSocket&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(other.fd_, -1);
    port_ = other.port_;
  }
  return *this;
}

void UdpSocket::SendTo(std::span<const std::uint8_t> datagram,
                       std::uint16_t port) const {
  if (datagram.size() > kMaxDatagram) {
    throw DatagramTooLarge("datagram exceeds " + std::to_string(kMaxDatagram) +
                           " bytes");
  }
  sockaddr_in addr = Loopback(port);
  const ssize_t n =
      ::sendto(fd_, datagram.data(), datagram.size(), 0,
               reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  if (n < 0) ThrowErrno("sendto");
}

std::optional<std::vector<std::uint8_t>> UdpSocket::Receive(
    std::chrono::microseconds timeout) const {
  pollfd pfd{fd_, POLLIN, 0};
  const int ms = static_cast<int>(
      std::max<std::int64_t>(0, (timeout.count() + 999) / 1000));
  const int ready = ::poll(&pfd, 1, ms);
  if (ready <= 0) return std::nullopt;
  std::vector<std::uint8_t> buf(kMaxDatagram + 1);
  const ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
  if (n < 0) return std::nullopt;
  buf.resize(static_cast<std::size_t>(n));
  return buf;
}

ShapingProxy::ShapingProxy(const LinkProfile& profile,
                           std::uint16_t destination)
    : destination_(destination),
      shaper_(profile),
      epoch_(std::chrono::steady_clock::now()),
      thread_([this] { Run(); }) {}

ShapingProxy::~ShapingProxy() {
  stop_ = true;
  if (thread_.joinable()) thread_.join();
}

Micros ShapingProxy::Now() const {
  return std::chrono::duration_cast<std::chrono::microseconds>(
             std::chrono::steady_clock::now() - epoch_)
      .count();
}

LinkStats ShapingProxy::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

void ShapingProxy::Run() {
  auto later = [](const Pending& a, const Pending& b) {
    return a.due != b.due ? a.due > b.due : a.order > b.order;
  };
  while (!stop_) {
    Micros wait = 5'000;
    if (!pending_.empty()) {
      wait = std::clamp<Micros>(pending_.front().due - Now(), 0, 5'000);
    }
    if (auto datagram = in_.Receive(std::chrono::microseconds(wait))) {
      const Micros now = Now();
      const LinkShaper::Decision d = shaper_.Decide(now);
      std::lock_guard lock(mu_);
      ++stats_.sent;
      if (d.dropped || datagram->size() > kMaxDatagram) {
        ++stats_.dropped;
      } else {
        Pending p{d.deliver_at, next_order_++, std::move(*datagram), false};
        if (d.swap_with_previous && !pending_.empty()) {
          // Swap payload with the most recently queued datagram.
          auto newest = std::max_element(
              pending_.begin(), pending_.end(),
              [](const Pending& a, const Pending& b) { return a.order < b.order; });
          if (!newest->moved) {
            std::swap(newest->bytes, p.bytes);
            p.moved = true;
            ++stats_.reordered;
          }
        }
        pending_.push_back(std::move(p));
        std::push_heap(pending_.begin(), pending_.end(), later);
      }
    }
    const Micros now = Now();
    while (!pending_.empty() && pending_.front().due <= now) {
      std::pop_heap(pending_.begin(), pending_.end(), later);
      Pending p = std::move(pending_.back());
      pending_.pop_back();
      out_.SendTo(p.bytes, destination_);
      std::lock_guard lock(mu_);
      ++stats_.delivered;
    }
  }
}

}  // namespace fogservo::netsim
