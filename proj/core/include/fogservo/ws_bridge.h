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

#ifndef FOGSERVO_WS_BRIDGE_H_
#define FOGSERVO_WS_BRIDGE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace fogservo::bridge {

// Websocket endpoint for the browser console. Text frames from clients are
// parsed as JSON and handed to `on_command` on the bridge's own thread; a
// handler exception is answered with {"error": "..."} to that client.
// Plain HTTP GETs are served from `static_dir` when one is given.
class WsBridge {
 public:
  using CommandHandler = std::function<void(const nlohmann::json&)>;

  // Port 0 picks an ephemeral port. Listens on 127.0.0.1 only.
  WsBridge(std::uint16_t port, CommandHandler on_command,
           std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~WsBridge();
  WsBridge(const WsBridge&) = delete;
  WsBridge& operator=(const WsBridge&) = delete;

  std::uint16_t port() const;
  // Sends `frame` to every connected client. Slow clients drop frames.
  void Publish(std::string frame);
  std::size_t clients() const;

  struct Impl;  // defined in the implementation file

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace fogservo::bridge

#endif  // FOGSERVO_WS_BRIDGE_H_
