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

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "fogservo/commands.h"
#include "fogservo/ws_bridge.h"

namespace fogservo::bridge {
namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;
using namespace std::chrono_literals;

// Minimal websocket client; every read is bounded so a broken server fails
// the test instead of hanging it.
class Client {
 public:
  explicit Client(std::uint16_t port) : ws_(ioc_) {
    tcp::resolver resolver(ioc_);
    beast::get_lowest_layer(ws_).connect(
        resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/");
  }

  void Send(const std::string& text) {
    ws_.text(true);
    ws_.write(net::buffer(text));
  }

  std::optional<std::string> Read(std::chrono::milliseconds timeout = 3000ms) {
    beast::flat_buffer buffer;
    bool done = false;
    beast::error_code result;
    ws_.async_read(buffer, [&](beast::error_code ec, std::size_t) {
      done = true;
      result = ec;
    });
    ioc_.restart();
    ioc_.run_for(timeout);
    if (!done) {
      beast::get_lowest_layer(ws_).cancel();
      ioc_.restart();
      ioc_.run();
      return std::nullopt;
    }
    if (result) return std::nullopt;
    return beast::buffers_to_string(buffer.data());
  }

  // Reads until `pred` accepts a frame or the deadline passes.
  template <typename Pred>
  std::optional<json> ReadUntil(Pred pred, std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (std::chrono::steady_clock::now() < deadline) {
      auto text = Read(std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now()));
      if (!text) return std::nullopt;
      json j = json::parse(*text);
      if (pred(j)) return j;
    }
    return std::nullopt;
  }

 private:
  net::io_context ioc_;
  websocket::stream<beast::tcp_stream> ws_;
};

template <typename Pred>
bool WaitFor(Pred pred, std::chrono::milliseconds timeout = 3000ms) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (!pred()) {
    if (std::chrono::steady_clock::now() > deadline) return false;
    std::this_thread::sleep_for(5ms);
  }
  return true;
}

struct HttpReply {
  unsigned status;
  std::string body;
  std::string content_type;
};

HttpReply HttpGet(std::uint16_t port, const std::string& target) {
  net::io_context ioc;
  beast::tcp_stream stream(ioc);
  tcp::resolver resolver(ioc);
  stream.connect(resolver.resolve("127.0.0.1", std::to_string(port)));
  http::request<http::empty_body> req{http::verb::get, target, 11};
  req.set(http::field::host, "127.0.0.1");
  http::write(stream, req);
  beast::flat_buffer buffer;
  http::response<http::string_body> res;
  http::read(stream, buffer, res);
  return {res.result_int(), res.body(),
          std::string(res[http::field::content_type])};
}

class Recorder {
 public:
  void operator()(const json& j) {
    if (j.contains("boom")) throw std::runtime_error("handler refused");
    std::lock_guard lock(mu_);
    seen_.push_back(j);
  }
  std::vector<json> seen() const {
    std::lock_guard lock(mu_);
    return seen_;
  }

 private:
  mutable std::mutex mu_;
  std::vector<json> seen_;
};

TEST(WsBridgeTest, EphemeralPortAndClientCount) {
  Recorder rec;
  WsBridge bridge(0, std::ref(rec));
  ASSERT_NE(bridge.port(), 0);
  EXPECT_EQ(bridge.clients(), 0u);
  {
    Client a(bridge.port());
    Client b(bridge.port());
    EXPECT_TRUE(WaitFor([&] { return bridge.clients() == 2; }));
  }
  EXPECT_TRUE(WaitFor([&] { return bridge.clients() == 0; }));
}

TEST(WsBridgeTest, PublishReachesEveryClient) {
  Recorder rec;
  WsBridge bridge(0, std::ref(rec));
  Client a(bridge.port());
  Client b(bridge.port());
  ASSERT_TRUE(WaitFor([&] { return bridge.clients() == 2; }));
  bridge.Publish(R"({"t":1.5})");
  bridge.Publish(R"({"t":2})");
  for (Client* c : {&a, &b}) {
    EXPECT_EQ(c->Read(), R"({"t":1.5})");
    EXPECT_EQ(c->Read(), R"({"t":2})");
  }
}

TEST(WsBridgeTest, CommandsReachHandlerInOrder) {
  Recorder rec;
  WsBridge bridge(0, std::ref(rec));
  Client c(bridge.port());
  c.Send(R"({"type":"velocity","forward":0.25})");
  c.Send(R"({"type":"grasp"})");
  ASSERT_TRUE(WaitFor([&] { return rec.seen().size() == 2; }));
  const auto seen = rec.seen();
  EXPECT_EQ(seen[0]["type"], "velocity");
  EXPECT_DOUBLE_EQ(seen[0]["forward"].get<double>(), 0.25);
  EXPECT_EQ(seen[1]["type"], "grasp");
}

TEST(WsBridgeTest, HandlerErrorIsRepliedToSender) {
  Recorder rec;
  WsBridge bridge(0, std::ref(rec));
  Client c(bridge.port());
  c.Send(R"({"boom":1})");
  const auto reply = c.Read();
  ASSERT_TRUE(reply);
  const json j = json::parse(*reply);
  ASSERT_TRUE(j.contains("error"));
  EXPECT_NE(j["error"].get<std::string>().find("handler refused"),
            std::string::npos);
  // The session survives the error.
  c.Send(R"({"type":"grasp"})");
  EXPECT_TRUE(WaitFor([&] { return rec.seen().size() == 1; }));
}

TEST(WsBridgeTest, MalformedJsonIsRepliedWithError) {
  Recorder rec;
  WsBridge bridge(0, std::ref(rec));
  Client c(bridge.port());
  c.Send("{not json");
  const auto reply = c.Read();
  ASSERT_TRUE(reply);
  EXPECT_TRUE(json::parse(*reply).contains("error"));
  EXPECT_TRUE(rec.seen().empty());
}

TEST(WsBridgeTest, ServesStaticFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "fogservo_bridge_static";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "index.html") << "<html>console</html>";
  std::ofstream(dir / "app.js") << "console.log(1);";
  Recorder rec;
  WsBridge bridge(0, std::ref(rec), dir);

  const auto index = HttpGet(bridge.port(), "/");
  EXPECT_EQ(index.status, 200u);
  EXPECT_EQ(index.body, "<html>console</html>");
  EXPECT_EQ(index.content_type, "text/html");

  const auto js = HttpGet(bridge.port(), "/app.js?v=3");
  EXPECT_EQ(js.status, 200u);
  EXPECT_EQ(js.content_type, "application/javascript");

  EXPECT_EQ(HttpGet(bridge.port(), "/missing.html").status, 404u);
  EXPECT_EQ(HttpGet(bridge.port(), "/../etc/passwd").status, 404u);
  std::filesystem::remove_all(dir);
}

TEST(WsBridgeTest, NoStaticDirGives404) {
  Recorder rec;
  WsBridge bridge(0, std::ref(rec));
  EXPECT_EQ(HttpGet(bridge.port(), "/").status, 404u);
}

// Runs `serve` on a thread against a teleop scenario without a scripted
// trace, so every command comes from the test's websocket clients.
class ServeHarness {
 public:
  explicit ServeHarness(double speed) {
    std::ifstream in(std::filesystem::path(FOGSERVO_SOURCE_DIR) / "configs" /
                     "teleop_trace.json");
    json j = json::parse(in);
    j["teleop"]["trace"] = json::array();
    j["duration_s"] = 600;
    std::ofstream(config_) << j.dump();
    args_.config = config_.string();
    args_.ws_port = 0;
    args_.speed = speed;
    args_.stop = &stop_;
    args_.on_listening = [this](std::uint16_t p) { port_ = p; };
    server_ = std::thread([this] { rc_ = cli::ServeCommand(args_, out_); });
    WaitFor([this] { return port_.load() != 0; });
  }
  ~ServeHarness() {
    Stop();
    std::filesystem::remove(config_);
  }

  std::uint16_t port() const { return port_; }
  // Stops serving and returns the exit code; the metrics are then final.
  int Stop() {
    stop_ = true;
    if (server_.joinable()) server_.join();
    return rc_;
  }
  json Metrics() const { return json::parse(out_.str()); }

 private:
  const std::filesystem::path config_ =
      std::filesystem::temp_directory_path() / "fogservo_serve.json";
  cli::ServeArgs args_;
  std::atomic<bool> stop_{false};
  std::atomic<std::uint16_t> port_{0};
  std::ostringstream out_;
  int rc_ = -1;
  std::thread server_;
};

// Sends one command every `period` of wall time until destroyed.
class CommandPump {
 public:
  CommandPump(std::uint16_t port, std::string command,
              std::chrono::milliseconds period)
      : thread_([this, port, command = std::move(command), period] {
          Client tx(port);
          while (running_) {
            tx.Send(command);
            std::this_thread::sleep_for(period);
          }
        }) {}
  ~CommandPump() {
    running_ = false;
    thread_.join();
  }

 private:
  std::atomic<bool> running_{true};
  std::thread thread_;
};

TEST(ServeTest, StreamsFramesAndStopsWhenCommandsCease) {
  ServeHarness serve(1.0);
  ASSERT_NE(serve.port(), 0);
  Client c(serve.port());
  const auto first = c.ReadUntil([](const json&) { return true; }, 3000ms);
  ASSERT_TRUE(first);
  for (const char* key : {"t", "robot", "obs", "phase", "link_stats"}) {
    EXPECT_TRUE(first->contains(key)) << key;
  }
  EXPECT_DOUBLE_EQ((*first)["robot"]["v_des"].get<double>(), 0.0);

  auto driving = [](const json& f) { return f["robot"]["v_des"].get<double>() > 0.1; };
  {
    // Holds the heartbeat at the teleop publish rate.
    CommandPump pump(serve.port(), R"({"type":"velocity","forward":0.3})", 50ms);
    EXPECT_TRUE(c.ReadUntil(driving, 5000ms));
  }
  // The client went quiet: the edge output must ramp back to zero.
  EXPECT_TRUE(c.ReadUntil(
      [](const json& f) { return f["robot"]["v_des"].get<double>() == 0.0; },
      3000ms));
  ASSERT_EQ(serve.Stop(), cli::kExitOk);
  const json metrics = serve.Metrics();
  EXPECT_FALSE(metrics["fell"].get<bool>());
  // Window 250 ms, fall 100 ms, 2 ms relay delay, ideal links, one edge tick.
  ASSERT_TRUE(metrics["stop_latency_ms"].is_number());
  EXPECT_LE(metrics["stop_latency_ms"].get<double>(), 250.0 + 100.0 + 2.0 + 5.0);
}

// Scripted browser session: hold forward for one second, then engage auto.
TEST(ServeTest, BrowserSessionCompletesPickup) {
  constexpr double kSpeed = 10.0;
  ServeHarness serve(kSpeed);
  ASSERT_NE(serve.port(), 0);
  Client c(serve.port());
  const auto start = c.ReadUntil([](const json&) { return true; }, 3000ms);
  ASSERT_TRUE(start);
  const double x0 = (*start)["robot"]["x"].get<double>();
  {
    // 20 Hz in virtual time.
    CommandPump pump(serve.port(), R"({"type":"velocity","forward":0.2})", 5ms);
    const double t0 = (*start)["t"].get<double>();
    ASSERT_TRUE(c.ReadUntil(
        [t0](const json& f) { return f["t"].get<double>() >= t0 + 1.0; }, 5000ms));
  }
  c.Send(R"({"type":"mode","value":1})");
  const auto done = c.ReadUntil(
      [](const json& f) {
        const auto phase = f["phase"].get<std::string>();
        return phase == "done" || phase == "aborted";
      },
      20000ms);
  ASSERT_TRUE(done);
  EXPECT_EQ((*done)["phase"], "done");
  EXPECT_NE((*done)["robot"]["x"].get<double>(), x0);
  ASSERT_EQ(serve.Stop(), cli::kExitOk);
  const json metrics = serve.Metrics();
  EXPECT_TRUE(metrics["success"].get<bool>());
  EXPECT_EQ(metrics["final_phase"], "done");
  EXPECT_FALSE(metrics["fell"].get<bool>());
}

TEST(ServeTest, RejectsBadSpeedAndConfig) {
  cli::ServeArgs args;
  args.config = (std::filesystem::path(FOGSERVO_SOURCE_DIR) / "configs" /
                 "teleop_trace.json").string();
  args.ws_port = 0;
  args.speed = 0.0;
  std::ostringstream out;
  EXPECT_EQ(cli::ServeCommand(args, out), cli::kExitConfig);
  args.speed = 1.0;
  args.config = "/nonexistent/config.json";
  EXPECT_EQ(cli::ServeCommand(args, out), cli::kExitConfig);
  EXPECT_TRUE(out.str().empty());
}

}  // namespace
}  // namespace fogservo::bridge
