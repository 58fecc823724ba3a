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

#include "fogservo/ws_bridge.h"

#include <atomic>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace fogservo::bridge {
namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

constexpr std::size_t kMaxQueuedFrames = 64;

std::string MimeType(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
  if (ext == ".html") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  return "application/octet-stream";
}

}  // namespace

class WsSession;

struct WsBridge::Impl {
  net::io_context ioc;
  tcp::acceptor acceptor{ioc};
  CommandHandler on_command;
  std::optional<std::filesystem::path> static_dir;
  std::set<std::shared_ptr<WsSession>> sessions;  // io thread only
  std::atomic<std::size_t> client_count{0};
  std::thread thread;

  void Accept();
};

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& socket, WsBridge::Impl& owner)
      : ws_(std::move(socket)), owner_(owner) {}

  void Run(http::request<http::string_body> req) {
    ws_.set_option(
        websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->owner_.sessions.insert(self);
      self->owner_.client_count = self->owner_.sessions.size();
      self->Read();
    });
  }

  void Send(const std::shared_ptr<const std::string>& frame) {
    if (queue_.size() >= kMaxQueuedFrames) return;
    queue_.push_back(frame);
    if (queue_.size() == 1) Write();
  }

 private:
  void Read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec,
                                                        std::size_t) {
      if (ec) {
        self->Close();
        return;
      }
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      try {
        self->owner_.on_command(nlohmann::json::parse(text));
      } catch (const std::exception& e) {
        self->Send(std::make_shared<const std::string>(
            nlohmann::json{{"error", e.what()}}.dump()));
      }
      self->Read();
    });
  }

  void Write() {
    ws_.text(true);
    ws_.async_write(net::buffer(*queue_.front()),
                    [self = shared_from_this()](beast::error_code ec,
                                                std::size_t) {
                      if (ec) {
                        self->Close();
                        return;
                      }
                      self->queue_.pop_front();
                      if (!self->queue_.empty()) self->Write();
                    });
  }

  void Close() {
    owner_.sessions.erase(shared_from_this());
    owner_.client_count = owner_.sessions.size();
  }

  websocket::stream<beast::tcp_stream> ws_;
  WsBridge::Impl& owner_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
};

// Reads one HTTP request: upgrades to a websocket or serves a static file.
class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, WsBridge::Impl& owner)
      : stream_(std::move(socket)), owner_(owner) {}

  void Run() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec,
                                                 std::size_t) {
                       if (!ec) self->Handle();
                     });
  }

 private:
  void Handle() {
    if (websocket::is_upgrade(req_)) {
      stream_.expires_never();
      std::make_shared<WsSession>(stream_.release_socket(), owner_)
          ->Run(std::move(req_));
      return;
    }
    auto res = std::make_shared<http::response<http::string_body>>();
    res->version(req_.version());
    res->keep_alive(false);
    std::string target(req_.target());
    if (target.empty() || target == "/") target = "/index.html";
    const auto q = target.find('?');
    if (q != std::string::npos) target.resize(q);
    std::string body;
    bool found = false;
    if (owner_.static_dir && req_.method() == http::verb::get &&
        target.find("..") == std::string::npos) {
      const std::filesystem::path file = *owner_.static_dir / target.substr(1);
      std::ifstream in(file, std::ios::binary);
      if (in) {
        std::ostringstream ss;
        ss << in.rdbuf();
        body = ss.str();
        found = true;
        res->set(http::field::content_type, MimeType(file));
      }
    }
    res->result(found ? http::status::ok : http::status::not_found);
    res->body() = found ? body : "not found\n";
    res->prepare_payload();
    http::async_write(stream_, *res,
                      [self = shared_from_this(), res](beast::error_code,
                                                       std::size_t) {
                        beast::error_code ignored;
                        self->stream_.socket().shutdown(
                            tcp::socket::shutdown_send, ignored);
                      });
  }

  beast::tcp_stream stream_;
  WsBridge::Impl& owner_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

void WsBridge::Impl::Accept() {
  acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;
    std::make_shared<HttpSession>(std::move(socket), *this)->Run();
    Accept();
  });
}

WsBridge::WsBridge(std::uint16_t port, CommandHandler on_command,
                   std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>()) {
  impl_->on_command = std::move(on_command);
  impl_->static_dir = std::move(static_dir);
  const tcp::endpoint endpoint(net::ip::make_address("127.0.0.1"), port);
  impl_->acceptor.open(endpoint.protocol());
  impl_->acceptor.set_option(net::socket_base::reuse_address(true));
  impl_->acceptor.bind(endpoint);
  impl_->acceptor.listen();
  impl_->Accept();
  impl_->thread = std::thread([impl = impl_.get()] { impl->ioc.run(); });
}

WsBridge::~WsBridge() {
  impl_->ioc.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::uint16_t WsBridge::port() const {
  return impl_->acceptor.local_endpoint().port();
}

void WsBridge::Publish(std::string frame) {
  auto shared = std::make_shared<const std::string>(std::move(frame));
  net::post(impl_->ioc, [impl = impl_.get(), shared] {
    for (const auto& s : impl->sessions) s->Send(shared);
  });
}

std::size_t WsBridge::clients() const { return impl_->client_count.load(); }

}  // namespace fogservo::bridge
