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

#include "fogservo/topology.h"

#include <poll.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <queue>
#include <thread>
#include <utility>

#include "fogservo/udp.h"

namespace fogservo::topology {
namespace {

using nlohmann::ordered_json;

enum LinkIndex : std::size_t { kCloudRcu, kRcuEdge, kEdgeRcu, kRcuCloud };
constexpr const char* kLinkNames[] = {"cloud_rcu", "rcu_edge", "edge_rcu",
                                      "rcu_cloud"};

netsim::LinkProfile Seeded(netsim::LinkProfile p, std::uint64_t run_seed,
                           std::uint64_t stream) {
  p.seed = DeriveSeed(DeriveSeed(run_seed, p.seed), stream);
  return p;
}

RunMetrics Summarize(const scenario::Scenario& s, std::uint64_t seed,
                     const nodes::EdgeNode& edge, const nodes::CloudNode& cloud,
                     Micros now) {
  RunMetrics m;
  m.seed = seed;
  m.fell = edge.state().fallen;
  const auto& pickup = cloud.pickup();
  // Scheduled or browser-engaged pickups are scored by their own outcome.
  if (pickup.engaged()) {
    m.success = pickup.success().value_or(false);
    if (pickup.engaged_at()) {
      m.duration_s = ToSeconds(pickup.finished_at().value_or(now) -
                               *pickup.engaged_at());
    }
    m.final_phase = ibvs::Name(pickup.phase());
  } else if (s.engage_at) {
    m.final_phase = "teleop";
  } else {
    m.success = edge.grasp_status() == ibvs::GraspStatus::kSucceeded;
    m.duration_s = ToSeconds(edge.grasp_finished_at().value_or(now));
    m.final_phase = "teleop";
  }
  m.min_e_norm = pickup.min_error_norm();
  const auto& stops = edge.stop_latencies();
  if (!stops.empty()) {
    m.stop_latency_ms =
        static_cast<double>(*std::max_element(stops.begin(), stops.end())) /
        1000.0;
  }
  return m;
}

ordered_json StatsJson(const netsim::LinkStats& s) {
  ordered_json j;
  j["sent"] = s.sent;
  j["delivered"] = s.delivered;
  j["dropped"] = s.dropped;
  j["reordered"] = s.reordered;
  return j;
}

}  // namespace

// ---------------------------------------------------------------------------
// World

World::World(scenario::TargetSpec spec) : spec_(std::move(spec)) {}

Eigen::Vector3d World::PathAt(Micros t) const {
  const auto& w = spec_.waypoints;
  if (w.empty()) return spec_.tag.position;
  double travelled = std::max(0.0, ToSeconds(t - spec_.start)) * spec_.speed;
  for (std::size_t i = 1; i < w.size(); ++i) {
    const double len = (w[i] - w[i - 1]).norm();
    if (travelled <= len && len > 0.0) {
      return w[i - 1] + (travelled / len) * (w[i] - w[i - 1]);
    }
    travelled -= len;
  }
  return w.back();
}

Eigen::Vector3d World::BoxAt(Micros t) const {
  std::lock_guard<std::mutex> lock(mu_);
  if (held_at_) return *held_at_;
  Eigen::Vector3d p = PathAt(t);
  if (spec_.yank && grasp_started_) {
    const Micros since = t - *grasp_started_ - spec_.yank->delay;
    const double u = std::clamp(static_cast<double>(since) /
                                    static_cast<double>(spec_.yank->duration),
                                0.0, 1.0);
    p += u * spec_.yank->offset;
  }
  return p;
}

vision::TagTarget World::TagAt(Micros t) const {
  vision::TagTarget tag = spec_.tag;
  tag.position = BoxAt(t);
  return tag;
}

void World::OnGraspStart(Micros t) {
  std::lock_guard<std::mutex> lock(mu_);
  if (!grasp_started_) grasp_started_ = t;
}

void World::OnGraspClosed(Micros t, bool held) {
  if (!held) return;
  const Eigen::Vector3d p = BoxAt(t);
  std::lock_guard<std::mutex> lock(mu_);
  held_at_ = p;
}

bool World::held() const {
  std::lock_guard<std::mutex> lock(mu_);
  return held_at_.has_value();
}

// ---------------------------------------------------------------------------
// Construction helpers

dynamics::RobotState PlaceRobot(const scenario::Scenario& s,
                                const dynamics::RobotModel& model, Rng& rng) {
  const auto& p = s.placement;
  const World world(s.target);
  const Eigen::Vector3d tag = world.BoxAt(0);
  Eigen::Vector2d n = s.target.tag.normal.head<2>();
  if (n.norm() < 1e-9) throw ConfigError("target.normal", "must not be vertical");
  n.normalize();
  const double bearing = rng.Uniform(p.bearing_min, p.bearing_max);
  const double jitter = rng.Uniform(-p.heading_jitter, p.heading_jitter);
  const Eigen::Vector2d dir(std::cos(bearing) * n.x() - std::sin(bearing) * n.y(),
                            std::sin(bearing) * n.x() + std::cos(bearing) * n.y());
  const Eigen::Vector2d ground = tag.head<2>() + p.distance * dir;
  const double heading = std::atan2(-dir.y(), -dir.x()) + jitter;
  return model.MakeState(ground, heading, p.height, p.lean);
}

nodes::EdgeConfig MakeEdgeConfig(const scenario::Scenario& s) {
  nodes::EdgeConfig c;
  c.model = dynamics::RobotModel(s.body, s.gains);
  c.window = s.heartbeat.window;
  c.shape = s.heartbeat.shape;
  c.adaptive_window = s.heartbeat.adaptive;
  c.adaptive_min = s.heartbeat.adaptive_min;
  c.adaptive_max = s.heartbeat.adaptive_max;
  c.max_forward = s.max_forward;
  c.max_yaw_rate = s.max_yaw_rate;
  c.max_height_rate = s.max_height_rate;
  c.telemetry_period = s.telemetry_period;
  c.camera = s.camera;
  c.script = s.script;
  c.envelope = s.envelope;
  c.grasp_depth =
      s.camera.focal_px * s.pickup.side_world / s.pickup.target_size_px;
  return c;
}

nodes::CloudConfig MakeCloudConfig(const scenario::Scenario& s,
                                   std::uint64_t seed) {
  nodes::CloudConfig c;
  c.publish_period = s.publish_period;
  c.recognition_rate_hz = s.recognition_rate_hz;
  c.pixel_noise = s.pixel_noise;
  c.seed = DeriveSeed(seed, 21);
  c.wheel_radius = s.body.wheel_radius;
  c.camera = s.camera;
  c.limits = s.limits;
  c.pickup = s.pickup;
  c.trace = s.trace;
  c.engage_at = s.engage_at;
  return c;
}

nodes::Payload ParseUiCommand(const nlohmann::json& cmd) {
  if (!cmd.is_object()) throw InvalidParameter("command must be an object");
  auto num = [&cmd](const char* key, double def) {
    const auto it = cmd.find(key);
    if (it == cmd.end()) return def;
    if (!it->is_number()) {
      throw InvalidParameter(std::string("field '") + key + "' must be a number");
    }
    const double v = it->get<double>();
    if (!std::isfinite(v)) throw InvalidParameter("non-finite value");
    return v;
  };
  const auto type = cmd.find("type");
  if (type == cmd.end() || !type->is_string()) {
    throw InvalidParameter("command needs a string 'type'");
  }
  const std::string t = type->get<std::string>();
  if (t == "velocity") {
    return nodes::VelocityCmd{static_cast<float>(num("forward", 0.0)),
                              static_cast<float>(num("yaw", 0.0))};
  }
  if (t == "height") return nodes::HeightCmd{static_cast<float>(num("rate", 0.0))};
  if (t == "grasp") return nodes::GraspCmd{};
  if (t == "mode") {
    const double v = num("value", 0.0);
    if (v != 0.0 && v != 1.0) throw InvalidParameter("mode value must be 0 or 1");
    return nodes::ModeCmd{v == 1.0 ? nodes::Mode::kAuto : nodes::Mode::kTeleop};
  }
  throw InvalidParameter("unknown command type '" + t + "'");
}

std::string DeliveryLine(const std::string& link,
                         const netsim::DeliveryRecord& r) {
  ordered_json j;
  j["link"] = link;
  j["seq"] = r.seq;
  j["t_send"] = ToSeconds(r.t_send);
  if (r.dropped) {
    j["dropped"] = true;
  } else {
    j["t_deliver"] = ToSeconds(*r.t_deliver);
  }
  j["bytes"] = r.bytes;
  return j.dump();
}

// ---------------------------------------------------------------------------
// Virtual runtime

class VirtualTopology::ClockExecutor : public nodes::Executor {
 public:
  explicit ClockExecutor(netsim::VirtualClock& clock) : clock_(clock) {}
  Micros Now() const override { return clock_.now(); }
  void At(Micros t, std::function<void()> cb) override {
    clock_.Schedule(t, std::move(cb));
  }

 private:
  netsim::VirtualClock& clock_;
};

VirtualTopology::VirtualTopology(const scenario::Scenario& s,
                                 std::uint64_t seed)
    : scenario_(s),
      seed_(seed),
      executor_(std::make_unique<ClockExecutor>(clock_)),
      world_(s.target) {
  const nodes::EdgeConfig edge_config = MakeEdgeConfig(s);
  Rng placement(DeriveSeed(seed, 11));
  const dynamics::RobotState initial =
      PlaceRobot(s, edge_config.model, placement);

  const netsim::LinkProfile profiles[] = {
      Seeded(s.cloud_edge, seed, 1), Seeded(s.rcu_edge, seed, 2),
      Seeded(s.rcu_edge, seed, 3), Seeded(s.cloud_edge, seed, 4)};
  const netsim::Receiver receivers[] = {
      [this](std::span<const std::uint8_t> b, Micros t) {
        rcu_->OnDatagram(nodes::Direction::kDownlink, b, t);
      },
      [this](std::span<const std::uint8_t> b, Micros t) {
        edge_->OnDatagram(b, t);
      },
      [this](std::span<const std::uint8_t> b, Micros t) {
        rcu_->OnDatagram(nodes::Direction::kUplink, b, t);
      },
      [this](std::span<const std::uint8_t> b, Micros t) {
        cloud_->OnDatagram(b, t);
      }};
  for (std::size_t i = 0; i < 4; ++i) {
    profiles[i].Validate();
    links_.push_back(std::make_unique<netsim::VirtualLink>(
        kLinkNames[i], clock_, profiles[i], receivers[i]));
  }
  auto sender = [this](std::size_t i) {
    return [this, i](std::span<const std::uint8_t> b) { links_[i]->Send(b); };
  };

  cloud_ = std::make_unique<nodes::CloudNode>(
      MakeCloudConfig(s, seed), [this](Micros t) { return world_.TagAt(t); },
      sender(kCloudRcu));
  rcu_ = std::make_unique<nodes::RcuNode>(*executor_, sender(kRcuEdge),
                                          sender(kRcuCloud), s.rcu_delay);
  nodes::GraspWorld grasp_world;
  grasp_world.box_position = [this](Micros t) { return world_.BoxAt(t); };
  grasp_world.on_grasp_start = [this](Micros t) { world_.OnGraspStart(t); };
  grasp_world.on_grasp_closed = [this](Micros t, bool held) {
    world_.OnGraspClosed(t, held);
  };
  edge_ = std::make_unique<nodes::EdgeNode>(edge_config, initial,
                                            std::move(grasp_world),
                                            sender(kEdgeRcu));
  edge_->set_telemetry_log(
      [this](const std::string& line) { telemetry_log_.push_back(line); });
  cloud_->set_phase_log(
      [this](const std::string& line) { phase_log_.push_back(line); });
  // The scenario covers [0, duration).
  end_ = s.duration - 1;
}

VirtualTopology::~VirtualTopology() = default;

void VirtualTopology::AdvanceTo(Micros t) {
  if (end_ < 0) return;
  if (!started_) {
    started_ = true;
    cloud_->Start(*executor_);
    edge_->Start(*executor_);
  }
  clock_.RunUntil(std::min(t, end_));
}

bool VirtualTopology::Finished() const {
  if (end_ < 0 || (started_ && clock_.now() >= end_)) return true;
  if (!scenario_.linger_after_finish) return false;
  if (edge_->state().fallen) return true;
  std::optional<Micros> done;
  if (cloud_->pickup().engaged()) {
    done = cloud_->pickup().finished_at();
  } else {
    done = edge_->grasp_finished_at();
  }
  return done && clock_.now() >= *done + *scenario_.linger_after_finish;
}

RunMetrics VirtualTopology::Run() {
  constexpr Micros kChunk = 50'000;
  while (!Finished()) AdvanceTo(clock_.now() + kChunk);
  return Metrics();
}

RunMetrics VirtualTopology::Metrics() const {
  return Summarize(scenario_, seed_, *edge_, *cloud_, clock_.now());
}

RunLogs VirtualTopology::Logs() const {
  RunLogs logs;
  logs.telemetry = telemetry_log_;
  logs.phases = phase_log_;
  for (const auto& link : links_) {
    for (const auto& r : link->log()) {
      // In-flight datagrams at the end of the run have no outcome yet.
      if (r.dropped || r.t_deliver) {
        logs.delivery.push_back(DeliveryLine(link->name(), r));
      }
    }
  }
  return logs;
}

void VirtualTopology::Relay(const nodes::Payload& payload) {
  cloud_->Relay(payload, clock_.now());
}

nlohmann::json VirtualTopology::Snapshot() const {
  ordered_json j;
  j["t"] = ToSeconds(clock_.now());
  const nodes::TelemetryMsg t = edge_->Telemetry();
  const auto& st = edge_->state();
  ordered_json robot;
  robot["x"] = st.ground_pos.x();
  robot["y"] = st.ground_pos.y();
  robot["heading"] = st.heading;
  robot["psi"] = st.lean_angle;
  robot["psi_dot"] = st.lean_rate;
  robot["v"] = st.com_velocity;
  robot["height"] = st.body_height;
  robot["body_pitch"] = t.body_pitch;
  robot["pendulum_length"] = st.pendulum_length;
  robot["fallen"] = st.fallen;
  robot["grasping"] = st.grasping;
  robot["grasp_status"] = t.grasp_status;
  robot["mode"] = static_cast<int>(t.mode);
  robot["v_des"] = edge_->forward_command();
  robot["yaw_des"] = edge_->yaw_command();
  j["robot"] = robot;

  ordered_json obs;
  if (const auto& o = cloud_->observation()) {
    obs["visible"] = o->visible;
    obs["center"] = {o->center.x(), o->center.y()};
    obs["side_px"] = o->side_px;
    ordered_json corners = ordered_json::array();
    for (const auto& c : o->corners) corners.push_back({c.x(), c.y()});
    obs["corners"] = corners;
    obs["capture_t"] = ToSeconds(o->timestamp);
  } else {
    obs["visible"] = false;
  }
  obs["target_size_px"] = scenario_.pickup.target_size_px;
  obs["image"] = {scenario_.camera.width, scenario_.camera.height};
  j["obs"] = obs;

  const auto& pickup = cloud_->pickup();
  j["phase"] = pickup.engaged() ? std::string(ibvs::Name(pickup.phase()))
                                : std::string("teleop");
  j["e_norm"] = pickup.last_error_norm();

  ordered_json links;
  for (const auto& link : links_) links[link->name()] = StatsJson(link->stats());
  const auto& rc = rcu_->counters();
  links["rcu"] = {{"forwarded", rc.forwarded}, {"errors", rc.errors}};
  j["link_stats"] = links;

  ordered_json channels;
  for (int i = 0; i < 6; ++i) {
    const auto type = static_cast<heartbeat::CommandType>(i);
    const auto& c = edge_->channel(type);
    ordered_json cj;
    cj["active"] = c.Active(clock_.now());
    cj["latched"] = c.latched_value();
    cj["ramp"] = c.ramp_position();
    cj["window_ms"] = static_cast<double>(c.window()) / 1000.0;
    channels[std::string(heartbeat::Name(type))] = cj;
  }
  j["heartbeat"] = channels;
  return j;
}

// ---------------------------------------------------------------------------
// Live runtime

namespace {

class LiveLoop : public nodes::Executor {
 public:
  using Handler = std::function<void(std::span<const std::uint8_t>, Micros)>;

  explicit LiveLoop(std::chrono::steady_clock::time_point epoch)
      : epoch_(epoch) {}

  Micros Now() const override {
    return std::chrono::duration_cast<std::chrono::microseconds>(
               std::chrono::steady_clock::now() - epoch_)
        .count();
  }
  void At(Micros t, std::function<void()> cb) override {
    timers_.push(Timer{t, order_++, std::move(cb)});
  }
  void Watch(const netsim::UdpSocket& socket, Handler handler) {
    watched_.push_back({&socket, std::move(handler)});
  }

  void Run(Micros end, const std::atomic<bool>& stop) {
    std::vector<pollfd> fds;
    for (const auto& w : watched_) {
      fds.push_back(pollfd{w.socket->fd(), POLLIN, 0});
    }
    while (!stop.load() && Now() < end) {
      while (!timers_.empty() && timers_.top().at <= Now()) {
        Timer t = timers_.top();
        timers_.pop();
        t.cb();
      }
      Micros wait = std::min<Micros>(end - Now(), 20'000);
      if (!timers_.empty()) wait = std::min(wait, timers_.top().at - Now());
      wait = std::max<Micros>(wait, 0);
      timespec ts{static_cast<time_t>(wait / 1'000'000),
                  static_cast<long>((wait % 1'000'000) * 1000)};
      for (auto& f : fds) f.revents = 0;
      if (::ppoll(fds.data(), fds.size(), &ts, nullptr) <= 0) continue;
      for (std::size_t i = 0; i < fds.size(); ++i) {
        if (!(fds[i].revents & POLLIN)) continue;
        while (auto d =
                   watched_[i].socket->Receive(std::chrono::microseconds(0))) {
          watched_[i].handler(*d, Now());
        }
      }
    }
  }

 private:
  struct Timer {
    Micros at;
    std::uint64_t order;
    std::function<void()> cb;
  };
  struct Later {
    bool operator()(const Timer& a, const Timer& b) const {
      return a.at != b.at ? a.at > b.at : a.order > b.order;
    }
  };
  struct Watched {
    const netsim::UdpSocket* socket;
    Handler handler;
  };

  std::chrono::steady_clock::time_point epoch_;
  std::priority_queue<Timer, std::vector<Timer>, Later> timers_;
  std::uint64_t order_ = 0;
  std::vector<Watched> watched_;
};

}  // namespace

RunMetrics RunLive(const scenario::Scenario& s, std::uint64_t seed,
                   RunLogs* logs) {
  using netsim::ShapingProxy;
  using netsim::UdpSocket;
  using Bytes = std::span<const std::uint8_t>;
  World world(s.target);
  const nodes::EdgeConfig edge_config = MakeEdgeConfig(s);
  Rng placement(DeriveSeed(seed, 11));
  const dynamics::RobotState initial =
      PlaceRobot(s, edge_config.model, placement);

  UdpSocket cloud_in, rcu_down_in, rcu_up_in, edge_in;
  ShapingProxy cloud_rcu(Seeded(s.cloud_edge, seed, 1), rcu_down_in.port());
  ShapingProxy rcu_edge(Seeded(s.rcu_edge, seed, 2), edge_in.port());
  ShapingProxy edge_rcu(Seeded(s.rcu_edge, seed, 3), rcu_up_in.port());
  ShapingProxy rcu_cloud(Seeded(s.cloud_edge, seed, 4), cloud_in.port());

  const auto epoch = std::chrono::steady_clock::now();
  LiveLoop cloud_loop(epoch), rcu_loop(epoch), edge_loop(epoch);
  std::atomic<bool> stop{false};
  std::vector<std::string> telemetry, phases;

  nodes::CloudNode cloud(
      MakeCloudConfig(s, seed), [&world](Micros t) { return world.TagAt(t); },
      [&](Bytes b) { cloud_in.SendTo(b, cloud_rcu.port()); });
  nodes::RcuNode rcu(
      rcu_loop, [&](Bytes b) { rcu_down_in.SendTo(b, rcu_edge.port()); },
      [&](Bytes b) { rcu_up_in.SendTo(b, rcu_cloud.port()); }, s.rcu_delay);
  nodes::GraspWorld grasp_world;
  grasp_world.box_position = [&world](Micros t) { return world.BoxAt(t); };
  grasp_world.on_grasp_start = [&world](Micros t) { world.OnGraspStart(t); };
  grasp_world.on_grasp_closed = [&world](Micros t, bool held) {
    world.OnGraspClosed(t, held);
  };
  nodes::EdgeNode edge(edge_config, initial, std::move(grasp_world),
                       [&](Bytes b) { edge_in.SendTo(b, edge_rcu.port()); });
  edge.set_telemetry_log([&](const std::string& l) { telemetry.push_back(l); });
  cloud.set_phase_log([&](const std::string& l) { phases.push_back(l); });

  cloud_loop.Watch(cloud_in, [&](Bytes b, Micros t) { cloud.OnDatagram(b, t); });
  rcu_loop.Watch(rcu_down_in, [&](Bytes b, Micros t) {
    rcu.OnDatagram(nodes::Direction::kDownlink, b, t);
  });
  rcu_loop.Watch(rcu_up_in, [&](Bytes b, Micros t) {
    rcu.OnDatagram(nodes::Direction::kUplink, b, t);
  });
  edge_loop.Watch(edge_in, [&](Bytes b, Micros t) { edge.OnDatagram(b, t); });

  // Each node checks its own completion condition on its own thread.
  const auto linger = s.linger_after_finish;
  std::function<void()> cloud_watch = [&] {
    const auto done = cloud.pickup().finished_at();
    if (linger && s.engage_at && done && cloud_loop.Now() >= *done + *linger) {
      stop = true;
    }
    cloud_loop.At(cloud_loop.Now() + 50'000, cloud_watch);
  };
  std::function<void()> edge_watch = [&] {
    const auto done = edge.grasp_finished_at();
    if (linger && (edge.state().fallen ||
                   (!s.engage_at && done && edge_loop.Now() >= *done + *linger))) {
      stop = true;
    }
    edge_loop.At(edge_loop.Now() + 50'000, edge_watch);
  };

  const Micros end = s.duration;
  if (end > 0) {
    cloud.Start(cloud_loop);
    edge.Start(edge_loop);
    cloud_loop.At(0, cloud_watch);
    edge_loop.At(0, edge_watch);
    std::thread t_cloud([&] { cloud_loop.Run(end, stop); });
    std::thread t_rcu([&] { rcu_loop.Run(end, stop); });
    std::thread t_edge([&] { edge_loop.Run(end, stop); });
    t_cloud.join();
    t_rcu.join();
    t_edge.join();
  }

  RunMetrics m =
      Summarize(s, seed, edge, cloud, std::min(end, cloud_loop.Now()));
  if (logs != nullptr) {
    logs->telemetry = std::move(telemetry);
    logs->phases = std::move(phases);
    logs->delivery.clear();
  }
  return m;
}

}  // namespace fogservo::topology
