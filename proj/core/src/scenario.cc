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

#include "fogservo/scenario.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace fogservo::scenario {
namespace {

using nlohmann::json;

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

double Deg(double d) { return d * kPi / 180.0; }

// Typed access to one JSON object that remembers which keys were read, so
// leftovers can be reported as unknown fields.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(Where(), "expected an object");
  }

  std::string At(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* Get(const std::string& key) {
    used_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  double Num(const std::string& key, double def, double lo = -kInf,
             double hi = kInf) {
    const json* v = Get(key);
    if (v == nullptr) return def;
    return CheckNum(*v, At(key), lo, hi);
  }

  // Non-negative integer.
  std::uint64_t Uint(const std::string& key, std::uint64_t def) {
    const json* v = Get(key);
    if (v == nullptr) return def;
    const bool ok = v->is_number_unsigned() ||
                    (v->is_number_integer() && v->get<std::int64_t>() >= 0);
    if (!ok) throw ConfigError(At(key), "expected a non-negative integer");
    return v->get<std::uint64_t>();
  }

  bool Bool(const std::string& key, bool def) {
    const json* v = Get(key);
    if (v == nullptr) return def;
    if (!v->is_boolean()) throw ConfigError(At(key), "expected a boolean");
    return v->get<bool>();
  }

  std::string Str(const std::string& key, const std::string& def) {
    const json* v = Get(key);
    if (v == nullptr) return def;
    if (!v->is_string()) throw ConfigError(At(key), "expected a string");
    return v->get<std::string>();
  }

  std::string Choice(const std::string& key, const std::string& def,
                     const std::set<std::string>& allowed) {
    std::string s = Str(key, def);
    if (!allowed.count(s)) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ConfigError(At(key), "expected one of: " + list);
    }
    return s;
  }

  Eigen::Vector3d Vec3(const std::string& key, const Eigen::Vector3d& def) {
    const json* v = Get(key);
    if (v == nullptr) return def;
    return ToVec3(*v, At(key));
  }

  std::optional<Obj> Child(const std::string& key) {
    const json* v = Get(key);
    if (v == nullptr) return std::nullopt;
    return Obj(*v, At(key));
  }

  void Finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError(At(it.key()), "unknown field");
    }
  }

  static double CheckNum(const json& v, const std::string& path, double lo,
                         double hi) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d) || d < lo || d > hi) {
      std::ostringstream msg;
      msg << "value " << d << " outside [" << lo << ", " << hi << "]";
      throw ConfigError(path, msg.str());
    }
    return d;
  }

  static Eigen::Vector3d ToVec3(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 3) {
      throw ConfigError(path, "expected an array of 3 numbers");
    }
    Eigen::Vector3d out;
    for (int i = 0; i < 3; ++i) {
      out[i] = CheckNum(v[i], path + "[" + std::to_string(i) + "]", -kInf, kInf);
    }
    return out;
  }

 private:
  std::string Where() const { return path_.empty() ? "<root>" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

Micros Ms(double ms) { return FromMillis(ms); }
Micros Sec(double s) { return FromSeconds(s); }

netsim::LinkProfile ParseLink(Obj o) {
  netsim::LinkProfile p;
  p.latency_ms = o.Num("latency_ms", 0.0, 0.0, 60'000.0);
  p.jitter_ms = o.Num("jitter_ms", 0.0, 0.0, 60'000.0);
  p.drop = o.Num("drop", 0.0, 0.0, 1.0);
  p.reorder = o.Num("reorder", 0.0, 0.0, 1.0);
  p.seed = o.Uint("seed", 1);
  p.jitter_model = o.Choice("jitter_model", "uniform", {"uniform", "lognormal"}) ==
                           "lognormal"
                       ? netsim::JitterModel::kLogNormal
                       : netsim::JitterModel::kUniform;
  p.lognormal_sigma = o.Num("lognormal_sigma", p.lognormal_sigma, 0.0, 5.0);
  o.Finish();
  return p;
}

void ParseHeartbeat(Obj o, HeartbeatSettings& h) {
  h.window = Ms(o.Num("window_ms", 250.0, 1.0, 10'000.0));
  h.shape.rise = Ms(o.Num("rise_ms", 200.0, 1.0, 10'000.0));
  h.shape.fall = Ms(o.Num("fall_ms", 100.0, 1.0, 10'000.0));
  if (h.shape.fall >= h.shape.rise) {
    throw ConfigError(o.At("fall_ms"), "must be shorter than rise_ms");
  }
  h.adaptive = o.Bool("adaptive", false);
  h.adaptive_min = Ms(o.Num("adaptive_min_ms", 100.0, 1.0, 10'000.0));
  h.adaptive_max = Ms(o.Num("adaptive_max_ms", 500.0, 1.0, 10'000.0));
  if (h.adaptive_min > h.adaptive_max) {
    throw ConfigError(o.At("adaptive_min_ms"), "exceeds adaptive_max_ms");
  }
  o.Finish();
}

void ParseRobot(Obj o, Scenario& s) {
  Placement& p = s.placement;
  p.distance = o.Num("distance_m", p.distance, 0.2, 6.0);
  if (const json* b = o.Get("bearing_deg")) {
    if (b->is_array()) {
      if (b->size() != 2) {
        throw ConfigError(o.At("bearing_deg"), "expected [min, max]");
      }
      p.bearing_min = Deg(Obj::CheckNum((*b)[0], o.At("bearing_deg[0]"), -89, 89));
      p.bearing_max = Deg(Obj::CheckNum((*b)[1], o.At("bearing_deg[1]"), -89, 89));
      if (p.bearing_min > p.bearing_max) {
        throw ConfigError(o.At("bearing_deg"), "min exceeds max");
      }
    } else {
      p.bearing_min = p.bearing_max =
          Deg(Obj::CheckNum(*b, o.At("bearing_deg"), -89, 89));
    }
  }
  p.heading_jitter = Deg(o.Num("heading_jitter_deg", 0.0, 0.0, 45.0));
  p.height = o.Num("height_m", p.height, 0.0, 2.0);
  p.lean = Deg(o.Num("lean_deg", 0.0, -28.0, 28.0));
  s.max_forward = o.Num("max_forward", s.max_forward, 0.0, 5.0);
  s.max_yaw_rate = o.Num("max_yaw_rate", s.max_yaw_rate, 0.0, 10.0);
  s.max_height_rate = o.Num("max_height_rate", s.max_height_rate, 0.0, 2.0);
  s.telemetry_period =
      Sec(1.0 / o.Num("telemetry_hz", 20.0, 1.0, 200.0));
  if (auto b = o.Child("body")) {
    dynamics::BodyParams& bp = s.body;
    bp.wheel_radius = b->Num("wheel_radius", bp.wheel_radius, 0.01, 1.0);
    bp.leg_segment = b->Num("leg_segment", bp.leg_segment, 0.05, 2.0);
    bp.gravity = b->Num("gravity", bp.gravity, 0.1, 100.0);
    bp.height_min = b->Num("height_min", bp.height_min, 0.0, 5.0);
    bp.height_max = b->Num("height_max", bp.height_max, 0.0, 5.0);
    bp.fall_angle = b->Num("fall_angle", bp.fall_angle, 0.01, 1.5);
    bp.knee_slew_rate = b->Num("knee_slew_rate", bp.knee_slew_rate, 0.01, 20.0);
    bp.wheel_time_constant =
        b->Num("wheel_time_constant", bp.wheel_time_constant, 0.001, 1.0);
    bp.control_box_mass =
        b->Num("control_box_mass", bp.control_box_mass, 0.0, 100.0);
    if (bp.height_min >= bp.height_max) {
      throw ConfigError(b->At("height_min"), "must be below height_max");
    }
    b->Finish();
  }
  if (auto g = o.Child("gains")) {
    dynamics::ControllerGains& k = s.gains;
    k.k_v = g->Num("k_v", k.k_v, 0.0, 10.0);
    k.t_max = g->Num("t_max", k.t_max, 0.01, 20.0);
    k.k_lean = g->Num("k_lean", k.k_lean, 0.0, 1000.0);
    k.k_rate = g->Num("k_rate", k.k_rate, 0.0, 1000.0);
    k.yaw_rate_gain = g->Num("yaw_rate_gain", k.yaw_rate_gain, 0.0, 100.0);
    g->Finish();
  }
  o.Finish();
}

void ParseCamera(Obj o, Scenario& s) {
  vision::CameraModel& c = s.camera;
  c.focal_px = o.Num("focal_px", c.focal_px, 1.0, 1e5);
  c.width = static_cast<int>(o.Num("width", c.width, 1, 1e5));
  c.height = static_cast<int>(o.Num("height", c.height, 1, 1e5));
  c.mount_position = o.Vec3("mount_position", c.mount_position);
  c.mount_pitch = Deg(o.Num("mount_pitch_deg", 10.0, -90.0, 90.0));
  c.mount_yaw = Deg(o.Num("mount_yaw_deg", 0.0, -90.0, 90.0));
  s.limits.max_view_angle = Deg(o.Num("max_view_angle_deg", 25.0, 0.0, 90.0));
  s.limits.min_depth = o.Num("min_depth_m", s.limits.min_depth, 0.0, 100.0);
  s.limits.max_depth = o.Num("max_depth_m", s.limits.max_depth, 0.0, 100.0);
  if (s.limits.min_depth >= s.limits.max_depth) {
    throw ConfigError(o.At("min_depth_m"), "must be below max_depth_m");
  }
  o.Finish();
}

void ParseIbvs(Obj o, Scenario& s) {
  ibvs::PickupConfig& p = s.pickup;
  p.lambda = o.Num("lambda", p.lambda, 1e-6, 100.0);
  p.target_size_px = o.Num("target_size_px", p.target_size_px, 1.0, 1e4);
  p.center_tolerance_px =
      o.Num("center_tolerance_px", p.center_tolerance_px, 0.0, 1e4);
  p.size_tolerance_px = o.Num("size_tolerance_px", p.size_tolerance_px, 0.0, 1e4);
  p.settle_time = Sec(o.Num("settle_s", ToSeconds(p.settle_time), 0.0, 60.0));
  p.lost_hold = Sec(o.Num("lost_hold_s", ToSeconds(p.lost_hold), 0.0, 600.0));
  p.abort_after = Sec(o.Num("abort_s", ToSeconds(p.abort_after), 0.0, 3600.0));
  p.max_observation_age = Sec(o.Num("max_observation_age_s",
                                    ToSeconds(p.max_observation_age), 0.0, 60.0));
  p.depth_gain = o.Num("depth_gain", p.depth_gain, 0.0, 100.0);
  p.depth_source =
      o.Choice("depth_source", "measured", {"measured", "desired"}) == "desired"
          ? ibvs::DepthSource::kDesired
          : ibvs::DepthSource::kMeasured;
  p.limits.forward = o.Num("max_forward", p.limits.forward, 0.0, 5.0);
  p.limits.yaw_rate = o.Num("max_yaw_rate", p.limits.yaw_rate, 0.0, 10.0);
  p.limits.height_rate = o.Num("max_height_rate", p.limits.height_rate, 0.0, 2.0);
  if (const json* e = o.Get("engage_at_s")) {
    s.engage_at = Sec(Obj::CheckNum(*e, o.At("engage_at_s"), 0.0, 1e6));
  }
  o.Finish();
}

void ParseGrasp(Obj o, Scenario& s) {
  s.script.duration =
      Sec(o.Num("duration_s", ToSeconds(s.script.duration), 0.1, 60.0));
  s.envelope.position_tolerance =
      o.Num("position_tolerance_m", s.envelope.position_tolerance, 0.0, 1.0);
  s.envelope.bearing_tolerance =
      Deg(o.Num("bearing_tolerance_deg", 10.0, 0.0, 90.0));
  o.Finish();
}

void ParseTarget(Obj o, Scenario& s) {
  TargetSpec& t = s.target;
  t.tag.position = o.Vec3("position", t.tag.position);
  t.tag.normal = o.Vec3("normal", t.tag.normal);
  if (t.tag.normal.norm() < 1e-9) {
    throw ConfigError(o.At("normal"), "must be non-zero");
  }
  t.tag.normal.normalize();
  t.tag.side = o.Num("side_m", t.tag.side, 1e-3, 10.0);
  s.pickup.side_world = t.tag.side;
  if (const json* w = o.Get("waypoints")) {
    if (!w->is_array()) throw ConfigError(o.At("waypoints"), "expected an array");
    for (std::size_t i = 0; i < w->size(); ++i) {
      t.waypoints.push_back(Obj::ToVec3(
          (*w)[i], o.At("waypoints") + "[" + std::to_string(i) + "]"));
    }
  }
  t.speed = o.Num("speed", t.speed, 1e-3, 10.0);
  t.start = Sec(o.Num("start_s", 0.0, 0.0, 1e6));
  if (auto y = o.Child("yank")) {
    Yank yank;
    yank.delay = Sec(y->Num("delay_s", ToSeconds(yank.delay), 0.0, 60.0));
    yank.duration = Sec(y->Num("duration_s", ToSeconds(yank.duration), 1e-3, 60.0));
    yank.offset = y->Vec3("offset", yank.offset);
    y->Finish();
    t.yank = yank;
  }
  o.Finish();
}

void ParseTeleop(Obj o, Scenario& s) {
  s.publish_period = Sec(1.0 / o.Num("publish_hz", 20.0, 1.0, 1000.0));
  if (const json* tr = o.Get("trace")) {
    if (!tr->is_array()) throw ConfigError(o.At("trace"), "expected an array");
    for (std::size_t i = 0; i < tr->size(); ++i) {
      Obj step((*tr)[i], o.At("trace") + "[" + std::to_string(i) + "]");
      nodes::TeleopStep ts;
      ts.start = Sec(step.Num("t", 0.0, 0.0, 1e6));
      ts.duration = Sec(step.Num("duration", 0.0, 0.0, 1e6));
      const std::string type =
          step.Choice("type", "velocity", {"velocity", "height", "grasp", "mode"});
      if (type == "velocity") {
        ts.payload = nodes::VelocityCmd{
            static_cast<float>(step.Num("forward", 0.0, -10.0, 10.0)),
            static_cast<float>(step.Num("yaw", 0.0, -10.0, 10.0))};
      } else if (type == "height") {
        ts.payload =
            nodes::HeightCmd{static_cast<float>(step.Num("rate", 0.0, -2.0, 2.0))};
      } else if (type == "grasp") {
        ts.payload = nodes::GraspCmd{};
      } else {
        ts.payload = nodes::ModeCmd{static_cast<nodes::Mode>(
            static_cast<int>(step.Num("value", 0, 0, 1)))};
      }
      step.Finish();
      s.trace.push_back(ts);
    }
  }
  o.Finish();
}

}  // namespace

Scenario ParseScenario(const json& doc) {
  Scenario s;
  s.raw = doc;
  Obj o(doc, "");
  s.name = o.Str("name", s.name);
  s.seed = o.Uint("seed", s.seed);
  s.duration = Sec(o.Num("duration_s", ToSeconds(s.duration), 0.0, 86'400.0));
  s.repetitions = static_cast<int>(o.Num("repetitions", 1, 1, 100'000));
  const std::string mode =
      o.Choice("mode", "auto", {"teleop", "auto", "teleop_then_auto"});
  s.mode = mode == "teleop"   ? RunMode::kTeleop
           : mode == "auto"   ? RunMode::kAuto
                              : RunMode::kTeleopThenAuto;
  if (const json* l = o.Get("linger_after_finish_s")) {
    if (l->is_null()) {
      s.linger_after_finish.reset();
    } else {
      s.linger_after_finish =
          Sec(Obj::CheckNum(*l, "linger_after_finish_s", 0.0, 1e6));
    }
  }
  if (auto link = o.Child("link")) {
    if (auto c = link->Child("cloud_edge")) s.cloud_edge = ParseLink(*c);
    if (auto r = link->Child("rcu_edge")) s.rcu_edge = ParseLink(*r);
    link->Finish();
  }
  if (auto rcu = o.Child("rcu")) {
    s.rcu_delay = Ms(rcu->Num("delay_ms", 2.0, 0.0, 10'000.0));
    rcu->Finish();
  }
  if (auto h = o.Child("heartbeat")) ParseHeartbeat(*h, s.heartbeat);
  if (auto r = o.Child("robot")) ParseRobot(*r, s);
  if (auto c = o.Child("camera")) ParseCamera(*c, s);
  if (auto v = o.Child("vision")) {
    s.recognition_rate_hz = v->Num("rate_hz", s.recognition_rate_hz, 1.0, 10.0);
    s.pixel_noise = v->Num("pixel_noise", s.pixel_noise, 0.0, 100.0);
    v->Finish();
  }
  if (auto i = o.Child("ibvs")) ParseIbvs(*i, s);
  if (auto g = o.Child("grasp")) ParseGrasp(*g, s);
  if (auto t = o.Child("target")) ParseTarget(*t, s);
  if (auto t = o.Child("teleop")) ParseTeleop(*t, s);
  o.Finish();

  if (s.mode == RunMode::kAuto && !s.engage_at) s.engage_at = 500'000;
  if (s.mode == RunMode::kTeleop) s.engage_at.reset();
  if (s.mode == RunMode::kTeleopThenAuto && !s.engage_at) {
    throw ConfigError("ibvs.engage_at_s", "required for teleop_then_auto");
  }
  return s;
}

Scenario LoadScenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open scenario file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path, std::string("invalid JSON: ") + e.what());
  }
  return ParseScenario(doc);
}

void SetDotted(json& doc, const std::string& path, const json& value) {
  if (path.empty()) throw ConfigError(path, "empty parameter path");
  json* node = &doc;
  std::size_t begin = 0;
  while (true) {
    const std::size_t dot = path.find('.', begin);
    const std::string key = path.substr(begin, dot - begin);
    if (key.empty()) throw ConfigError(path, "empty path component");
    if (!node->is_object()) {
      if (!node->is_null()) throw ConfigError(path, "path crosses a non-object");
      *node = json::object();
    }
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    begin = dot + 1;
  }
  *node = value;
}

}  // namespace fogservo::scenario
