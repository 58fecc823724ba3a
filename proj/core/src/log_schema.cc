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

#include "fogservo/log_schema.h"

#include <fstream>
#include <initializer_list>
#include <set>

#include <nlohmann/json.hpp>

namespace fogservo::logs {
namespace {

using nlohmann::json;

enum class Type { kNumber, kBool, kString, kUint };

struct Field {
  const char* name;
  Type type;
  bool required;
};

bool Matches(const json& v, Type t) {
  switch (t) {
    case Type::kNumber: return v.is_number();
    case Type::kBool: return v.is_boolean();
    case Type::kString: return v.is_string();
    case Type::kUint: return v.is_number_unsigned() ||
                             (v.is_number_integer() && v.get<long long>() >= 0);
  }
  return false;
}

std::optional<std::string> Check(const json& j,
                                 std::initializer_list<Field> fields) {
  std::set<std::string> known;
  for (const Field& f : fields) {
    known.insert(f.name);
    const auto it = j.find(f.name);
    if (it == j.end()) {
      if (f.required) return std::string("missing field '") + f.name + "'";
      continue;
    }
    if (!Matches(*it, f.type)) {
      return std::string("field '") + f.name + "' has the wrong type";
    }
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) return "unexpected field '" + it.key() + "'";
  }
  return std::nullopt;
}

}  // namespace

std::string_view Name(LogKind kind) {
  switch (kind) {
    case LogKind::kTelemetry: return "telemetry";
    case LogKind::kPhase: return "phases";
    case LogKind::kDelivery: return "delivery";
  }
  return "unknown";
}

std::optional<LogKind> KindFromPath(const std::filesystem::path& path) {
  const std::string stem = path.stem().string();
  for (LogKind k : {LogKind::kTelemetry, LogKind::kPhase, LogKind::kDelivery}) {
    if (stem == Name(k)) return k;
  }
  return std::nullopt;
}

std::optional<std::string> ValidateLine(LogKind kind, std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error&) {
    return std::string("not valid JSON");
  }
  if (!j.is_object()) return std::string("record is not an object");
  switch (kind) {
    case LogKind::kTelemetry:
      return Check(j, {{"t", Type::kNumber, true},
                       {"x", Type::kNumber, true},
                       {"y", Type::kNumber, true},
                       {"heading", Type::kNumber, true},
                       {"psi", Type::kNumber, true},
                       {"psi_dot", Type::kNumber, true},
                       {"v", Type::kNumber, true},
                       {"height", Type::kNumber, true},
                       {"fallen", Type::kBool, true},
                       {"grasping", Type::kBool, true}});
    case LogKind::kPhase: {
      if (auto e = Check(j, {{"t", Type::kNumber, true},
                             {"phase", Type::kString, true},
                             {"e_norm", Type::kNumber, true},
                             {"Z", Type::kNumber, true},
                             {"success", Type::kBool, false}})) {
        return e;
      }
      static const std::set<std::string> phases = {
          "navigate", "height_adjust", "grasp", "done", "aborted"};
      if (!phases.count(j["phase"].get<std::string>())) {
        return std::string("unknown phase");
      }
      return std::nullopt;
    }
    case LogKind::kDelivery: {
      if (auto e = Check(j, {{"link", Type::kString, false},
                             {"seq", Type::kUint, true},
                             {"t_send", Type::kNumber, true},
                             {"t_deliver", Type::kNumber, false},
                             {"dropped", Type::kBool, false},
                             {"bytes", Type::kUint, true}})) {
        return e;
      }
      const bool delivered = j.contains("t_deliver");
      const bool dropped = j.contains("dropped") && j["dropped"].get<bool>();
      if (delivered == dropped) {
        return std::string("exactly one of t_deliver or dropped must be set");
      }
      if (delivered && j["t_deliver"].get<double>() < j["t_send"].get<double>()) {
        return std::string("delivered before it was sent");
      }
      return std::nullopt;
    }
  }
  return std::string("unknown log kind");
}

ValidationReport ValidateFile(const std::filesystem::path& path, LogKind kind) {
  ValidationReport report;
  std::ifstream in(path);
  if (!in) {
    report.errors.push_back("cannot open " + path.string());
    return report;
  }
  std::string line;
  while (std::getline(in, line)) {
    ++report.lines;
    if (auto e = ValidateLine(kind, line)) {
      report.errors.push_back("line " + std::to_string(report.lines) + ": " + *e);
    }
  }
  return report;
}

}  // namespace fogservo::logs
