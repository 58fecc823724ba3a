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

#ifndef FOGSERVO_LOG_SCHEMA_H_
#define FOGSERVO_LOG_SCHEMA_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fogservo::logs {

enum class LogKind { kTelemetry, kPhase, kDelivery };

std::string_view Name(LogKind kind);
// From the file name: telemetry.jsonl, phases.jsonl, delivery.jsonl.
std::optional<LogKind> KindFromPath(const std::filesystem::path& path);

// Returns a description of the first problem, or nothing for a valid record.
std::optional<std::string> ValidateLine(LogKind kind, std::string_view line);

struct ValidationReport {
  std::size_t lines = 0;
  std::vector<std::string> errors;  // "line N: ..."
  bool ok() const { return errors.empty(); }
};

ValidationReport ValidateFile(const std::filesystem::path& path, LogKind kind);

}  // namespace fogservo::logs

#endif  // FOGSERVO_LOG_SCHEMA_H_
