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

#ifndef FOGSERVO_COMMON_H_
#define FOGSERVO_COMMON_H_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fogservo {

// All simulated and wall-clock timestamps are integer microseconds.
using Micros = std::int64_t;

constexpr Micros kMicrosPerSecond = 1'000'000;
constexpr Micros kMicrosPerMilli = 1'000;

constexpr double ToSeconds(Micros t) { return static_cast<double>(t) / 1e6; }
constexpr Micros FromSeconds(double s) {
  return static_cast<Micros>(s * 1e6 + (s >= 0 ? 0.5 : -0.5));
}
constexpr Micros FromMillis(double ms) { return FromSeconds(ms / 1000.0); }

// Edge control period (200 Hz).
constexpr Micros kEdgeTick = 5'000;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class SingularGeometry : public Error {
 public:
  using Error::Error;
};

class InvalidDepth : public Error {
 public:
  using Error::Error;
};

class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

class NoMeasurement : public Error {
 public:
  using Error::Error;
};

class DatagramTooLarge : public Error {
 public:
  using Error::Error;
};

// Configuration problems carry the dotted path of the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Small deterministic generator. The standard distributions are
// implementation-defined, so draws are derived from raw 64-bit output here to
// keep delivery schedules and scenario outcomes identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t Next();
  // Uniform in [0, 1).
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  double Normal();

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Derive an independent stream seed from a parent seed and a label.
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream);

}  // namespace fogservo

#endif  // FOGSERVO_COMMON_H_
