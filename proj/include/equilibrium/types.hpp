// Copyright 2026 The Equilibrium Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace equilibrium {

using OsdId = std::int32_t;
using NodeId = std::int32_t;  // buckets are negative, OSD leaves reuse the OSD id
using PoolId = std::int32_t;
using RuleId = std::int32_t;
using Bytes = std::uint64_t;

inline constexpr Bytes KiB = 1024ULL;
inline constexpr Bytes MiB = 1024ULL * KiB;
inline constexpr Bytes GiB = 1024ULL * MiB;
inline constexpr Bytes TiB = 1024ULL * GiB;
inline constexpr Bytes PiB = 1024ULL * TiB;

// Hierarchy levels, ordered leaf to root.
enum class Level : std::uint8_t { osd = 0, host = 1, rack = 2, datacenter = 3, root = 4 };

inline std::string_view to_string(Level level) {
  switch (level) {
    case Level::osd: return "osd";
    case Level::host: return "host";
    case Level::rack: return "rack";
    case Level::datacenter: return "datacenter";
    case Level::root: return "root";
  }
  return "?";
}

inline std::optional<Level> parse_level(std::string_view s) {
  if (s == "osd") return Level::osd;
  if (s == "host") return Level::host;
  if (s == "rack") return Level::rack;
  if (s == "datacenter") return Level::datacenter;
  if (s == "root") return Level::root;
  return std::nullopt;
}

// A placement group is addressed by its pool and its index inside the pool.
struct PgId {
  PoolId pool = 0;
  std::uint32_t index = 0;

  friend auto operator<=>(const PgId&, const PgId&) = default;
};

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

class PlacementError : public Error {
 public:
  using Error::Error;
};

class MoveError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace equilibrium
