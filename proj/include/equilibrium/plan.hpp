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

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "equilibrium/types.hpp"

namespace equilibrium {

// Slot value for moves read back from a plan file, where the slot is not
// written. apply_move locates the shard by its source OSD and fills it in.
inline constexpr std::uint32_t kUnresolvedSlot = std::numeric_limits<std::uint32_t>::max();

// Relocation of one PG shard.
struct Move {
  PoolId pool = 0;
  std::uint32_t pg = 0;
  std::uint32_t slot = kUnresolvedSlot;
  OsdId from = 0;
  OsdId to = 0;
  Bytes bytes = 0;

  PgId pg_id() const { return {pool, pg}; }

  // A PG never holds an OSD twice, so (pg, from) already pins the slot;
  // equality leaves it out so that moves read back from a file compare equal.
  friend bool operator==(const Move& a, const Move& b) {
    return a.pool == b.pool && a.pg == b.pg && a.from == b.from && a.to == b.to && a.bytes == b.bytes;
  }
};

struct Plan {
  std::vector<Move> moves;
  std::string fingerprint;  // of the state the plan was generated from
  // Wall-clock generation time per move. Not persisted and not compared.
  std::vector<std::int64_t> calc_time_ns;

  friend bool operator==(const Plan& a, const Plan& b) {
    return a.moves == b.moves && a.fingerprint == b.fingerprint;
  }
};

}  // namespace equilibrium
