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

// Plan replay and the metric trajectories recorded along the way.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "equilibrium/cluster.hpp"
#include "equilibrium/io/state_file.hpp"
#include "equilibrium/plan.hpp"
#include "equilibrium/topology.hpp"

namespace equilibrium {

// Applies a move in place. Throws MoveError if the shard is not on the
// source (stale), the destination breaks the pool's rule, or the destination
// would overflow. The state is unchanged when an error is thrown.
inline void apply_move(ClusterState& state, Move& move) {
  const std::string what = "move of pg " + pg_name(move.pg_id()) + " osd." +
                            std::to_string(move.from) + "->osd." + std::to_string(move.to);
  const auto pool_pos = state.find_pool(move.pool);
  if (!pool_pos) throw MoveError(what + ": unknown pool");
  const auto& pool = state.pools[*pool_pos];
  auto it = state.pg_map.find(move.pg_id());
  if (it == state.pg_map.end()) throw MoveError(what + ": pg is not placed");
  auto& list = it->second;

  const auto pos = std::find(list.begin(), list.end(), move.from);
  if (pos == list.end()) throw MoveError(what + ": stale, shard is not on the source OSD");
  const auto slot = static_cast<std::uint32_t>(pos - list.begin());
  if (move.slot != kUnresolvedSlot && move.slot != slot)
    throw MoveError(what + ": stale, source holds a different slot");
  if (move.from == move.to) throw MoveError(what + ": source equals destination");

  const auto from_pos = state.find_osd(move.from);
  const auto to_pos = state.find_osd(move.to);
  if (!from_pos || !to_pos) throw MoveError(what + ": unknown OSD");
  const Bytes size = shard_size_bytes(pool, move.pg);
  if (move.bytes != size)
    throw MoveError(what + ": recorded size " + std::to_string(move.bytes) + " differs from shard size " +
                    std::to_string(size));

  const auto& rule = state.rule_of(pool);
  auto& dst = state.osds[*to_pos];
  if (std::find(list.begin(), list.end(), move.to) != list.end())
    throw MoveError(what + ": rule violation, destination already holds a shard of this pg");
  if (!osd_eligible(state, rule, dst)) throw MoveError(what + ": rule violation, destination not eligible");
  const NodeId dom = failure_domain_of(state, rule, move.to);
  for (std::uint32_t s = 0; s < list.size(); ++s)
    if (s != slot && failure_domain_of(state, rule, list[s]) == dom)
      throw MoveError(what + ": rule violation, failure domain already used");
  if (dst.free_bytes() < size) throw MoveError(what + ": destination would overflow");

  auto& src = state.osds[*from_pos];
  src.used_bytes -= size;
  dst.used_bytes += size;
  list[slot] = move.to;
  move.slot = slot;
}

struct TrajectoryRecord {
  std::size_t move_index = 0;
  std::map<PoolId, Bytes> pool_free;
  std::map<std::string, double> class_variance;
  Bytes cumulative_moved_bytes = 0;
  std::int64_t calc_time_ns = 0;

  friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

// Metric snapshot of a state. `occupancy` must describe the same state.
inline TrajectoryRecord snapshot(const ClusterState& state, const Occupancy& occupancy,
                                 std::size_t move_index, Bytes cumulative, std::int64_t calc_time_ns) {
  TrajectoryRecord r;
  r.move_index = move_index;
  r.cumulative_moved_bytes = cumulative;
  r.calc_time_ns = calc_time_ns;
  for (std::size_t p = 0; p < state.pools.size(); ++p) {
    std::map<OsdId, std::uint32_t> counts;
    const auto& c = occupancy.counts(p);
    for (std::size_t o = 0; o < c.size(); ++o)
      if (c[o]) counts[state.osds[o].id] = c[o];
    r.pool_free[state.pools[p].id] =
        counts.empty() ? 0 : pool_free_space_from_counts(state, state.pools[p], counts);
  }
  for (const auto& cls : device_classes(state)) r.class_variance[cls] = utilization_variance(state, cls);
  return r;
}

inline TrajectoryRecord snapshot(const ClusterState& state, std::size_t move_index = 0,
                                 Bytes cumulative = 0, std::int64_t calc_time_ns = 0) {
  return snapshot(state, Occupancy(state), move_index, cumulative, calc_time_ns);
}

struct SimulationResult {
  ClusterState final_state;
  std::vector<TrajectoryRecord> records;
};

// Replays `plan` on a copy of `state`, recording a baseline plus one record
// per move.
inline SimulationResult simulate_plan(const ClusterState& state, const Plan& plan) {
  const std::string fp = fingerprint(state);
  if (plan.fingerprint != fp)
    throw StateError("fingerprint mismatch: plan was generated for " + plan.fingerprint +
                     ", state is " + fp);
  SimulationResult result{state, {}};
  auto& cur = result.final_state;
  Occupancy occupancy(cur);
  result.records.reserve(plan.moves.size() + 1);
  result.records.push_back(snapshot(cur, occupancy, 0, 0, 0));
  Bytes moved = 0;
  for (std::size_t i = 0; i < plan.moves.size(); ++i) {
    Move m = plan.moves[i];
    try {
      apply_move(cur, m);
    } catch (const MoveError& e) {
      throw MoveError("plan move " + std::to_string(i + 1) + ": " + e.what());
    }
    const auto pool_pos = *cur.find_pool(m.pool);
    occupancy.move(pool_pos, ShardRef{m.pool, m.pg, m.slot, m.bytes}, cur.osd_pos(m.from),
                   cur.osd_pos(m.to));
    moved += m.bytes;
    const std::int64_t t = i < plan.calc_time_ns.size() ? plan.calc_time_ns[i] : 0;
    result.records.push_back(snapshot(cur, occupancy, i + 1, moved, t));
  }
  return result;
}

struct Summary {
  std::map<PoolId, std::int64_t> gained_free_bytes;  // final minus initial, per pool
  std::int64_t gained_total = 0;                     // plain sum over pools
  Bytes moved_bytes = 0;
  std::map<std::string, double> final_variance;
  std::size_t move_count = 0;
};

inline Summary summarize(const ClusterState& initial, const ClusterState& final_state,
                         const std::vector<TrajectoryRecord>& records) {
  if (records.empty()) throw StateError("summarize needs at least the baseline record");
  Summary s;
  for (const auto& pool : initial.pools) {
    const auto before = pool_free_space(initial, pool.id);
    const auto after = pool_free_space(final_state, pool.id);
    const auto gained = static_cast<std::int64_t>(after) - static_cast<std::int64_t>(before);
    s.gained_free_bytes[pool.id] = gained;
    s.gained_total += gained;
  }
  s.moved_bytes = records.back().cumulative_moved_bytes;
  s.final_variance = records.back().class_variance;
  s.move_count = records.back().move_index;
  return s;
}

}  // namespace equilibrium
