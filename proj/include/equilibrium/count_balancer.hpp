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

// Count-based baseline in the spirit of `osdmaptool --upmap`: every pool is
// balanced on its own so that each OSD's shard count lands within
// `max_deviation` of its capacity-proportional ideal. Shard and PG sizes are
// never consulted, except that a move may not overflow its destination.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "equilibrium/cluster.hpp"
#include "equilibrium/io/state_file.hpp"
#include "equilibrium/plan.hpp"
#include "equilibrium/simulator.hpp"
#include "equilibrium/topology.hpp"

namespace equilibrium {

struct CountBalanceConfig {
  std::size_t max_moves = 10000;
  std::uint32_t max_deviation = 1;
};

namespace detail {

class CountBalancer {
 public:
  CountBalancer(const ClusterState& state, const CountBalanceConfig& config)
      : state_(state), config_(config), topo_(state_), occ_(state_) {}

  Plan run() {
    Plan plan;
    plan.fingerprint = fingerprint(state_);
    for (std::size_t p = 0; p < state_.pools.size() && plan.moves.size() < config_.max_moves; ++p)
      balance_pool(p, plan);
    return plan;
  }

 private:
  double deviation(std::size_t pool_pos, std::size_t osd_pos) const {
    return static_cast<double>(occ_.count(pool_pos, osd_pos)) - topo_.ideal(pool_pos, osd_pos);
  }

  // Shards of the pool on an OSD, ascending by (pg, slot).
  std::vector<ShardRef> pool_shards(PoolId pool, std::size_t osd_pos) const {
    std::vector<ShardRef> out;
    for (const auto& s : occ_.shards(osd_pos))
      if (s.pool == pool) out.push_back(s);
    std::sort(out.begin(), out.end(), [](const ShardRef& a, const ShardRef& b) {
      return a.pg != b.pg ? a.pg < b.pg : a.slot < b.slot;
    });
    return out;
  }

  bool may_host(std::size_t rule_pos, const ShardRef& shard, std::size_t dst) const {
    if (!topo_.eligible(rule_pos, dst)) return false;
    if (state_.osds[dst].free_bytes() < shard.bytes) return false;
    const auto& list = state_.pg_map.at(shard.pg_id());
    const NodeId dom = topo_.domain(rule_pos, dst);
    for (std::uint32_t s = 0; s < list.size(); ++s) {
      const auto p = state_.osd_pos(list[s]);
      if (p == dst) return false;
      if (s != shard.slot && topo_.domain(rule_pos, p) == dom) return false;
    }
    return true;
  }

  // Moving a shard from a to b shrinks the pool's sum of squared deviations
  // only if their deviations differ by more than one.
  bool narrows(std::size_t pool_pos, std::size_t from, std::size_t to) const {
    return deviation(pool_pos, from) - deviation(pool_pos, to) > 1.0 + 1e-9;
  }

  void record(std::size_t pool_pos, const ShardRef& shard, std::size_t from, std::size_t to, Plan& plan) {
    Move m{shard.pool, shard.pg, shard.slot, state_.osds[from].id, state_.osds[to].id, shard.bytes};
    apply_move(state_, m);
    occ_.move(pool_pos, shard, from, to);
    plan.moves.push_back(m);
  }

  // Moves one shard off an overfull OSD. Destination is the most underfull
  // eligible OSD that can take it.
  bool relieve(std::size_t pool_pos, std::size_t src, const std::vector<std::size_t>& members, Plan& plan) {
    const auto rule_pos = topo_.rule_of_pool(pool_pos);
    std::vector<std::size_t> dsts;
    for (auto d : members)
      if (d != src && narrows(pool_pos, src, d)) dsts.push_back(d);
    sort_by_deviation(pool_pos, dsts, /*descending=*/false);
    for (const auto& shard : pool_shards(state_.pools[pool_pos].id, src)) {
      for (auto d : dsts) {
        if (!may_host(rule_pos, shard, d)) continue;
        record(pool_pos, shard, src, d, plan);
        return true;
      }
    }
    return false;
  }

  // Moves one shard onto an underfull OSD from the most overfull OSD able to
  // give one.
  bool fill(std::size_t pool_pos, std::size_t dst, const std::vector<std::size_t>& members, Plan& plan) {
    const auto rule_pos = topo_.rule_of_pool(pool_pos);
    std::vector<std::size_t> srcs;
    for (auto s : members)
      if (s != dst && narrows(pool_pos, s, dst)) srcs.push_back(s);
    sort_by_deviation(pool_pos, srcs, /*descending=*/true);
    for (auto s : srcs) {
      for (const auto& shard : pool_shards(state_.pools[pool_pos].id, s)) {
        if (!may_host(rule_pos, shard, dst)) continue;
        record(pool_pos, shard, s, dst, plan);
        return true;
      }
    }
    return false;
  }

  void sort_by_deviation(std::size_t pool_pos, std::vector<std::size_t>& v, bool descending) const {
    std::stable_sort(v.begin(), v.end(), [&](std::size_t a, std::size_t b) {
      const double da = deviation(pool_pos, a), db = deviation(pool_pos, b);
      if (da != db) return descending ? da > db : da < db;
      return state_.osds[a].id < state_.osds[b].id;
    });
  }

  void balance_pool(std::size_t pool_pos, Plan& plan) {
    const auto rule_pos = topo_.rule_of_pool(pool_pos);
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < state_.osds.size(); ++i)
      if (topo_.eligible(rule_pos, i)) members.push_back(i);
    const double limit = static_cast<double>(config_.max_deviation) + 1e-9;
    std::set<std::size_t> stuck;

    while (plan.moves.size() < config_.max_moves) {
      // worst offender by absolute deviation; overfull wins ties, then id
      std::optional<std::size_t> worst;
      double worst_abs = 0.0;
      for (auto i : members) {
        if (stuck.count(i)) continue;
        const double dev = deviation(pool_pos, i);
        if (std::abs(dev) <= limit) continue;
        const double a = std::abs(dev);
        if (!worst || a > worst_abs || (a == worst_abs && dev > 0 && deviation(pool_pos, *worst) < 0)) {
          worst = i;
          worst_abs = a;
        }
      }
      if (!worst) return;
      const bool moved = deviation(pool_pos, *worst) > 0 ? relieve(pool_pos, *worst, members, plan)
                                                         : fill(pool_pos, *worst, members, plan);
      if (moved) {
        stuck.clear();
      } else {
        stuck.insert(*worst);
      }
    }
  }

  ClusterState state_;
  CountBalanceConfig config_;
  Topology topo_;
  Occupancy occ_;
};

}  // namespace detail

inline Plan balance_count(const ClusterState& state, const CountBalanceConfig& config = {}) {
  if (config.max_deviation < 1) throw StateError("max_deviation must be at least 1");
  if (auto v = validate_state(state); !v.empty())
    throw StateError("invalid initial state: " + v.front().to_string());
  return detail::CountBalancer(state, config).run();
}

}  // namespace equilibrium
