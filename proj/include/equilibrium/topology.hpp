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

// Precomputed lookup tables over a ClusterState. Topology holds what moves
// cannot change (eligibility, failure domains, ideal counts); Occupancy holds
// what they do (per-pool shard counts, resident shards per OSD).

#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "equilibrium/cluster.hpp"

namespace equilibrium {

// One shard resident on an OSD. Ordered largest first, then by (pool, pg).
struct ShardRef {
  PoolId pool = 0;
  std::uint32_t pg = 0;
  std::uint32_t slot = 0;
  Bytes bytes = 0;

  PgId pg_id() const { return {pool, pg}; }

  friend bool operator==(const ShardRef&, const ShardRef&) = default;
};

struct LargestFirst {
  bool operator()(const ShardRef& a, const ShardRef& b) const {
    if (a.bytes != b.bytes) return a.bytes > b.bytes;
    if (a.pool != b.pool) return a.pool < b.pool;
    return a.pg < b.pg;
  }
};

class Topology {
 public:
  explicit Topology(const ClusterState& state) : osd_count_(state.osds.size()) {
    rules_.reserve(state.rules.size());
    for (const auto& rule : state.rules) {
      RuleView view;
      view.eligible.assign(osd_count_, false);
      view.domain.assign(osd_count_, 0);
      for (std::size_t i = 0; i < osd_count_; ++i) {
        const auto& o = state.osds[i];
        view.eligible[i] = osd_eligible(state, rule, o);
        if (state.crush.contains(o.id)) view.domain[i] = failure_domain_of(state, rule, o.id);
        if (view.eligible[i]) view.capacity += static_cast<double>(o.capacity_bytes);
      }
      rules_.push_back(std::move(view));
    }
    ideal_.reserve(state.pools.size());
    pool_rule_.reserve(state.pools.size());
    for (const auto& pool : state.pools) {
      const auto rule_pos = state.find_rule(pool.rule);
      if (!rule_pos) throw StateError("pool " + std::to_string(pool.id) + " has unknown rule");
      pool_rule_.push_back(*rule_pos);
      const auto& view = rules_[*rule_pos];
      std::vector<double> ideal(osd_count_, 0.0);
      for (std::size_t i = 0; i < osd_count_; ++i)
        if (view.eligible[i])
          ideal[i] = static_cast<double>(pool.shard_total()) *
                     static_cast<double>(state.osds[i].capacity_bytes) / view.capacity;
      ideal_.push_back(std::move(ideal));
    }
  }

  std::size_t osd_count() const { return osd_count_; }
  std::size_t rule_of_pool(std::size_t pool_pos) const { return pool_rule_[pool_pos]; }

  bool eligible(std::size_t rule_pos, std::size_t osd_pos) const {
    return rules_[rule_pos].eligible[osd_pos];
  }
  NodeId domain(std::size_t rule_pos, std::size_t osd_pos) const {
    return rules_[rule_pos].domain[osd_pos];
  }
  double ideal(std::size_t pool_pos, std::size_t osd_pos) const { return ideal_[pool_pos][osd_pos]; }

 private:
  struct RuleView {
    std::vector<bool> eligible;
    std::vector<NodeId> domain;
    double capacity = 0.0;
  };

  std::size_t osd_count_;
  std::vector<RuleView> rules_;
  std::vector<std::size_t> pool_rule_;
  std::vector<std::vector<double>> ideal_;
};

class Occupancy {
 public:
  explicit Occupancy(const ClusterState& state)
      : counts_(state.pools.size(), std::vector<std::uint32_t>(state.osds.size(), 0)),
        shards_(state.osds.size()) {
    for (const auto& [pg, list] : state.pg_map) {
      const auto pool_pos = state.find_pool(pg.pool);
      if (!pool_pos) throw StateError("pg " + pg_name(pg) + " belongs to unknown pool");
      const Bytes size = shard_size_bytes(state.pools[*pool_pos], pg.index);
      for (std::uint32_t slot = 0; slot < list.size(); ++slot) {
        const auto osd_pos = state.osd_pos(list[slot]);
        ++counts_[*pool_pos][osd_pos];
        shards_[osd_pos].insert(ShardRef{pg.pool, pg.index, slot, size});
      }
    }
  }

  std::uint32_t count(std::size_t pool_pos, std::size_t osd_pos) const {
    return counts_[pool_pos][osd_pos];
  }
  const std::vector<std::uint32_t>& counts(std::size_t pool_pos) const { return counts_[pool_pos]; }
  const std::set<ShardRef, LargestFirst>& shards(std::size_t osd_pos) const { return shards_[osd_pos]; }

  void move(std::size_t pool_pos, const ShardRef& shard, std::size_t from_pos, std::size_t to_pos) {
    --counts_[pool_pos][from_pos];
    ++counts_[pool_pos][to_pos];
    shards_[from_pos].erase(shard);
    shards_[to_pos].insert(shard);
  }

 private:
  std::vector<std::vector<std::uint32_t>> counts_;
  std::vector<std::set<ShardRef, LargestFirst>> shards_;
};

}  // namespace equilibrium
