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

// Simplified CRUSH: straw2 descent through the hierarchy with one
// failure-domain level per rule, and the inverse question of which OSDs may
// legally take over a shard.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "equilibrium/cluster.hpp"
#include "equilibrium/hash.hpp"
#include "equilibrium/topology.hpp"

namespace equilibrium {

inline constexpr std::uint32_t kDefaultRetryBudget = 50;

struct SelectionContext {
  PgId pg;
  std::uint32_t slot = 0;
  std::uint32_t retry = 0;
  std::uint64_t seed = 0;
};

// Uniform draw in (0, 1] keyed on the child and the selection context.
inline double straw2_uniform(NodeId child, const SelectionContext& ctx) {
  const std::uint64_t h =
      hash_words(ctx.seed, {static_cast<std::uint64_t>(static_cast<std::uint32_t>(child)),
                            static_cast<std::uint64_t>(static_cast<std::uint32_t>(ctx.pg.pool)),
                            ctx.pg.index, ctx.slot, ctx.retry});
  return static_cast<double>((h >> 11) + 1) * 0x1.0p-53;
}

// Each child draws ln(u) / weight; the largest draw wins. The winner is
// child i with probability weight_i / sum(weights).
inline NodeId straw2_select(std::span<const NodeId> children, std::span<const double> weights,
                            const SelectionContext& ctx) {
  std::optional<std::size_t> best;
  double best_draw = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < children.size(); ++i) {
    if (!(weights[i] > 0.0)) continue;
    const double draw = std::log(straw2_uniform(children[i], ctx)) / weights[i];
    if (!best || draw > best_draw) {
      best = i;
      best_draw = draw;
    }
  }
  if (!best) throw PlacementError("straw2 selection over a node without positively weighted children");
  return children[*best];
}

inline NodeId straw2_select(const CrushTree& tree, NodeId node, const SelectionContext& ctx) {
  const auto& n = tree.node(node);
  std::vector<double> weights;
  weights.reserve(n.children.size());
  for (auto c : n.children) weights.push_back(tree.node(c).weight);
  return straw2_select(n.children, weights, ctx);
}

// Places PGs under a fixed topology. Node weights are restricted to OSDs the
// rule may use, like a per-device-class shadow tree.
class Placer {
 public:
  Placer(const ClusterState& state, std::uint64_t seed,
         std::uint32_t retry_budget = kDefaultRetryBudget)
      : state_(state), seed_(seed), retry_budget_(retry_budget) {}

  std::vector<OsdId> place(PoolId pool_id, std::uint32_t pg_index) {
    const auto& pool = state_.pool(pool_id);
    if (pg_index >= pool.pg_count)
      throw PlacementError("pg index out of range for pool " + std::to_string(pool_id));
    const auto& rule = state_.rule_of(pool);
    const auto& view = view_for(rule);
    if (view.domain_count < rule.shard_count)
      throw PlacementError("placement infeasible for rule " + std::to_string(rule.id) + ": " +
                           std::to_string(view.domain_count) + " failure domains, " +
                           std::to_string(rule.shard_count) + " shards");

    const PgId pg{pool_id, pg_index};
    std::vector<OsdId> out;
    std::set<NodeId> used_domains;
    for (std::uint32_t slot = 0; slot < rule.shard_count; ++slot) {
      bool placed = false;
      for (std::uint32_t retry = 0; retry <= retry_budget_ && !placed; ++retry) {
        const SelectionContext ctx{pg, slot, retry, seed_};
        NodeId node = rule.root;
        NodeId domain = node;
        while (state_.crush.node(node).level != Level::osd) {
          if (state_.crush.node(node).level <= rule.failure_domain && domain == rule.root)
            domain = node;
          node = descend(view, node, ctx);
        }
        if (domain == rule.root) domain = node;  // no bucket at the failure-domain level
        if (used_domains.count(domain)) continue;
        used_domains.insert(domain);
        out.push_back(node);
        placed = true;
      }
      if (!placed)
        throw PlacementError("retry budget exhausted placing slot " + std::to_string(slot) +
                             " of pg " + pg_name(pg));
    }
    return out;
  }

 private:
  struct RuleWeights {
    std::map<NodeId, double> weight;
    std::size_t domain_count = 0;
  };

  const RuleWeights& view_for(const PlacementRule& rule) {
    auto it = views_.find(rule.id);
    if (it != views_.end()) return it->second;
    RuleWeights view;
    std::set<NodeId> domains;
    for (const auto& o : state_.osds) {
      if (!osd_eligible(state_, rule, o)) continue;
      domains.insert(failure_domain_of(state_, rule, o.id));
      std::optional<NodeId> cur = o.id;
      const double w = static_cast<double>(o.capacity_bytes);
      while (cur) {
        view.weight[*cur] += w;
        if (*cur == rule.root) break;
        cur = state_.crush.parent(*cur);
      }
    }
    view.domain_count = domains.size();
    return views_.emplace(rule.id, std::move(view)).first->second;
  }

  NodeId descend(const RuleWeights& view, NodeId node, const SelectionContext& ctx) const {
    const auto& children = state_.crush.node(node).children;
    std::vector<double> weights;
    weights.reserve(children.size());
    for (auto c : children) {
      auto it = view.weight.find(c);
      weights.push_back(it == view.weight.end() ? 0.0 : it->second);
    }
    return straw2_select(children, weights, ctx);
  }

  const ClusterState& state_;
  std::uint64_t seed_;
  std::uint32_t retry_budget_;
  std::map<RuleId, RuleWeights> views_;
};

inline std::vector<OsdId> place_pg(const ClusterState& state, PoolId pool, std::uint32_t pg_index,
                                   std::uint64_t seed,
                                   std::uint32_t retry_budget = kDefaultRetryBudget) {
  return Placer(state, seed, retry_budget).place(pool, pg_index);
}

// Replaces the PG shard map with a fresh CRUSH placement of every PG and
// recomputes OSD usage to match.
inline void place_all(ClusterState& state, std::uint64_t seed) {
  PgShardMap map;
  {
    Placer placer(state, seed);
    for (const auto& pool : state.pools)
      for (std::uint32_t pg = 0; pg < pool.pg_count; ++pg)
        map[PgId{pool.id, pg}] = placer.place(pool.id, pg);
  }
  state.pg_map = std::move(map);
  recompute_used_bytes(state);
}

// OSDs that could replace `source` in the PG without breaking its rule,
// ascending by id.
inline std::vector<OsdId> candidate_destinations(const ClusterState& state, const Topology& topo,
                                                 PgId pg, std::uint32_t slot, OsdId source) {
  const auto pool_pos = state.find_pool(pg.pool);
  if (!pool_pos) throw StateError("unknown pool " + std::to_string(pg.pool));
  const auto it = state.pg_map.find(pg);
  if (it == state.pg_map.end()) throw StateError("pg " + pg_name(pg) + " is not placed");
  const auto& list = it->second;
  if (slot >= list.size() || list[slot] != source)
    throw StateError("osd." + std::to_string(source) + " does not hold slot " +
                     std::to_string(slot) + " of pg " + pg_name(pg));
  const std::size_t rule_pos = topo.rule_of_pool(*pool_pos);

  std::vector<NodeId> other_domains;
  for (std::uint32_t s = 0; s < list.size(); ++s)
    if (s != slot) other_domains.push_back(topo.domain(rule_pos, state.osd_pos(list[s])));

  std::vector<OsdId> out;
  for (std::size_t d = 0; d < state.osds.size(); ++d) {
    const OsdId id = state.osds[d].id;
    if (id == source || !topo.eligible(rule_pos, d)) continue;
    if (std::find(list.begin(), list.end(), id) != list.end()) continue;
    const NodeId dom = topo.domain(rule_pos, d);
    if (std::find(other_domains.begin(), other_domains.end(), dom) != other_domains.end()) continue;
    out.push_back(id);
  }
  return out;
}

inline std::vector<OsdId> candidate_destinations(const ClusterState& state, PgId pg,
                                                 std::uint32_t slot, OsdId source) {
  return candidate_destinations(state, Topology(state), pg, slot, source);
}

}  // namespace equilibrium
