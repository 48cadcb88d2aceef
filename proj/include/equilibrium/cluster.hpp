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

// Cluster data model: OSDs, the CRUSH hierarchy, placement rules, pools and
// the PG shard map, plus the capacity arithmetic built on top of them.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "equilibrium/types.hpp"

namespace equilibrium {

struct Osd {
  OsdId id = 0;
  Bytes capacity_bytes = 0;
  Bytes used_bytes = 0;
  Bytes overhead_bytes = 0;  // constant usage not attributable to shards
  std::string device_class;
  NodeId crush_parent = 0;

  double utilization() const {
    return static_cast<double>(used_bytes) / static_cast<double>(capacity_bytes);
  }
  Bytes free_bytes() const { return used_bytes >= capacity_bytes ? 0 : capacity_bytes - used_bytes; }

  friend bool operator==(const Osd&, const Osd&) = default;
};

struct CrushNode {
  NodeId id = 0;
  std::string name;
  Level level = Level::root;
  double weight = 0.0;  // sum of leaf capacities below, in bytes
  std::vector<NodeId> children;

  friend bool operator==(const CrushNode&, const CrushNode&) = default;
};

class CrushTree {
 public:
  void add_node(CrushNode node) {
    const NodeId id = node.id;
    if (!nodes_.emplace(id, std::move(node)).second)
      throw StateError("duplicate crush node id " + std::to_string(id));
  }

  // Appends `child` below `parent`. Both nodes must exist.
  void attach(NodeId parent, NodeId child) {
    auto& p = at(parent);
    at(child);
    if (parent_.count(child))
      throw StateError("crush node " + std::to_string(child) + " already has a parent");
    p.children.push_back(child);
    parent_[child] = parent;
  }

  bool contains(NodeId id) const { return nodes_.count(id) != 0; }

  const CrushNode& node(NodeId id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw StateError("unknown crush node " + std::to_string(id));
    return it->second;
  }

  std::optional<NodeId> parent(NodeId id) const {
    auto it = parent_.find(id);
    if (it == parent_.end()) return std::nullopt;
    return it->second;
  }

  // Closest ancestor (or the node itself) at exactly `level`.
  std::optional<NodeId> ancestor_at(NodeId id, Level level) const {
    std::optional<NodeId> cur = id;
    for (std::size_t guard = 0; cur && guard <= nodes_.size(); ++guard) {
      const auto it = nodes_.find(*cur);
      if (it == nodes_.end()) return std::nullopt;
      if (it->second.level == level) return cur;
      if (it->second.level > level) return std::nullopt;
      cur = parent(*cur);
    }
    return std::nullopt;
  }

  bool is_under(NodeId id, NodeId ancestor) const {
    std::optional<NodeId> cur = id;
    for (std::size_t guard = 0; cur && guard <= nodes_.size(); ++guard) {
      if (*cur == ancestor) return true;
      cur = parent(*cur);
    }
    return false;
  }

  std::vector<NodeId> roots() const {
    std::vector<NodeId> out;
    for (const auto& [id, n] : nodes_)
      if (!parent_.count(id)) out.push_back(id);
    return out;
  }

  std::optional<NodeId> find_by_name(const std::string& name) const {
    for (const auto& [id, n] : nodes_)
      if (n.name == name) return id;
    return std::nullopt;
  }

  const std::map<NodeId, CrushNode>& nodes() const { return nodes_; }

  // Sets every weight to the sum of leaf weights below it. `leaf_weight`
  // maps an OSD id to its weight.
  template <typename LeafWeight>
  void recompute_weights(LeafWeight&& leaf_weight) {
    for (const auto root : roots()) recompute_from(root, leaf_weight, 0);
  }

  friend bool operator==(const CrushTree&, const CrushTree&) = default;

 private:
  CrushNode& at(NodeId id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw StateError("unknown crush node " + std::to_string(id));
    return it->second;
  }

  template <typename LeafWeight>
  double recompute_from(NodeId id, LeafWeight& leaf_weight, std::size_t depth) {
    auto& n = at(id);
    if (depth > nodes_.size()) throw StateError("crush tree contains a cycle");
    if (n.level == Level::osd) {
      n.weight = leaf_weight(n.id);
      return n.weight;
    }
    double sum = 0.0;
    for (auto c : n.children) sum += recompute_from(c, leaf_weight, depth + 1);
    at(id).weight = sum;
    return sum;
  }

  std::map<NodeId, CrushNode> nodes_;
  std::map<NodeId, NodeId> parent_;
};

struct PlacementRule {
  RuleId id = 0;
  std::string name;
  NodeId root = 0;
  Level failure_domain = Level::host;
  std::optional<std::string> device_class;
  std::uint32_t shard_count = 1;

  friend bool operator==(const PlacementRule&, const PlacementRule&) = default;
};

struct Scheme {
  enum class Kind : std::uint8_t { replicated, erasure };
  Kind kind = Kind::replicated;
  std::uint32_t size = 1;  // replica count for replicated pools
  std::uint32_t k = 0;
  std::uint32_t m = 0;

  static Scheme replicated(std::uint32_t r) { return {Kind::replicated, r, 0, 0}; }
  static Scheme erasure(std::uint32_t k, std::uint32_t m) { return {Kind::erasure, 0, k, m}; }

  std::uint32_t shard_count() const { return kind == Kind::replicated ? size : k + m; }
  // Number of shards the user data of one PG is split across.
  std::uint32_t data_divisor() const { return kind == Kind::replicated ? 1 : k; }

  friend bool operator==(const Scheme&, const Scheme&) = default;
};

struct Pool {
  PoolId id = 0;
  std::string name;
  RuleId rule = 0;
  Scheme scheme;
  std::uint32_t pg_count = 1;
  std::vector<Bytes> stored_bytes_per_pg;
  bool user_data = false;

  std::uint64_t shard_total() const {
    return static_cast<std::uint64_t>(pg_count) * scheme.shard_count();
  }

  friend bool operator==(const Pool&, const Pool&) = default;
};

using PgShardMap = std::map<PgId, std::vector<OsdId>>;

struct ClusterState {
  std::vector<Osd> osds;  // sorted by id
  CrushTree crush;
  std::vector<PlacementRule> rules;  // sorted by id
  std::vector<Pool> pools;           // sorted by id
  PgShardMap pg_map;

  void sort_by_id() {
    auto by_id = [](const auto& a, const auto& b) { return a.id < b.id; };
    std::sort(osds.begin(), osds.end(), by_id);
    std::sort(rules.begin(), rules.end(), by_id);
    std::sort(pools.begin(), pools.end(), by_id);
  }

  std::optional<std::size_t> find_osd(OsdId id) const { return find_pos(osds, id); }
  std::optional<std::size_t> find_pool(PoolId id) const { return find_pos(pools, id); }
  std::optional<std::size_t> find_rule(RuleId id) const { return find_pos(rules, id); }

  std::size_t osd_pos(OsdId id) const {
    auto p = find_osd(id);
    if (!p) throw StateError("unknown OSD " + std::to_string(id));
    return *p;
  }
  const Osd& osd(OsdId id) const { return osds[osd_pos(id)]; }
  Osd& osd(OsdId id) { return osds[osd_pos(id)]; }

  const Pool& pool(PoolId id) const {
    auto p = find_pool(id);
    if (!p) throw StateError("unknown pool " + std::to_string(id));
    return pools[*p];
  }
  const PlacementRule& rule(RuleId id) const {
    auto p = find_rule(id);
    if (!p) throw StateError("unknown rule " + std::to_string(id));
    return rules[*p];
  }
  const PlacementRule& rule_of(const Pool& p) const { return rule(p.rule); }

  friend bool operator==(const ClusterState&, const ClusterState&) = default;

 private:
  template <typename V, typename Id>
  static std::optional<std::size_t> find_pos(const V& v, Id id) {
    auto it = std::lower_bound(v.begin(), v.end(), id,
                               [](const auto& e, Id key) { return e.id < key; });
    if (it == v.end() || it->id != id) return std::nullopt;
    return static_cast<std::size_t>(it - v.begin());
  }
};

// ---------------------------------------------------------------------------
// Capacity arithmetic

inline Bytes shard_size_bytes(const Pool& pool, std::uint32_t pg_index) {
  if (pg_index >= pool.pg_count || pg_index >= pool.stored_bytes_per_pg.size())
    throw StateError("pg index " + std::to_string(pg_index) + " out of range for pool " +
                     std::to_string(pool.id));
  const Bytes stored = pool.stored_bytes_per_pg[pg_index];
  const Bytes d = pool.scheme.data_divisor();
  return d <= 1 ? stored : (stored + d - 1) / d;
}

inline double osd_utilization(const ClusterState& state, OsdId id) {
  const auto& o = state.osd(id);
  if (o.capacity_bytes == 0) throw StateError("OSD " + std::to_string(id) + " has zero capacity");
  return o.utilization();
}

// Failure domain of an OSD under a rule. An OSD with no ancestor at the
// rule's level is its own failure domain.
inline NodeId failure_domain_of(const ClusterState& state, const PlacementRule& rule, OsdId id) {
  return state.crush.ancestor_at(id, rule.failure_domain).value_or(id);
}

inline bool osd_eligible(const ClusterState& state, const PlacementRule& rule, const Osd& osd) {
  if (rule.device_class && *rule.device_class != osd.device_class) return false;
  return state.crush.contains(osd.id) && state.crush.is_under(osd.id, rule.root);
}

inline std::vector<OsdId> eligible_osds(const ClusterState& state, const PlacementRule& rule) {
  std::vector<OsdId> out;
  for (const auto& o : state.osds)
    if (osd_eligible(state, rule, o)) out.push_back(o.id);
  return out;
}

inline double ideal_shard_count(const ClusterState& state, PoolId pool_id, OsdId osd_id) {
  const auto& pool = state.pool(pool_id);
  const auto& rule = state.rule_of(pool);
  const auto& target = state.osd(osd_id);
  if (!osd_eligible(state, rule, target))
    throw StateError("OSD " + std::to_string(osd_id) + " is not eligible for pool " +
                     std::to_string(pool_id));
  double total = 0.0;
  for (const auto& o : state.osds)
    if (osd_eligible(state, rule, o)) total += static_cast<double>(o.capacity_bytes);
  return static_cast<double>(pool.shard_total()) * static_cast<double>(target.capacity_bytes) / total;
}

// Shards of `pool_id` currently held by each OSD.
inline std::map<OsdId, std::uint32_t> pool_shard_counts(const ClusterState& state, PoolId pool_id) {
  std::map<OsdId, std::uint32_t> counts;
  for (auto it = state.pg_map.lower_bound(PgId{pool_id, 0});
       it != state.pg_map.end() && it->first.pool == pool_id; ++it)
    for (auto o : it->second) ++counts[o];
  return counts;
}

// Largest amount of additional user data the pool accepts before one of its
// OSDs overflows, assuming objects hash uniformly across PGs. An OSD holding
// n shards grows by n * X / (pg_count * divisor) when X bytes are written.
inline Bytes pool_free_space_from_counts(const ClusterState& state, const Pool& pool,
                                         const std::map<OsdId, std::uint32_t>& counts) {
  if (counts.empty()) throw StateError("pool " + std::to_string(pool.id) + " has no placed shards");
  using u128 = unsigned __int128;
  u128 best = std::numeric_limits<u128>::max();
  for (const auto& [id, n] : counts) {
    if (n == 0) continue;
    const u128 room = static_cast<u128>(state.osd(id).free_bytes()) * pool.pg_count *
                      pool.scheme.data_divisor() / n;
    best = std::min(best, room);
  }
  constexpr u128 cap = std::numeric_limits<Bytes>::max();
  return static_cast<Bytes>(std::min(best, cap));
}

inline Bytes pool_free_space(const ClusterState& state, PoolId pool_id) {
  return pool_free_space_from_counts(state, state.pool(pool_id), pool_shard_counts(state, pool_id));
}

inline std::vector<std::string> device_classes(const ClusterState& state) {
  std::set<std::string> s;
  for (const auto& o : state.osds) s.insert(o.device_class);
  return {s.begin(), s.end()};
}

// Population variance of OSD utilization, optionally restricted to one class.
inline double utilization_variance(const ClusterState& state,
                                   const std::optional<std::string>& device_class = std::nullopt) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& o : state.osds) {
    if (device_class && o.device_class != *device_class) continue;
    sum += o.utilization();
    ++n;
  }
  if (n == 0) throw StateError("no OSDs match device class " + device_class.value_or("<any>"));
  const double mean = sum / static_cast<double>(n);
  double acc = 0.0;
  for (const auto& o : state.osds) {
    if (device_class && o.device_class != *device_class) continue;
    const double d = o.utilization() - mean;
    acc += d * d;
  }
  return acc / static_cast<double>(n);
}

// Sets used_bytes = overhead + sum of resident shard sizes on every OSD.
inline void recompute_used_bytes(ClusterState& state) {
  for (auto& o : state.osds) o.used_bytes = o.overhead_bytes;
  for (const auto& [pg, list] : state.pg_map) {
    auto pool_pos = state.find_pool(pg.pool);
    if (!pool_pos || pg.index >= state.pools[*pool_pos].pg_count ||
        pg.index >= state.pools[*pool_pos].stored_bytes_per_pg.size())
      continue;
    const Bytes size = shard_size_bytes(state.pools[*pool_pos], pg.index);
    for (auto id : list)
      if (auto p = state.find_osd(id)) state.osds[*p].used_bytes += size;
  }
}

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  std::string entity;
  std::string message;

  std::string to_string() const { return entity + ": " + message; }
  friend bool operator==(const Violation&, const Violation&) = default;
};

inline std::string pg_name(PgId pg) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string hex;
  std::uint32_t v = pg.index;
  do {
    hex.insert(hex.begin(), digits[v & 0xf]);
    v >>= 4;
  } while (v);
  return std::to_string(pg.pool) + "." + hex;
}

inline std::vector<Violation> validate_state(const ClusterState& s) {
  std::vector<Violation> out;
  auto report = [&out](std::string entity, std::string message) {
    out.push_back({std::move(entity), std::move(message)});
  };
  auto osd_name = [](OsdId id) { return "osd." + std::to_string(id); };

  // OSDs
  std::vector<Bytes> shard_bytes(s.osds.size());
  for (std::size_t i = 0; i < s.osds.size(); ++i) {
    const auto& o = s.osds[i];
    if (i > 0 && s.osds[i - 1].id >= o.id)
      report(osd_name(o.id), "OSD ids must be unique and sorted");
    if (o.capacity_bytes == 0) report(osd_name(o.id), "capacity must be positive");
    if (o.used_bytes > o.capacity_bytes) report(osd_name(o.id), "used bytes exceed capacity");
    if (o.device_class.empty()) report(osd_name(o.id), "missing device class");
    if (!s.crush.contains(o.id) || s.crush.node(o.id).level != Level::osd) {
      report(osd_name(o.id), "not present as a crush leaf");
    } else if (s.crush.parent(o.id) != o.crush_parent) {
      report(osd_name(o.id), "crush parent does not match the tree");
    }
    shard_bytes[i] = o.overhead_bytes;
  }

  // CRUSH tree
  for (const auto& [id, n] : s.crush.nodes()) {
    auto name = [id] { return "crush node " + std::to_string(id); };
    if (n.level == Level::osd) {
      if (!s.find_osd(id)) report(name(), "leaf has no matching OSD");
      if (!n.children.empty()) report(name(), "OSD leaf has children");
      continue;
    }
    if (id >= 0) report(name(), "bucket ids must be negative");
    double sum = 0.0;
    for (auto c : n.children) {
      if (!s.crush.contains(c)) {
        report(name(), "child " + std::to_string(c) + " does not exist");
        continue;
      }
      const auto& child = s.crush.node(c);
      if (child.level >= n.level) report(name(), "child " + std::to_string(c) + " is not below its parent");
      sum += child.weight;
    }
    if (std::abs(sum - n.weight) > 1e-9 * std::max(1.0, std::abs(sum)))
      report(name(), "weight does not equal the sum of its children");
  }
  for (const auto& o : s.osds)
    if (s.crush.contains(o.id) && s.crush.node(o.id).weight != static_cast<double>(o.capacity_bytes))
      report(osd_name(o.id), "crush leaf weight differs from capacity");
  {
    // every node reachable from a root exactly once
    std::unordered_map<NodeId, int> seen;
    std::vector<NodeId> stack = s.crush.roots();
    if (stack.empty() && !s.crush.nodes().empty()) report("crush", "tree has no root (cycle)");
    while (!stack.empty()) {
      auto id = stack.back();
      stack.pop_back();
      if (++seen[id] > 1) {
        report("crush node " + std::to_string(id), "reachable more than once");
        continue;
      }
      if (s.crush.contains(id))
        for (auto c : s.crush.node(id).children) stack.push_back(c);
    }
    for (const auto& [id, n] : s.crush.nodes())
      if (!seen.count(id)) report("crush node " + std::to_string(id), "unreachable from any root (cycle)");
  }

  // Rules
  for (std::size_t i = 0; i < s.rules.size(); ++i) {
    const auto& r = s.rules[i];
    const std::string name = "rule " + std::to_string(r.id);
    if (i > 0 && s.rules[i - 1].id >= r.id) report(name, "rule ids must be unique and sorted");
    if (r.shard_count < 1) report(name, "shard count must be at least 1");
    if (r.failure_domain == Level::osd || r.failure_domain == Level::root)
      report(name, "failure domain must be host, rack or datacenter");
    if (!s.crush.contains(r.root)) {
      report(name, "root node does not exist");
    } else if (s.crush.node(r.root).level <= r.failure_domain) {
      report(name, "failure domain must be strictly below the root level");
    }
  }

  // Pools
  for (std::size_t i = 0; i < s.pools.size(); ++i) {
    const auto& p = s.pools[i];
    const std::string name = "pool " + std::to_string(p.id);
    if (i > 0 && s.pools[i - 1].id >= p.id) report(name, "pool ids must be unique and sorted");
    if (p.pg_count < 1 || (p.pg_count & (p.pg_count - 1)) != 0)
      report(name, "pg count must be a positive power of two");
    if (p.stored_bytes_per_pg.size() != p.pg_count) report(name, "needs one stored size per PG");
    if (p.scheme.kind == Scheme::Kind::erasure && (p.scheme.k < 1 || p.scheme.m < 1))
      report(name, "erasure coding needs k >= 1 and m >= 1");
    if (p.scheme.kind == Scheme::Kind::replicated && p.scheme.size < 1)
      report(name, "replica count must be at least 1");
    const auto rp = s.find_rule(p.rule);
    if (!rp) {
      report(name, "unknown rule " + std::to_string(p.rule));
      continue;
    }
    if (s.rules[*rp].shard_count != p.scheme.shard_count())
      report(name, "rule shard count does not match the redundancy scheme");
    for (std::uint32_t pg = 0; pg < p.pg_count; ++pg)
      if (!s.pg_map.count(PgId{p.id, pg})) report(pg_name(PgId{p.id, pg}), "PG is not placed");
  }

  // PG shard map. Failure domain and root membership per (rule, OSD) are
  // looked up once; a PG's shard list is short enough for linear scans.
  struct RuleView {
    std::vector<NodeId> domain;  // per OSD position
    std::vector<char> under_root, in_tree;
  };
  std::vector<std::optional<RuleView>> views(s.rules.size());
  auto view_of = [&](std::size_t r) -> const RuleView& {
    if (!views[r]) {
      const auto& rule = s.rules[r];
      RuleView v;
      const bool root_known = s.crush.contains(rule.root);
      for (const auto& o : s.osds) {
        const bool known = s.crush.contains(o.id);
        v.in_tree.push_back(known);
        v.under_root.push_back(!known || !root_known || s.crush.is_under(o.id, rule.root));
        v.domain.push_back(known ? failure_domain_of(s, rule, o.id) : 0);
      }
      views[r] = std::move(v);
    }
    return *views[r];
  };
  std::vector<std::size_t> positions;
  for (const auto& [pg, list] : s.pg_map) {
    auto name = [&pg] { return "pg " + pg_name(pg); };
    const auto pp = s.find_pool(pg.pool);
    if (!pp) {
      report(name(), "belongs to unknown pool");
      continue;
    }
    const auto& pool = s.pools[*pp];
    if (pg.index >= pool.pg_count || pg.index >= pool.stored_bytes_per_pg.size()) {
      report(name(), "index beyond the pool's pg count");
      continue;
    }
    const auto rp = s.find_rule(pool.rule);
    if (!rp) continue;
    const auto& rule = s.rules[*rp];
    const auto& view = view_of(*rp);
    if (list.size() != rule.shard_count) report(name(), "shard list length differs from the rule");
    const Bytes size = shard_size_bytes(pool, pg.index);
    positions.clear();
    for (auto id : list) {
      const auto op = s.find_osd(id);
      if (!op) {
        report(name(), "shard on unknown OSD " + std::to_string(id));
        continue;
      }
      const std::size_t at = *op;
      if (std::find(positions.begin(), positions.end(), at) != positions.end()) {
        report(name(), "two shards on " + osd_name(id));
        continue;
      }
      shard_bytes[at] += size;
      const auto& o = s.osds[at];
      if (rule.device_class && o.device_class != *rule.device_class)
        report(name(), osd_name(id) + " has device class " + o.device_class + ", rule wants " +
                           *rule.device_class);
      if (!view.under_root[at]) report(name(), osd_name(id) + " is outside the rule root");
      if (view.in_tree[at])
        for (auto other : positions)
          if (view.in_tree[other] && view.domain[other] == view.domain[at])
            report(name(), osd_name(s.osds[other].id) + " and " + osd_name(id) + " share failure domain " +
                               std::to_string(view.domain[at]));
      positions.push_back(at);
    }
  }

  for (std::size_t i = 0; i < s.osds.size(); ++i)
    if (shard_bytes[i] != s.osds[i].used_bytes)
      report(osd_name(s.osds[i].id), "used bytes differ from overhead plus resident shards");

  return out;
}

}  // namespace equilibrium
