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

// Synthetic clusters shaped after six production clusters (A to F): device
// counts, classes and raw capacity, pool counts with their user-data and
// metadata roles, and total PG counts. Everything else (host layout, disk
// size mix, redundancy schemes, fill level) is a modelling choice made here.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "equilibrium/cluster.hpp"
#include "equilibrium/crush.hpp"

namespace equilibrium {

struct PresetSpec {
  char label = 'A';
  double scale = 1.0;  // in (0, 1]
  std::uint64_t seed = 1;
  double pg_bytes_sigma = 0.05;  // log-normal spread of per-PG stored bytes
  double fill = 0.6;             // target mean raw utilization per device class
};

struct DeviceGroup {
  std::string device_class;
  std::uint32_t osds = 0;
  Bytes capacity = 0;  // raw capacity of the whole group
  std::uint32_t osds_per_host = 1;
};

struct PoolLayout {
  Scheme scheme;
  std::string device_class;
};

struct PresetDefinition {
  char label = 'A';
  std::vector<DeviceGroup> devices;
  std::uint32_t pools = 1;
  std::uint32_t user_pools = 1;
  std::uint32_t pgs = 1;
  // Layouts for user-data pools, largest pool first; the last entry repeats.
  std::vector<PoolLayout> user_layouts;
  PoolLayout metadata_layout;
};

inline const std::vector<PresetDefinition>& preset_definitions() {
  static const std::vector<PresetDefinition> defs = [] {
    const auto rep3 = Scheme::replicated(3);
    const auto ec42 = Scheme::erasure(4, 2);
    std::vector<PresetDefinition> d;
    d.push_back({'A', {{"hdd", 14, 68 * TiB, 4}}, 7, 2, 225,
                 {{rep3, "hdd"}, {Scheme::erasure(2, 1), "hdd"}}, {rep3, "hdd"}});
    // 94 pools: 55 user data, the rest metadata.
    d.push_back({'B', {{"hdd", 810, 5 * PiB, 12}, {"ssd", 185, 1 * PiB, 8}}, 94, 55, 8731,
                 {{ec42, "hdd"}, {ec42, "hdd"}, {ec42, "hdd"}, {rep3, "hdd"}}, {rep3, "ssd"}});
    d.push_back({'C', {{"hdd", 40, 164 * TiB, 4}, {"nvme", 10, 9 * TiB, 2}}, 10, 3, 1249,
                 {{ec42, "hdd"}, {rep3, "hdd"}}, {rep3, "nvme"}});
    d.push_back({'D', {{"hdd", 246, 621 * TiB, 6}, {"ssd", 60, 105 * TiB, 4}}, 11, 6, 4181,
                 {{ec42, "hdd"}, {ec42, "hdd"}, {rep3, "ssd"}, {rep3, "hdd"}}, {rep3, "ssd"}});
    d.push_back({'E', {{"hdd", 608, 8 * PiB + 41 * TiB, 16}, {"ssd", 9, 4 * TiB, 3}}, 3, 1, 8321,
                 {{ec42, "hdd"}}, {rep3, "ssd"}});
    d.push_back({'F', {{"hdd", 78, 425 * TiB, 6}}, 3, 1, 577, {{ec42, "hdd"}}, {rep3, "hdd"}});
    return d;
  }();
  return defs;
}

inline const PresetDefinition& preset_definition(char label) {
  for (const auto& d : preset_definitions())
    if (d.label == label) return d;
  throw StateError(std::string("unknown preset ") + label);
}

// Splits `total` into exactly `parts` powers of two. Keeps the largest parts
// intact by splitting the smallest divisible part first. When the binary
// representation already has more set bits than `parts`, the smallest parts
// are merged, rounding the total up.
inline std::vector<std::uint32_t> split_powers_of_two(std::uint32_t total, std::uint32_t parts) {
  if (parts == 0 || total < parts) throw StateError("cannot split PGs into that many pools");
  std::multiset<std::uint32_t> bag;
  for (std::uint32_t bit = 1; bit != 0 && bit <= total; bit <<= 1)
    if (total & bit) bag.insert(bit);
  while (bag.size() > parts) {
    const auto a = *bag.begin();
    bag.erase(bag.begin());
    const auto b = *bag.begin();
    bag.erase(bag.begin());
    bag.insert(std::bit_ceil(a + b));
  }
  while (bag.size() < parts) {
    auto it = bag.upper_bound(1);
    const auto v = *it;
    bag.erase(it);
    bag.insert(v / 2);
    bag.insert(v / 2);
  }
  return {bag.rbegin(), bag.rend()};
}

inline ClusterState generate_preset(const PresetSpec& spec) {
  if (!(spec.scale > 0.0 && spec.scale <= 1.0)) throw StateError("preset scale must lie in (0, 1]");
  if (!(spec.fill > 0.0 && spec.fill < 1.0)) throw StateError("preset fill must lie in (0, 1)");
  if (spec.pg_bytes_sigma < 0.0) throw StateError("pg byte sigma must be non-negative");
  const auto& def = preset_definition(spec.label);
  std::mt19937_64 rng(spec.seed);

  // Pool layouts, largest pool first.
  const auto pgs_total = static_cast<std::uint32_t>(
      std::max<double>(def.pools, std::llround(def.pgs * spec.scale)));
  const auto pg_counts = split_powers_of_two(pgs_total, def.pools);
  std::vector<PoolLayout> layouts;
  for (std::uint32_t i = 0; i < def.pools; ++i) {
    if (i < def.user_pools)
      layouts.push_back(def.user_layouts[std::min<std::size_t>(i, def.user_layouts.size() - 1)]);
    else
      layouts.push_back(def.metadata_layout);
  }
  std::map<std::string, std::uint32_t> min_domains;
  for (const auto& l : layouts)
    min_domains[l.device_class] = std::max(min_domains[l.device_class], l.scheme.shard_count());

  ClusterState s;
  NodeId next_bucket = -1;
  const NodeId root = next_bucket--;
  s.crush.add_node({root, "default", Level::root, 0.0, {}});

  struct HostPlan {
    NodeId id;
    std::string device_class;
  };
  std::vector<HostPlan> hosts;
  std::vector<std::vector<std::pair<OsdId, Bytes>>> host_osds;
  OsdId next_osd = 0;
  for (const auto& g : def.devices) {
    const std::uint32_t need = min_domains.count(g.device_class) ? min_domains[g.device_class] : 1;
    auto osds = static_cast<std::uint32_t>(std::max<long long>(1, std::llround(g.osds * spec.scale)));
    // twice the widest rule keeps CRUSH retries from running dry on skewed hosts
    const auto host_count = std::max((osds + g.osds_per_host - 1) / g.osds_per_host, 2 * need);
    osds = std::max(osds, host_count);
    const double capacity = static_cast<double>(g.capacity) * osds / g.osds;

    // disk generations of 4 to 16 TB, scaled to the group's capacity
    static constexpr double sizes[] = {4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0};
    std::uniform_int_distribution<int> pick(0, 6);
    std::vector<double> w(osds);
    for (auto& x : w) x = sizes[pick(rng)];
    const double wsum = std::accumulate(w.begin(), w.end(), 0.0);

    const std::size_t first_host = hosts.size();
    for (std::uint32_t h = 0; h < host_count; ++h) {
      hosts.push_back({next_bucket--, g.device_class});
      host_osds.emplace_back();
    }
    for (std::uint32_t i = 0; i < osds; ++i) {
      const auto cap = static_cast<Bytes>(std::llround(capacity * w[i] / wsum));
      host_osds[first_host + i % host_count].push_back({next_osd++, std::max<Bytes>(cap, 1)});
    }
  }

  const std::size_t racks = hosts.size() > 8 ? (hosts.size() + 7) / 8 : 0;
  std::vector<NodeId> rack_ids;
  for (std::size_t r = 0; r < racks; ++r) {
    rack_ids.push_back(next_bucket--);
    s.crush.add_node({rack_ids.back(), "rack" + std::to_string(r), Level::rack, 0.0, {}});
    s.crush.attach(root, rack_ids.back());
  }
  for (std::size_t h = 0; h < hosts.size(); ++h) {
    const auto& hp = hosts[h];
    s.crush.add_node({hp.id, "host" + std::to_string(h) + "-" + hp.device_class, Level::host, 0.0, {}});
    s.crush.attach(racks ? rack_ids[h % racks] : root, hp.id);
    for (const auto& [id, cap] : host_osds[h]) {
      s.crush.add_node({id, "osd." + std::to_string(id), Level::osd, 0.0, {}});
      s.crush.attach(hp.id, id);
      s.osds.push_back({id, cap, 0, 0, hp.device_class, hp.id});
    }
  }
  s.sort_by_id();
  s.crush.recompute_weights([&s](OsdId id) { return static_cast<double>(s.osd(id).capacity_bytes); });

  // one rule per (scheme, class) in order of first use
  std::map<std::pair<std::uint32_t, std::string>, RuleId> rule_ids;
  for (const auto& l : layouts) {
    const auto key = std::make_pair(l.scheme.shard_count(), l.device_class);
    if (rule_ids.count(key)) continue;
    const auto id = static_cast<RuleId>(s.rules.size());
    rule_ids[key] = id;
    s.rules.push_back({id, "shards" + std::to_string(key.first) + "-" + key.second, root, Level::host,
                       key.second, key.first});
  }

  for (std::uint32_t i = 0; i < def.pools; ++i) {
    Pool p;
    p.id = static_cast<PoolId>(i + 1);
    p.user_data = i < def.user_pools;
    p.name = (p.user_data ? "data" : "meta") + std::to_string(i + 1);
    p.scheme = layouts[i].scheme;
    p.rule = rule_ids.at({p.scheme.shard_count(), layouts[i].device_class});
    p.pg_count = pg_counts[i];
    p.stored_bytes_per_pg.assign(p.pg_count, 0);
    s.pools.push_back(std::move(p));
  }

  // Raw bytes per class: `fill` of the class capacity, 95% to user-data
  // pools and 5% to metadata pools when both share a class. Within a role
  // the raw bytes follow the pools' shard counts times a per-pool factor in
  // [0.5, 2): PG counts are powers of two and pools grow independently, so
  // bytes per PG differ between pools.
  std::uniform_real_distribution<double> log_factor(-std::log(2.0), std::log(2.0));
  std::vector<double> weight(def.pools);
  for (std::uint32_t i = 0; i < def.pools; ++i)
    weight[i] = static_cast<double>(s.pools[i].shard_total()) * std::exp(log_factor(rng));
  std::map<std::string, double> class_capacity;
  for (const auto& o : s.osds) class_capacity[o.device_class] += static_cast<double>(o.capacity_bytes);
  std::map<std::pair<std::string, bool>, double> role_shards;
  for (std::uint32_t i = 0; i < def.pools; ++i)
    role_shards[{layouts[i].device_class, s.pools[i].user_data}] += weight[i];
  const double sigma = spec.pg_bytes_sigma;
  std::lognormal_distribution<double> noise(-sigma * sigma / 2.0, sigma);
  for (std::uint32_t i = 0; i < def.pools; ++i) {
    auto& p = s.pools[i];
    const auto& cls = layouts[i].device_class;
    const bool both = role_shards.count({cls, true}) && role_shards.count({cls, false});
    const double share = both ? (p.user_data ? 0.95 : 0.05) : 1.0;
    const double raw = spec.fill * class_capacity[cls] * share * weight[i] / role_shards[{cls, p.user_data}];
    const double mean = raw * p.scheme.data_divisor() / static_cast<double>(p.shard_total());
    for (auto& b : p.stored_bytes_per_pg)
      b = static_cast<Bytes>(std::llround(mean * (sigma > 0.0 ? noise(rng) : 1.0)));
  }

  place_all(s, spec.seed);

  // CRUSH imbalance can overfill small disks: shrink the pools of a device
  // class until its fullest OSD sits at 95%.
  for (int round = 0; round < 64; ++round) {
    std::map<std::string, double> worst;
    for (const auto& o : s.osds) worst[o.device_class] = std::max(worst[o.device_class], o.utilization());
    bool changed = false;
    for (std::uint32_t i = 0; i < def.pools; ++i) {
      const double w = worst[layouts[i].device_class];
      if (w <= 0.95) continue;
      const double factor = 0.95 / w * 0.999;
      for (auto& b : s.pools[i].stored_bytes_per_pg)
        b = static_cast<Bytes>(std::floor(static_cast<double>(b) * factor));
      changed = true;
    }
    if (!changed) break;
    recompute_used_bytes(s);
  }
  return s;
}

}  // namespace equilibrium
