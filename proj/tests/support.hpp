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

// Cluster builders, fuzzers and brute-force oracles shared by the unit tests
// and the acceptance run. The oracles recompute everything from the raw
// state and never reuse the library's incremental bookkeeping.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "equilibrium/cluster.hpp"
#include "equilibrium/crush.hpp"
#include "equilibrium/equilibrium.hpp"
#include "equilibrium/plan.hpp"

namespace eqtest {

using namespace equilibrium;

class Builder {
 public:
  Builder() {
    s_.crush.add_node({root_, "default", Level::root, 0.0, {}});
  }

  NodeId root() const { return root_; }

  NodeId bucket(const std::string& name, Level level, std::optional<NodeId> parent = std::nullopt) {
    const NodeId id = next_bucket_--;
    s_.crush.add_node({id, name, level, 0.0, {}});
    s_.crush.attach(parent.value_or(root_), id);
    return id;
  }

  NodeId host(std::optional<NodeId> parent = std::nullopt) {
    return bucket("host" + std::to_string(-next_bucket_), Level::host, parent);
  }

  OsdId osd(NodeId host, Bytes capacity, const std::string& cls = "hdd", Bytes overhead = 0) {
    const OsdId id = next_osd_++;
    s_.osds.push_back({id, capacity, overhead, overhead, cls, host});
    s_.crush.add_node({id, "osd." + std::to_string(id), Level::osd, 0.0, {}});
    s_.crush.attach(host, id);
    return id;
  }

  RuleId rule(std::uint32_t shard_count, Level domain = Level::host,
              std::optional<std::string> cls = std::nullopt) {
    const RuleId id = static_cast<RuleId>(s_.rules.size());
    s_.rules.push_back({id, "rule" + std::to_string(id), root_, domain, std::move(cls), shard_count});
    return id;
  }

  PoolId pool(RuleId rule, Scheme scheme, std::uint32_t pg_count, std::vector<Bytes> bytes,
              bool user = true) {
    const PoolId id = static_cast<PoolId>(s_.pools.size() + 1);
    s_.pools.push_back({id, "pool" + std::to_string(id), rule, scheme, pg_count, std::move(bytes), user});
    return id;
  }

  PoolId pool(RuleId rule, Scheme scheme, std::uint32_t pg_count, Bytes per_pg, bool user = true) {
    return pool(rule, scheme, pg_count, std::vector<Bytes>(pg_count, per_pg), user);
  }

  // Finishes with an explicit shard map.
  ClusterState build(PgShardMap map) {
    ClusterState s = s_;
    s.sort_by_id();
    s.crush.recompute_weights([&s](OsdId id) { return static_cast<double>(s.osd(id).capacity_bytes); });
    s.pg_map = std::move(map);
    recompute_used_bytes(s);
    return s;
  }

  // Finishes with a CRUSH placement.
  ClusterState place(std::uint64_t seed) {
    ClusterState s = build({});
    place_all(s, seed);
    return s;
  }

 private:
  ClusterState s_;
  NodeId root_ = -1;
  NodeId next_bucket_ = -2;
  OsdId next_osd_ = 0;
};

inline std::uint32_t pow2_at_most(std::uint32_t v) {
  std::uint32_t p = 1;
  while (p * 2 <= v) p *= 2;
  return p;
}

struct FuzzShape {
  std::uint32_t min_osds = 4, max_osds = 64;
  std::uint32_t min_pools = 1, max_pools = 8;
  std::uint32_t max_pgs_per_pool = 64;
  std::uint32_t max_total_pgs = 0;  // 0: unbounded
  double fill = 0.5;                // target mean utilization
  double pg_sigma = 0.8;            // spread of per-PG bytes
  bool two_classes = true;
};

// Random cluster: hosts of 1-4 OSDs with mixed capacities, up to two device
// classes, replicated and erasure-coded pools, CRUSH placement. Draws again
// when CRUSH cannot place a layout within its retry budget.
inline ClusterState fuzz_cluster_once(std::mt19937_64& rng, const FuzzShape& shape) {
  auto uniform = [&rng](std::uint32_t lo, std::uint32_t hi) {
    return std::uniform_int_distribution<std::uint32_t>(lo, hi)(rng);
  };
  Builder b;
  const std::uint32_t osds = uniform(shape.min_osds, shape.max_osds);
  const bool split = shape.two_classes && osds >= 8 && uniform(0, 2) == 0;
  std::vector<std::string> classes = split ? std::vector<std::string>{"hdd", "ssd"} : std::vector<std::string>{"hdd"};

  std::map<std::string, std::uint32_t> hosts_per_class;
  std::uint32_t made = 0;
  while (made < osds) {
    const std::string cls = classes[made < osds * 3 / 4 ? 0 : classes.size() - 1];
    const NodeId h = b.host();
    ++hosts_per_class[cls];
    const std::uint32_t per = std::min(uniform(1, 4), osds - made);
    for (std::uint32_t i = 0; i < per; ++i, ++made)
      b.osd(h, static_cast<Bytes>(uniform(1, 8)) * 500 * GiB, cls);
  }
  // the last hdd host can swallow every remaining OSD
  std::erase_if(classes, [&](const std::string& c) { return hosts_per_class[c] == 0; });

  const std::uint32_t pools = uniform(shape.min_pools, shape.max_pools);
  std::lognormal_distribution<double> spread(0.0, shape.pg_sigma);
  std::uint32_t total_pgs = 0;
  std::vector<std::pair<std::uint32_t, std::string>> pool_meta;
  for (std::uint32_t p = 0; p < pools; ++p) {
    const std::string cls = classes[uniform(0, static_cast<std::uint32_t>(classes.size() - 1))];
    const std::uint32_t domains = hosts_per_class[cls];
    Scheme scheme = Scheme::replicated(1);
    switch (uniform(0, 3)) {
      case 0: scheme = Scheme::replicated(1); break;
      case 1: scheme = Scheme::replicated(2); break;
      case 2: scheme = Scheme::replicated(3); break;
      default: scheme = Scheme::erasure(2, 1); break;
    }
    if (scheme.shard_count() > domains) scheme = Scheme::replicated(std::min<std::uint32_t>(domains, 2));
    std::uint32_t pgs = pow2_at_most(uniform(1, shape.max_pgs_per_pool));
    if (shape.max_total_pgs) {
      if (total_pgs >= shape.max_total_pgs) break;
      pgs = std::min(pgs, pow2_at_most(shape.max_total_pgs - total_pgs));
    }
    total_pgs += pgs;
    const RuleId r = b.rule(scheme.shard_count(), Level::host, split ? std::optional<std::string>(cls) : std::nullopt);
    std::vector<Bytes> bytes(pgs);
    const double base = static_cast<double>(uniform(1, 100)) * GiB;
    for (auto& v : bytes) v = static_cast<Bytes>(base * spread(rng)) + 1;
    b.pool(r, scheme, pgs, bytes, uniform(0, 3) != 0);
    pool_meta.push_back({pgs, cls});
  }
  ClusterState s = b.place(rng());

  // Scale every pool of a class so the class lands near the target fill and
  // nothing overflows.
  for (const auto& cls : device_classes(s)) {
    double cap = 0.0, used = 0.0, worst = 0.0;
    for (const auto& o : s.osds)
      if (o.device_class == cls) {
        cap += static_cast<double>(o.capacity_bytes);
        used += static_cast<double>(o.used_bytes);
        worst = std::max(worst, o.utilization());
      }
    if (used == 0.0) continue;
    double factor = shape.fill * cap / used;
    if (worst * factor > 0.9) factor = 0.9 / worst;
    for (auto& p : s.pools) {
      const auto& rule = s.rule_of(p);
      const bool in_class = rule.device_class ? *rule.device_class == cls : classes.size() == 1;
      if (!in_class) continue;
      for (auto& v : p.stored_bytes_per_pg) v = std::max<Bytes>(1, static_cast<Bytes>(static_cast<double>(v) * factor));
    }
  }
  recompute_used_bytes(s);
  return s;
}

inline ClusterState fuzz_cluster(std::mt19937_64& rng, const FuzzShape& shape = {}) {
  for (;;) {
    try {
      return fuzz_cluster_once(rng, shape);
    } catch (const PlacementError&) {
    }
  }
}

// --- oracles -----------------------------------------------------------------

// Applies a move by editing the shard map and recounting bytes from scratch.
inline ClusterState apply_naive(const ClusterState& s, const Move& m) {
  ClusterState out = s;
  auto& list = out.pg_map.at(PgId{m.pool, m.pg});
  for (auto& o : list)
    if (o == m.from) {
      o = m.to;
      break;
    }
  recompute_used_bytes(out);
  return out;
}

inline double class_variance_naive(const ClusterState& s, const std::string& cls) {
  std::vector<double> u;
  for (const auto& o : s.osds)
    if (o.device_class == cls) u.push_back(static_cast<double>(o.used_bytes) / static_cast<double>(o.capacity_bytes));
  double mean = 0.0;
  for (double v : u) mean += v;
  mean /= static_cast<double>(u.size());
  double acc = 0.0;
  for (double v : u) acc += (v - mean) * (v - mean);
  return acc / static_cast<double>(u.size());
}

// Every predicate of a valid Equilibrium move, each checked on explicit
// before/after states.
inline bool oracle_valid_move(const ClusterState& s, const Move& m) {
  const auto& from = s.osd(m.from);
  const auto& to = s.osd(m.to);
  if (to.free_bytes() < m.bytes) return false;
  const ClusterState after = apply_naive(s, m);
  if (!validate_state(after).empty()) return false;
  auto dev = [&](const ClusterState& st, OsdId id) {
    double n = 0;
    for (const auto& [pg, list] : st.pg_map)
      if (pg.pool == m.pool) n += static_cast<double>(std::count(list.begin(), list.end(), id));
    return n - ideal_shard_count(st, m.pool, id);
  };
  if (dev(s, m.from) - dev(s, m.to) < 1.0 - 1e-9) return false;
  for (const auto& cls : {from.device_class, to.device_class})
    if (!(class_variance_naive(after, cls) - class_variance_naive(s, cls) < -1e-15)) return false;
  return true;
}

// Exhaustive next move: fullest source first with the per-class attempt
// budget, largest shard first, emptiest valid destination.
inline std::optional<Move> oracle_next_move(const ClusterState& s, std::uint32_t attempts = 25) {
  std::vector<const Osd*> order;
  for (const auto& o : s.osds) order.push_back(&o);
  std::sort(order.begin(), order.end(), [](const Osd* a, const Osd* b) {
    if (a->utilization() != b->utilization()) return a->utilization() > b->utilization();
    return a->id < b->id;
  });
  std::map<std::string, std::uint32_t> failed;
  for (const Osd* src : order) {
    if (failed[src->device_class] >= attempts) continue;
    struct Cand {
      Bytes bytes;
      PoolId pool;
      std::uint32_t pg, slot;
    };
    std::vector<Cand> shards;
    for (const auto& [pg, list] : s.pg_map)
      for (std::uint32_t slot = 0; slot < list.size(); ++slot)
        if (list[slot] == src->id) shards.push_back({shard_size_bytes(s.pool(pg.pool), pg.index), pg.pool, pg.index, slot});
    std::sort(shards.begin(), shards.end(), [](const Cand& a, const Cand& b) {
      if (a.bytes != b.bytes) return a.bytes > b.bytes;
      if (a.pool != b.pool) return a.pool < b.pool;
      return a.pg < b.pg;
    });
    for (const auto& c : shards) {
      std::optional<Move> best;
      for (const auto& dst : s.osds) {
        if (dst.id == src->id) continue;
        Move m{c.pool, c.pg, c.slot, src->id, dst.id, c.bytes};
        if (!oracle_valid_move(s, m)) continue;
        if (!best || dst.utilization() < s.osd(best->to).utilization()) best = m;
      }
      if (best) return best;
    }
    ++failed[src->device_class];
  }
  return std::nullopt;
}

// Largest X such that writing X bytes of user data, spread evenly over the
// pool's PGs, overflows no OSD. Found by stepping X upwards over the shard
// map directly.
inline double oracle_free_space(const ClusterState& s, PoolId pool_id, int steps = 20000) {
  const auto& pool = s.pool(pool_id);
  const double d = pool.scheme.data_divisor();
  std::map<OsdId, double> per_unit;  // growth per byte written
  for (const auto& [pg, list] : s.pg_map)
    if (pg.pool == pool_id)
      for (auto o : list) per_unit[o] += 1.0 / (static_cast<double>(pool.pg_count) * d);
  double upper = 0.0;
  for (const auto& o : s.osds) upper += static_cast<double>(o.free_bytes());
  upper *= static_cast<double>(pool.pg_count) * d;
  auto fits = [&](double x) {
    for (const auto& [id, g] : per_unit) {
      const auto& o = s.osd(id);
      if (static_cast<double>(o.used_bytes) + g * x > static_cast<double>(o.capacity_bytes)) return false;
    }
    return true;
  };
  const double step = upper / steps;
  double x = 0.0;
  while (x + step <= upper && fits(x + step)) x += step;
  // refine within the last step
  double lo = x, hi = x + step;
  for (int i = 0; i < 60; ++i) {
    const double mid = (lo + hi) / 2;
    (fits(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace eqtest
