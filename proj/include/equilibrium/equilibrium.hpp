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

// Size-aware shard balancing.
//
// Each step takes the fullest OSD and tries its shards from largest to
// smallest. A shard moves to the emptiest OSD that
//   * keeps the PG compliant with the pool's placement rule,
//   * moves the pool's shard counts of source and destination towards their
//     capacity-proportional ideal, and
//   * strictly lowers the utilization variance of the device class.
// When no shard on the fullest OSD can move, the next fullest is tried, up to
// `max_attempts` failed sources per device class. Balancing stops when every
// class has exhausted its attempts.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "equilibrium/cluster.hpp"
#include "equilibrium/crush.hpp"
#include "equilibrium/io/state_file.hpp"
#include "equilibrium/plan.hpp"
#include "equilibrium/simulator.hpp"
#include "equilibrium/topology.hpp"

namespace equilibrium {

struct BalanceConfig {
  std::uint32_t max_attempts = 25;  // k: fullest OSDs tried before giving up
  std::optional<std::size_t> max_moves;
};

// A move must lower the class variance by more than this.
inline constexpr double kVarianceEpsilon = 1e-15;
// Slack for the deviation-difference test, which compares real-valued ideals.
inline constexpr double kCountEpsilon = 1e-9;

// OSD ids by utilization, fullest first; ties by ascending id.
inline std::vector<OsdId> sort_sources(const ClusterState& state) {
  std::vector<std::size_t> pos(state.osds.size());
  std::iota(pos.begin(), pos.end(), 0);
  std::stable_sort(pos.begin(), pos.end(), [&](std::size_t a, std::size_t b) {
    const double ua = state.osds[a].utilization(), ub = state.osds[b].utilization();
    if (ua != ub) return ua > ub;
    return state.osds[a].id < state.osds[b].id;
  });
  std::vector<OsdId> out;
  out.reserve(pos.size());
  for (auto p : pos) out.push_back(state.osds[p].id);
  return out;
}

// Shards resident on an OSD, largest first; ties by (pool, pg).
inline std::vector<ShardRef> shards_by_size_desc(const ClusterState& state, OsdId osd) {
  state.osd_pos(osd);
  std::vector<ShardRef> out;
  for (const auto& [pg, list] : state.pg_map) {
    for (std::uint32_t slot = 0; slot < list.size(); ++slot) {
      if (list[slot] != osd) continue;
      out.push_back({pg.pool, pg.index, slot, shard_size_bytes(state.pool(pg.pool), pg.index)});
    }
  }
  std::sort(out.begin(), out.end(), LargestFirst{});
  return out;
}

// True iff (count(from) - ideal(from)) - (count(to) - ideal(to)) >= 1 for the
// pool, i.e. moving one shard narrows the pair's count imbalance.
inline bool deviation_gap_allows_move(double from_count, double from_ideal, double to_count,
                                      double to_ideal) {
  return (from_count - from_ideal) - (to_count - to_ideal) >= 1.0 - kCountEpsilon;
}

inline bool move_improves_counts(const ClusterState& state, PoolId pool, OsdId from, OsdId to) {
  const double ideal_from = ideal_shard_count(state, pool, from);
  const double ideal_to = ideal_shard_count(state, pool, to);
  const auto counts = pool_shard_counts(state, pool);
  auto count = [&counts](OsdId id) {
    auto it = counts.find(id);
    return it == counts.end() ? 0.0 : static_cast<double>(it->second);
  };
  return deviation_gap_allows_move(count(from), ideal_from, count(to), ideal_to);
}

namespace detail {

// Change in population variance when one member of a class of n moves its
// value by `delta`, given its current offset from the class mean.
inline double variance_delta_single(double offset, double delta, double n) {
  return (2.0 * offset * delta + delta * delta) / n - (delta / n) * (delta / n);
}

// Same for two members of one class moving at once.
inline double variance_delta_pair(double offset_a, double delta_a, double offset_b, double delta_b,
                                  double n) {
  const double shift = (delta_a + delta_b) / n;
  return (2.0 * offset_a * delta_a + delta_a * delta_a + 2.0 * offset_b * delta_b + delta_b * delta_b) / n -
         shift * shift;
}

struct ClassStats {
  double mean = 0.0;
  double n = 0.0;
};

inline std::map<std::string, ClassStats> class_stats(const ClusterState& state) {
  std::map<std::string, ClassStats> stats;
  for (const auto& o : state.osds) {
    auto& s = stats[o.device_class];
    s.mean += o.utilization();
    s.n += 1.0;
  }
  for (auto& [cls, s] : stats) s.mean /= s.n;
  return stats;
}

// Whether moving `bytes` from one OSD to another strictly lowers the
// variance of every device class involved.
inline bool lowers_class_variance(const Osd& from, const ClassStats& from_stats, const Osd& to,
                                  const ClassStats& to_stats, Bytes bytes) {
  const double u_from = from.utilization(), u_to = to.utilization();
  const double b = static_cast<double>(bytes);
  const double d_from = -b / static_cast<double>(from.capacity_bytes);
  const double d_to = b / static_cast<double>(to.capacity_bytes);
  if (from.device_class == to.device_class) {
    return variance_delta_pair(u_from - from_stats.mean, d_from, u_to - from_stats.mean, d_to,
                               from_stats.n) < -kVarianceEpsilon;
  }
  return variance_delta_single(u_from - from_stats.mean, d_from, from_stats.n) < -kVarianceEpsilon &&
         variance_delta_single(u_to - to_stats.mean, d_to, to_stats.n) < -kVarianceEpsilon;
}

}  // namespace detail

inline bool move_reduces_variance(const ClusterState& state, const Move& move) {
  const auto stats = detail::class_stats(state);
  const auto& from = state.osd(move.from);
  const auto& to = state.osd(move.to);
  return detail::lowers_class_variance(from, stats.at(from.device_class), to,
                                       stats.at(to.device_class), move.bytes);
}

// Working state for one balancing run. Owns a copy of the cluster and keeps
// lookup tables in step with the moves it applies.
class EquilibriumBalancer {
 public:
  explicit EquilibriumBalancer(ClusterState state, BalanceConfig config = {})
      : state_(std::move(state)), config_(config), topo_(state_), occ_(state_) {
    if (config_.max_attempts < 1) throw StateError("max_attempts must be at least 1");
    class_of_.reserve(state_.osds.size());
    std::map<std::string, std::size_t> ids;
    for (const auto& o : state_.osds) {
      auto [it, fresh] = ids.emplace(o.device_class, ids.size());
      class_of_.push_back(it->second);
    }
    stats_.resize(ids.size());
    failures_.resize(ids.size());
  }

  const ClusterState& state() const { return state_; }
  const BalanceConfig& config() const { return config_; }

  // Next move for the current state. Sources are tried fullest first; the
  // `max_attempts` budget is counted per device class, so a saturated class
  // cannot starve the others. nullopt when every class ran out of attempts.
  std::optional<Move> next_move() {
    refresh();
    std::fill(failures_.begin(), failures_.end(), 0);
    for (const std::size_t src : by_util_desc_) {
      auto& failed = failures_[class_of_[src]];
      if (failed >= config_.max_attempts) continue;
      for (const auto& shard : occ_.shards(src)) {
        if (auto dst = destination_for(shard, src))
          return Move{shard.pool, shard.pg, shard.slot, state_.osds[src].id, state_.osds[*dst].id, shard.bytes};
      }
      ++failed;
    }
    return std::nullopt;
  }

  std::optional<OsdId> select_destination(PgId pg, std::uint32_t slot, OsdId source) {
    refresh();
    const auto src = state_.osd_pos(source);
    const auto& list = state_.pg_map.at(pg);
    if (slot >= list.size() || list[slot] != source)
      throw StateError("osd." + std::to_string(source) + " does not hold slot " + std::to_string(slot) +
                       " of pg " + pg_name(pg));
    const ShardRef shard{pg.pool, pg.index, slot, shard_size_bytes(state_.pool(pg.pool), pg.index)};
    if (auto d = destination_for(shard, src)) return state_.osds[*d].id;
    return std::nullopt;
  }

  void apply(Move& move) {
    apply_move(state_, move);
    occ_.move(*state_.find_pool(move.pool), ShardRef{move.pool, move.pg, move.slot, move.bytes},
              state_.osd_pos(move.from), state_.osd_pos(move.to));
  }

 private:
  // Recomputes the utilization order and per-class means for the current
  // state.
  void refresh() {
    const std::size_t n = state_.osds.size();
    util_.resize(n);
    for (std::size_t i = 0; i < n; ++i) util_[i] = state_.osds[i].utilization();
    by_util_desc_.resize(n);
    std::iota(by_util_desc_.begin(), by_util_desc_.end(), 0);
    std::stable_sort(by_util_desc_.begin(), by_util_desc_.end(), [this](std::size_t a, std::size_t b) {
      if (util_[a] != util_[b]) return util_[a] > util_[b];
      return state_.osds[a].id < state_.osds[b].id;
    });
    by_util_asc_.resize(n);
    std::iota(by_util_asc_.begin(), by_util_asc_.end(), 0);
    std::stable_sort(by_util_asc_.begin(), by_util_asc_.end(), [this](std::size_t a, std::size_t b) {
      if (util_[a] != util_[b]) return util_[a] < util_[b];
      return state_.osds[a].id < state_.osds[b].id;
    });
    for (auto& s : stats_) s = {};
    for (std::size_t i = 0; i < n; ++i) {
      stats_[class_of_[i]].mean += util_[i];
      stats_[class_of_[i]].n += 1.0;
    }
    for (auto& s : stats_) s.mean /= s.n;
  }

  // Emptiest OSD that may take the shard, if any.
  std::optional<std::size_t> destination_for(const ShardRef& shard, std::size_t src) const {
    const std::size_t pool_pos = *state_.find_pool(shard.pool);
    const std::size_t rule_pos = topo_.rule_of_pool(pool_pos);
    const auto& list = state_.pg_map.at(shard.pg_id());
    domains_.clear();
    holders_.clear();
    for (std::uint32_t s = 0; s < list.size(); ++s) {
      const auto p = state_.osd_pos(list[s]);
      holders_.push_back(p);
      if (s != shard.slot) domains_.push_back(topo_.domain(rule_pos, p));
    }
    const auto& counts = occ_.counts(pool_pos);
    const double src_dev = counts[src] - topo_.ideal(pool_pos, src);
    const auto& from = state_.osds[src];

    for (const std::size_t d : by_util_asc_) {
      if (d == src || !topo_.eligible(rule_pos, d)) continue;
      if (std::find(holders_.begin(), holders_.end(), d) != holders_.end()) continue;
      if (std::find(domains_.begin(), domains_.end(), topo_.domain(rule_pos, d)) != domains_.end()) continue;
      const auto& to = state_.osds[d];
      if (to.free_bytes() < shard.bytes) continue;
      if (src_dev - (counts[d] - topo_.ideal(pool_pos, d)) < 1.0 - kCountEpsilon) continue;
      if (!detail::lowers_class_variance(from, stats_[class_of_[src]], to, stats_[class_of_[d]], shard.bytes))
        continue;
      return d;
    }
    return std::nullopt;
  }

  ClusterState state_;
  BalanceConfig config_;
  Topology topo_;
  Occupancy occ_;
  std::vector<std::size_t> class_of_;
  std::vector<detail::ClassStats> stats_;
  std::vector<std::uint32_t> failures_;  // sources tried without success, per class
  std::vector<double> util_;
  std::vector<std::size_t> by_util_desc_;
  std::vector<std::size_t> by_util_asc_;
  mutable std::vector<NodeId> domains_;
  mutable std::vector<std::size_t> holders_;
};

inline std::optional<OsdId> select_destination(const ClusterState& state, PoolId pool, std::uint32_t pg,
                                               std::uint32_t slot, OsdId source) {
  return EquilibriumBalancer(state).select_destination(PgId{pool, pg}, slot, source);
}

inline std::optional<Move> next_move(const ClusterState& state, const BalanceConfig& config = {}) {
  return EquilibriumBalancer(state, config).next_move();
}

inline Plan balance(const ClusterState& state, const BalanceConfig& config = {}) {
  if (auto v = validate_state(state); !v.empty())
    throw StateError("invalid initial state: " + v.front().to_string());
  Plan plan;
  plan.fingerprint = fingerprint(state);
  EquilibriumBalancer balancer(state, config);
  while (!config.max_moves || plan.moves.size() < *config.max_moves) {
    const auto start = std::chrono::steady_clock::now();
    auto move = balancer.next_move();
    const auto elapsed = std::chrono::steady_clock::now() - start;
    if (!move) break;
    balancer.apply(*move);
    plan.moves.push_back(*move);
    plan.calc_time_ns.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed).count());
  }
  return plan;
}

}  // namespace equilibrium
