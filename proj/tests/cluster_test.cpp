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

#include <gtest/gtest.h>

#include <numeric>

#include "support.hpp"

using namespace equilibrium;
using eqtest::Builder;

namespace {

// Two hosts, one OSD each, one replicated(1) pool.
ClusterState two_osds(Bytes cap_a, Bytes cap_b, std::vector<Bytes> pg_bytes, std::vector<OsdId> where) {
  Builder b;
  b.osd(b.host(), cap_a);
  b.osd(b.host(), cap_b);
  const auto r = b.rule(1);
  const auto n = static_cast<std::uint32_t>(pg_bytes.size());
  b.pool(r, Scheme::replicated(1), n, pg_bytes);
  PgShardMap map;
  for (std::uint32_t i = 0; i < n; ++i) map[PgId{1, i}] = {where[i]};
  return b.build(map);
}

}  // namespace

TEST(ShardSize, ErasureRoundsUp) {
  Pool p{1, "p", 0, Scheme::erasure(3, 2), 1, {10}, true};
  EXPECT_EQ(shard_size_bytes(p, 0), 4u);
  p.stored_bytes_per_pg = {9};
  EXPECT_EQ(shard_size_bytes(p, 0), 3u);
  p.scheme = Scheme::erasure(4, 2);
  p.stored_bytes_per_pg = {8};
  EXPECT_EQ(shard_size_bytes(p, 0), 2u);
}

TEST(ShardSize, ReplicatedIsStoredSize) {
  Pool p{1, "p", 0, Scheme::replicated(3), 1, {10}, true};
  EXPECT_EQ(shard_size_bytes(p, 0), 10u);
  EXPECT_THROW(shard_size_bytes(p, 1), StateError);
}

TEST(Utilization, HalfFull) {
  auto s = two_osds(68 * TiB, 68 * TiB, {34 * TiB}, {0});
  EXPECT_DOUBLE_EQ(osd_utilization(s, 0), 0.5);
  EXPECT_DOUBLE_EQ(osd_utilization(s, 1), 0.0);
  EXPECT_THROW(osd_utilization(s, 7), StateError);
}

TEST(Utilization, IncludesOverhead) {
  Builder b;
  b.osd(b.host(), 100, "hdd", 25);
  auto r = b.rule(1);
  b.pool(r, Scheme::replicated(1), 1, 25);
  auto s = b.build({{PgId{1, 0}, {0}}});
  EXPECT_DOUBLE_EQ(osd_utilization(s, 0), 0.5);
}

TEST(IdealCount, ProportionalToCapacity) {
  auto s = two_osds(1 * TiB, 3 * TiB, {1, 1, 1, 1, 1, 1, 1, 1}, {0, 0, 0, 0, 0, 0, 0, 0});
  EXPECT_DOUBLE_EQ(ideal_shard_count(s, 1, 0), 2.0);
  EXPECT_DOUBLE_EQ(ideal_shard_count(s, 1, 1), 6.0);
}

TEST(IdealCount, SumsToShardTotalOnFuzzedClusters) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 30; ++i) {
    auto s = eqtest::fuzz_cluster(rng);
    for (const auto& pool : s.pools) {
      double sum = 0.0;
      for (auto id : eligible_osds(s, s.rule_of(pool))) sum += ideal_shard_count(s, pool.id, id);
      EXPECT_NEAR(sum, static_cast<double>(pool.shard_total()), 1e-9 * pool.shard_total());
    }
  }
}

TEST(IdealCount, RejectsIneligibleOsd) {
  Builder b;
  b.osd(b.host(), TiB, "hdd");
  b.osd(b.host(), TiB, "ssd");
  auto r = b.rule(1, Level::host, "hdd");
  b.pool(r, Scheme::replicated(1), 1, GiB);
  auto s = b.build({{PgId{1, 0}, {0}}});
  EXPECT_THROW(ideal_shard_count(s, 1, 1), StateError);
}

TEST(PoolFreeSpace, HandComputedMinimum) {
  // osd0: 100 free holding 1 shard, osd1: 50 free holding 1 shard. Two PGs,
  // so each byte written lands half on each OSD. osd1 fills first at 100.
  auto s = two_osds(150, 100, {50, 50}, {0, 1});
  EXPECT_EQ(pool_free_space(s, 1), 100u);
  // both PGs on osd0: 100 free, all writes land there
  s = two_osds(150, 100, {25, 25}, {0, 0});
  EXPECT_EQ(pool_free_space(s, 1), 100u);
}

TEST(PoolFreeSpace, ErasureDivisor) {
  Builder b;
  for (int i = 0; i < 3; ++i) b.osd(b.host(), 1000);
  auto r = b.rule(3);
  b.pool(r, Scheme::erasure(2, 1), 1, 200);
  auto s = b.build({{PgId{1, 0}, {0, 1, 2}}});
  // each OSD holds 100 and has 900 free; X bytes add X/2 to every OSD
  EXPECT_EQ(pool_free_space(s, 1), 1800u);
}

TEST(PoolFreeSpace, NoOverflowOnExabyteScale) {
  auto s = two_osds(8 * 1024 * PiB, 8 * 1024 * PiB, std::vector<Bytes>(1024, 1 * TiB),
                    std::vector<OsdId>(1024, 0));
  const Bytes expected = 8 * 1024 * PiB - 1024 * TiB;
  EXPECT_EQ(pool_free_space(s, 1), expected);
}

TEST(PoolFreeSpace, MatchesIncrementalFillOracle) {
  std::mt19937_64 rng(5);
  eqtest::FuzzShape shape;
  shape.max_osds = 8;
  shape.min_osds = 2;
  for (int i = 0; i < 30; ++i) {
    auto s = eqtest::fuzz_cluster(rng, shape);
    for (const auto& pool : s.pools) {
      const double fast = static_cast<double>(pool_free_space(s, pool.id));
      const double slow = eqtest::oracle_free_space(s, pool.id);
      EXPECT_NEAR(fast, slow, 0.01 * slow) << "pool " << pool.id;
    }
  }
}

TEST(Variance, MatchesNaiveTwoPass) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 30; ++i) {
    auto s = eqtest::fuzz_cluster(rng);
    for (const auto& cls : device_classes(s))
      EXPECT_NEAR(utilization_variance(s, cls), eqtest::class_variance_naive(s, cls), 1e-15);
  }
}

TEST(Variance, ZeroWhenEven) {
  auto s = two_osds(100, 200, {10, 20}, {0, 1});
  EXPECT_DOUBLE_EQ(utilization_variance(s), 0.0);
  EXPECT_THROW(utilization_variance(s, std::string("ssd")), StateError);
}

TEST(Variance, KnownValue) {
  // utilizations 0.2 and 0.6: mean 0.4, variance 0.04
  auto s = two_osds(100, 100, {20, 60}, {0, 1});
  EXPECT_NEAR(utilization_variance(s), 0.04, 1e-15);
}

TEST(FailureDomain, FallsBackToOsd) {
  Builder b;
  const auto rack = b.bucket("rack0", Level::rack);
  const auto h = b.host(rack);
  b.osd(h, TiB);
  b.rule(1, Level::datacenter);
  b.rule(1, Level::rack);
  auto s = b.build({});
  EXPECT_EQ(failure_domain_of(s, s.rule(0), 0), 0);
  EXPECT_EQ(failure_domain_of(s, s.rule(1), 0), rack);
}

TEST(Validate, AcceptsPlacedCluster) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 10; ++i) {
    auto s = eqtest::fuzz_cluster(rng);
    auto v = validate_state(s);
    EXPECT_TRUE(v.empty()) << (v.empty() ? "" : v.front().to_string());
  }
}

TEST(Validate, ReportsBrokenInvariants) {
  Builder b;
  const auto h0 = b.host();
  b.osd(h0, 100);
  b.osd(h0, 100);
  b.osd(b.host(), 100, "ssd");
  const auto r = b.rule(2, Level::host, "hdd");
  b.pool(r, Scheme::replicated(2), 1, 10);

  auto has = [](const std::vector<Violation>& v, const std::string& needle) {
    for (const auto& x : v)
      if (x.to_string().find(needle) != std::string::npos) return true;
    return false;
  };

  auto same_host = b.build({{PgId{1, 0}, {0, 1}}});
  EXPECT_TRUE(has(validate_state(same_host), "failure domain"));

  auto wrong_class = b.build({{PgId{1, 0}, {0, 2}}});
  EXPECT_TRUE(has(validate_state(wrong_class), "class"));

  auto duplicate = b.build({{PgId{1, 0}, {0, 0}}});
  EXPECT_FALSE(validate_state(duplicate).empty());

  auto short_list = b.build({{PgId{1, 0}, {0}}});
  EXPECT_FALSE(validate_state(short_list).empty());

  auto stale_usage = b.build({{PgId{1, 0}, {0, 2}}});
  stale_usage.osds[0].used_bytes += 1;
  EXPECT_TRUE(has(validate_state(stale_usage), "used"));

  auto missing = b.build({});
  EXPECT_FALSE(validate_state(missing).empty());

  auto bad_pgs = b.build({{PgId{1, 0}, {0, 2}}});
  bad_pgs.pools[0].pg_count = 3;
  bad_pgs.pools[0].stored_bytes_per_pg = {10, 10, 10};
  EXPECT_TRUE(has(validate_state(bad_pgs), "power of two"));
}
