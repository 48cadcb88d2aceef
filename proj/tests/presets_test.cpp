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

#include <bit>

#include "equilibrium/io/state_file.hpp"
#include "equilibrium/presets.hpp"

using namespace equilibrium;

namespace {

struct Shape {
  std::size_t osds = 0;
  std::map<std::string, std::size_t> per_class;
  std::map<std::string, double> capacity;
  std::size_t pools = 0, user_pools = 0, pgs = 0;
};

Shape shape_of(const ClusterState& s) {
  Shape out;
  out.osds = s.osds.size();
  for (const auto& o : s.osds) {
    ++out.per_class[o.device_class];
    out.capacity[o.device_class] += static_cast<double>(o.capacity_bytes);
  }
  out.pools = s.pools.size();
  for (const auto& p : s.pools) {
    out.pgs += p.pg_count;
    out.user_pools += p.user_data;
  }
  return out;
}

}  // namespace

TEST(Presets, ClusterAAtFullScale) {
  const auto s = generate_preset({'A', 1.0, 1});
  const auto sh = shape_of(s);
  EXPECT_EQ(sh.osds, 14u);
  EXPECT_EQ(sh.per_class.at("hdd"), 14u);
  EXPECT_NEAR(sh.capacity.at("hdd") / TiB, 68.0, 0.01);
  EXPECT_EQ(sh.pgs, 225u);
  EXPECT_EQ(sh.pools, 7u);
  EXPECT_EQ(sh.user_pools, 2u);
}

TEST(Presets, ClusterFAtFullScale) {
  const auto sh = shape_of(generate_preset({'F', 1.0, 1}));
  EXPECT_EQ(sh.per_class.at("hdd"), 78u);
  EXPECT_NEAR(sh.capacity.at("hdd") / TiB, 425.0, 0.01);
  EXPECT_EQ(sh.pools, 3u);
  EXPECT_EQ(sh.pgs, 577u);
}

TEST(Presets, AllPresetsMatchTheirDescription) {
  struct Expect {
    char label;
    std::map<std::string, std::size_t> osds;
    std::map<std::string, double> tib;
    std::size_t pools, user, pgs;
  };
  const std::vector<Expect> table = {
      {'A', {{"hdd", 14}}, {{"hdd", 68}}, 7, 2, 225},
      {'B', {{"hdd", 810}, {"ssd", 185}}, {{"hdd", 5 * 1024}, {"ssd", 1024}}, 94, 55, 8731},
      {'C', {{"hdd", 40}, {"nvme", 10}}, {{"hdd", 164}, {"nvme", 9}}, 10, 3, 1249},
      {'D', {{"hdd", 246}, {"ssd", 60}}, {{"hdd", 621}, {"ssd", 105}}, 11, 6, 4181},
      {'E', {{"hdd", 608}, {"ssd", 9}}, {{"hdd", 8 * 1024 + 41}, {"ssd", 4}}, 3, 1, 8321},
      {'F', {{"hdd", 78}}, {{"hdd", 425}}, 3, 1, 577},
  };
  for (const auto& e : table) {
    const auto s = generate_preset({e.label, 1.0, 2});
    const auto sh = shape_of(s);
    EXPECT_EQ(sh.per_class, e.osds) << e.label;
    for (const auto& [cls, t] : e.tib) EXPECT_NEAR(sh.capacity.at(cls) / TiB, t, t * 1e-6) << e.label;
    EXPECT_EQ(sh.pools, e.pools) << e.label;
    EXPECT_EQ(sh.user_pools, e.user) << e.label;
    EXPECT_EQ(sh.pgs, e.pgs) << e.label;
    for (const auto& p : s.pools) EXPECT_TRUE(std::has_single_bit(p.pg_count)) << e.label;
    EXPECT_TRUE(validate_state(s).empty()) << e.label;
    for (const auto& o : s.osds) EXPECT_LE(o.utilization(), 0.95) << e.label;
  }
}

TEST(Presets, ScalingShrinksProportionally) {
  const auto full = shape_of(generate_preset({'D', 1.0, 3}));
  const auto tenth = shape_of(generate_preset({'D', 0.1, 3}));
  EXPECT_NEAR(static_cast<double>(tenth.osds), full.osds * 0.1, 2.0);
  EXPECT_EQ(tenth.pools, full.pools);
  EXPECT_EQ(tenth.user_pools, full.user_pools);
  EXPECT_LT(tenth.pgs, full.pgs / 4);
  EXPECT_THROW(generate_preset({'D', 0.0, 3}), StateError);
  EXPECT_THROW(generate_preset({'D', 1.5, 3}), StateError);
  EXPECT_THROW(generate_preset({'Q', 1.0, 3}), StateError);
}

TEST(Presets, Deterministic) {
  for (char label : {'A', 'C', 'F'}) {
    EXPECT_EQ(serialize_state(generate_preset({label, 0.5, 9})), serialize_state(generate_preset({label, 0.5, 9})));
    EXPECT_NE(serialize_state(generate_preset({label, 0.5, 9})), serialize_state(generate_preset({label, 0.5, 10})));
  }
}

TEST(Presets, PgBytesAreNearlyEqualWithinAPool) {
  const auto s = generate_preset({'F', 1.0, 4});
  for (const auto& p : s.pools) {
    double mean = 0;
    for (auto b : p.stored_bytes_per_pg) mean += static_cast<double>(b);
    mean /= p.pg_count;
    double var = 0;
    for (auto b : p.stored_bytes_per_pg) var += (b - mean) * (b - mean);
    const double cv = std::sqrt(var / p.pg_count) / mean;
    if (p.pg_count >= 32) {
      EXPECT_NEAR(cv, 0.05, 0.02) << p.name;
    }
  }
}

TEST(SplitPowersOfTwo, ExactPartsAndPowers) {
  for (std::uint32_t total : {225u, 577u, 1249u, 4181u, 8321u, 8731u, 64u}) {
    for (std::uint32_t parts : {1u, 3u, 7u, 11u, 94u}) {
      if (parts > total) {
        EXPECT_THROW(split_powers_of_two(total, parts), StateError);
        continue;
      }
      const auto v = split_powers_of_two(total, parts);
      ASSERT_EQ(v.size(), parts);
      std::uint64_t sum = 0;
      for (auto x : v) {
        EXPECT_TRUE(std::has_single_bit(x));
        sum += x;
      }
      if (static_cast<std::uint32_t>(std::popcount(total)) <= parts) {
        EXPECT_EQ(sum, total) << total << "/" << parts;
      }
      EXPECT_GE(sum, total);
    }
  }
}
