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

// eqbal: generate synthetic clusters, compute balancing plans, replay them
// and summarize the resulting metrics.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "equilibrium/count_balancer.hpp"
#include "equilibrium/equilibrium.hpp"
#include "equilibrium/io/metrics_csv.hpp"
#include "equilibrium/io/plan_file.hpp"
#include "equilibrium/io/state_file.hpp"
#include "equilibrium/presets.hpp"
#include "equilibrium/simulator.hpp"

namespace eq = equilibrium;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw eq::Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void dump(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw eq::Error("cannot write " + path);
  out << text;
  if (!out.flush()) throw eq::Error("short write to " + path);
}

eq::ClusterState load_state(const std::string& path) {
  try {
    return eq::parse_state(slurp(path));
  } catch (const eq::ParseError& e) {
    std::string msg = path + ": invalid cluster state";
    for (const auto& err : e.errors()) msg += "\n  " + err;
    throw eq::Error(msg);
  }
}

std::string tib(double bytes) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", bytes / static_cast<double>(eq::TiB));
  return buf;
}

struct GenerateArgs {
  std::string preset = "A";
  double scale = 1.0;
  std::uint64_t seed = 1;
  double sigma = 0.05;
  double fill = 0.6;
  std::string out;
};

int run_generate(const GenerateArgs& a) {
  if (a.preset.size() != 1) throw eq::Error("preset must be one of A..F");
  eq::PresetSpec spec;
  spec.label = a.preset[0];
  spec.scale = a.scale;
  spec.seed = a.seed;
  spec.pg_bytes_sigma = a.sigma;
  spec.fill = a.fill;
  dump(a.out, eq::serialize_state(eq::generate_preset(spec)));
  return 0;
}

struct BalanceArgs {
  std::string input;
  std::string algorithm = "equilibrium";
  std::size_t max_attempts = 25;
  std::optional<std::size_t> max_moves;
  std::string plan;
  std::string metrics;
};

int run_balance(const BalanceArgs& a) {
  const auto state = load_state(a.input);
  eq::Plan plan;
  if (a.algorithm == "equilibrium") {
    eq::BalanceConfig cfg;
    cfg.max_attempts = a.max_attempts;
    cfg.max_moves = a.max_moves;
    plan = eq::balance(state, cfg);
  } else {
    eq::CountBalanceConfig cfg;
    if (a.max_moves) cfg.max_moves = *a.max_moves;
    plan = eq::balance_count(state, cfg);
  }
  dump(a.plan, eq::write_plan(plan));
  if (!a.metrics.empty()) dump(a.metrics, eq::write_metrics_csv(eq::simulate_plan(state, plan).records));
  std::cout << plan.moves.size() << " moves written to " << a.plan << "\n";
  return 0;
}

struct SimulateArgs {
  std::string input;
  std::string plan;
  std::string metrics;
};

int run_simulate(const SimulateArgs& a) {
  const auto state = load_state(a.input);
  const auto plan = eq::read_plan(slurp(a.plan));
  const auto result = eq::simulate_plan(state, plan);
  dump(a.metrics, eq::write_metrics_csv(result.records));
  std::cout << plan.moves.size() << " moves replayed\n";
  return 0;
}

struct ReportArgs {
  std::string metrics;
  std::string input;
};

int run_report(const ReportArgs& a) {
  const auto records = eq::read_metrics_csv(slurp(a.metrics));
  if (records.empty()) throw eq::Error(a.metrics + ": no records");
  std::optional<eq::ClusterState> state;
  if (!a.input.empty()) state = load_state(a.input);
  const auto& first = records.front();
  const auto& last = records.back();

  std::printf("%-8s %-6s %16s %16s %16s\n", "pool", "user", "initial TiB", "final TiB", "gained TiB");
  double gained_user = 0.0, gained_all = 0.0;
  for (const auto& [pool, before] : first.pool_free) {
    const double after = static_cast<double>(last.pool_free.at(pool));
    const double gained = after - static_cast<double>(before);
    std::string user = "?";
    if (state) {
      const auto* p = state->find_pool(pool) ? &state->pool(pool) : nullptr;
      if (!p) throw eq::Error("pool " + std::to_string(pool) + " missing from " + a.input);
      user = p->user_data ? "yes" : "no";
      if (p->user_data) gained_user += gained;
    }
    gained_all += gained;
    std::printf("%-8u %-6s %16s %16s %16s\n", pool, user.c_str(), tib(static_cast<double>(before)).c_str(),
                tib(after).c_str(), tib(gained).c_str());
  }
  std::printf("\n");
  if (state) std::printf("gained free space, user-data pools: %s TiB\n", tib(gained_user).c_str());
  std::printf("gained free space, all pools:       %s TiB\n", tib(gained_all).c_str());
  std::printf("(sums of per-pool gains; pools sharing OSDs draw on the same free space)\n");
  std::printf("movement amount:                    %s TiB\n",
              tib(static_cast<double>(last.cumulative_moved_bytes)).c_str());
  std::printf("moves:                              %zu\n", last.move_index);
  std::int64_t total_ns = 0;
  for (const auto& r : records) total_ns += r.calc_time_ns;
  std::printf("calculation time:                   %.3f s\n", static_cast<double>(total_ns) / 1e9);
  for (const auto& [cls, v] : last.class_variance)
    std::printf("variance %-8s %.6g -> %.6g\n", cls.c_str(), first.class_variance.at(cls), v);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Byte-aware PG shard balancing for Ceph-like clusters"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "write a synthetic preset cluster");
  g->add_option("--preset", gen.preset, "preset label")->check(CLI::IsMember({"A", "B", "C", "D", "E", "F"}));
  g->add_option("--scale", gen.scale, "fraction of the preset's size")->check(CLI::Range(0.0, 1.0));
  g->add_option("--seed", gen.seed, "random seed");
  g->add_option("--sigma", gen.sigma, "log-normal sigma of per-PG bytes")->check(CLI::Range(0.0, 2.0));
  g->add_option("--fill", gen.fill, "target mean utilization")->check(CLI::Range(0.0, 0.95));
  g->add_option("--out", gen.out, "state file to write")->required();

  BalanceArgs bal;
  auto* b = app.add_subcommand("balance", "compute a balancing plan");
  b->add_option("--input", bal.input, "cluster state file")->required()->check(CLI::ExistingFile);
  b->add_option("--algorithm", bal.algorithm, "equilibrium or count")
      ->check(CLI::IsMember({"equilibrium", "count"}));
  b->add_option("--max-attempts", bal.max_attempts, "stuck source OSDs per device class before giving up")
      ->check(CLI::PositiveNumber);
  b->add_option("--max-moves", bal.max_moves, "upper bound on plan length");
  b->add_option("--plan", bal.plan, "plan file to write")->required();
  b->add_option("--metrics", bal.metrics, "metrics CSV to write");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "replay a plan and record metrics");
  s->add_option("--input", sim.input, "cluster state file")->required()->check(CLI::ExistingFile);
  s->add_option("--plan", sim.plan, "plan file")->required()->check(CLI::ExistingFile);
  s->add_option("--metrics", sim.metrics, "metrics CSV to write")->required();

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "summarize a metrics CSV");
  r->add_option("--metrics", rep.metrics, "metrics CSV")->required()->check(CLI::ExistingFile);
  r->add_option("--input", rep.input, "state file, to tell user-data pools apart")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*g) return run_generate(gen);
    if (*b) return run_balance(bal);
    if (*s) return run_simulate(sim);
    return run_report(rep);
  } catch (const std::exception& e) {
    std::cerr << "eqbal: " << e.what() << "\n";
    return 1;
  }
}
