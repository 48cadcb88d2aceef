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

// Plan files, in the style of `ceph osd pg-upmap-items`:
//
//   # equilibrium-plan fingerprint <16 hex digits>
//   pg-upmap-items <pool>.<pg index in hex> <from osd> <to osd> <shard bytes>
//   ...

#pragma once

#include <charconv>
#include <sstream>
#include <string>
#include <string_view>

#include "equilibrium/cluster.hpp"
#include "equilibrium/io/state_file.hpp"
#include "equilibrium/plan.hpp"

namespace equilibrium {

inline constexpr std::string_view kPlanHeader = "# equilibrium-plan fingerprint ";

inline std::string write_plan(const Plan& plan) {
  std::string out;
  out += kPlanHeader;
  out += plan.fingerprint;
  out += '\n';
  for (const auto& m : plan.moves) {
    out += "pg-upmap-items ";
    out += pg_name(m.pg_id());
    out += ' ' + std::to_string(m.from) + ' ' + std::to_string(m.to) + ' ' + std::to_string(m.bytes) + '\n';
  }
  return out;
}

// Slots come back as kUnresolvedSlot; replaying the plan resolves them.
namespace detail {

// Whole-token decimal parse; rejects trailing junk and, for unsigned T, signs.
template <class T>
bool parse_number(const std::string& tok, T& out) {
  const auto* end = tok.data() + tok.size();
  const auto r = std::from_chars(tok.data(), end, out);
  return r.ec == std::errc{} && r.ptr == end;
}

}  // namespace detail

inline Plan read_plan(std::string_view text) {
  Plan plan;
  std::size_t line_no = 0;
  bool header = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    auto fail = [line_no](const std::string& msg) {
      throw FormatError("plan line " + std::to_string(line_no) + ": " + msg);
    };
    if (!header) {
      if (line.substr(0, kPlanHeader.size()) != kPlanHeader) fail("missing fingerprint header");
      plan.fingerprint = std::string(line.substr(kPlanHeader.size()));
      if (plan.fingerprint.size() != 16 ||
          plan.fingerprint.find_first_not_of("0123456789abcdef") != std::string::npos)
        fail("malformed fingerprint");
      header = true;
      continue;
    }
    if (line.empty()) continue;

    std::istringstream in{std::string(line)};
    std::string verb, pg, from_s, to_s, bytes_s, extra;
    OsdId from = 0, to = 0;
    std::uint64_t bytes = 0;
    if (!(in >> verb >> pg >> from_s >> to_s >> bytes_s) || verb != "pg-upmap-items" || (in >> extra) ||
        !detail::parse_number(from_s, from) || !detail::parse_number(to_s, to) ||
        !detail::parse_number(bytes_s, bytes) || from < 0 || to < 0)
      fail("expected `pg-upmap-items <pool>.<pg> <from> <to> <bytes>`");
    const auto id = parse_pg_name(pg);
    if (!id) fail("malformed pg id " + pg);
    Move m;
    m.pool = id->pool;
    m.pg = id->index;
    m.from = from;
    m.to = to;
    m.bytes = bytes;
    plan.moves.push_back(m);
  }
  if (!header) throw FormatError("plan is empty, missing fingerprint header");
  return plan;
}

}  // namespace equilibrium
