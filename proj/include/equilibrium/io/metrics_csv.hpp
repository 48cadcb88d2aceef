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

// Trajectory CSV:
//   move_index,cumulative_moved_bytes,calc_time_ns,variance_<class>...,free_<pool>...
// Classes sort by name and pools by id. Variances use the shortest
// representation that reads back to the same double.

#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "equilibrium/simulator.hpp"

namespace equilibrium {

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

template <typename T>
T parse_number(std::string_view s, std::size_t line, const std::string& column) {
  T v{};
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw FormatError("metrics line " + std::to_string(line) + ", column " + column + ": bad number '" +
                      std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  while (true) {
    const auto c = line.find(',');
    out.push_back(line.substr(0, c));
    if (c == std::string_view::npos) break;
    line = line.substr(c + 1);
  }
  return out;
}

}  // namespace detail

inline std::string write_metrics_csv(const std::vector<TrajectoryRecord>& records) {
  std::string out = "move_index,cumulative_moved_bytes,calc_time_ns";
  if (records.empty()) return out + "\n";
  const auto& head = records.front();
  for (const auto& [cls, v] : head.class_variance) out += ",variance_" + cls;
  for (const auto& [pool, v] : head.pool_free) out += ",free_" + std::to_string(pool);
  out += '\n';
  for (const auto& r : records) {
    out += std::to_string(r.move_index) + ',' + std::to_string(r.cumulative_moved_bytes) + ',' +
           std::to_string(r.calc_time_ns);
    for (const auto& [cls, v] : r.class_variance) out += ',' + detail::format_double(v);
    for (const auto& [pool, v] : r.pool_free) out += ',' + std::to_string(v);
    out += '\n';
  }
  return out;
}

inline std::vector<TrajectoryRecord> read_metrics_csv(std::string_view text) {
  std::vector<std::string> header;
  std::vector<TrajectoryRecord> records;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto cells = detail::split_csv(line);
    if (header.empty()) {
      for (auto c : cells) header.emplace_back(c);
      if (header.size() < 3 || header[0] != "move_index" || header[1] != "cumulative_moved_bytes" ||
          header[2] != "calc_time_ns")
        throw FormatError("metrics header must start with move_index,cumulative_moved_bytes,calc_time_ns");
      for (std::size_t i = 3; i < header.size(); ++i)
        if (header[i].rfind("variance_", 0) != 0 && header[i].rfind("free_", 0) != 0)
          throw FormatError("metrics header: unknown column " + header[i]);
      continue;
    }
    if (cells.size() != header.size())
      throw FormatError("metrics line " + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " columns");
    TrajectoryRecord r;
    r.move_index = detail::parse_number<std::size_t>(cells[0], line_no, header[0]);
    r.cumulative_moved_bytes = detail::parse_number<Bytes>(cells[1], line_no, header[1]);
    r.calc_time_ns = detail::parse_number<std::int64_t>(cells[2], line_no, header[2]);
    for (std::size_t i = 3; i < cells.size(); ++i) {
      const auto& name = header[i];
      if (name.rfind("variance_", 0) == 0) {
        r.class_variance[name.substr(9)] = detail::parse_number<double>(cells[i], line_no, name);
      } else {
        const auto pool = detail::parse_number<PoolId>(name.substr(5), line_no, name);
        r.pool_free[pool] = detail::parse_number<Bytes>(cells[i], line_no, name);
      }
    }
    records.push_back(std::move(r));
  }
  if (header.empty()) throw FormatError("metrics file is empty");
  return records;
}

}  // namespace equilibrium
