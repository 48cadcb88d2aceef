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

// Cluster state files.
//
// A state file is a JSON document:
//
//   {
//   "format": "equilibrium-cluster",
//   "version": 1,
//   "osds": [ {"id", "capacity_bytes", "overhead_bytes", "class", "host"}, ... ],
//   "crush": [ {"id", "name", "type", "children": [...]}, ... ],   // one entry per root
//   "rules": [ {"id", "name", "root", "failure_domain", "class"?, "shard_count"}, ... ],
//   "pools": [ {"id", "name", "rule", "scheme", "pg_count", "user_data", "pg_bytes"}, ... ],
//   "pg_map": [ {"pg": "<pool>.<hex index>", "osds": [...]}, ... ]
//   }
//
// OSD leaves in the crush tree are written as {"id": <osd id>, "type": "osd"}.
// "host" names the OSD's crush parent. Used bytes are not stored: they are
// recomputed from overhead plus resident shards. serialize_state emits a
// canonical form with one entity per line; its FNV-1a hash is the state
// fingerprint.

#pragma once

#include <charconv>
#include <cstdio>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "equilibrium/cluster.hpp"
#include "equilibrium/hash.hpp"

namespace equilibrium {

// Raised by parse_state; carries every problem found, each with a location.
class ParseError : public FormatError {
 public:
  explicit ParseError(std::vector<std::string> errors)
      : FormatError(join(errors)), errors_(std::move(errors)) {}

  const std::vector<std::string>& errors() const { return errors_; }

 private:
  static std::string join(const std::vector<std::string>& errors) {
    std::string out;
    for (const auto& e : errors) {
      if (!out.empty()) out += "\n";
      out += e;
    }
    return out;
  }
  std::vector<std::string> errors_;
};

inline constexpr const char* kStateFormat = "equilibrium-cluster";
inline constexpr int kStateVersion = 1;

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson crush_to_json(const CrushTree& tree, NodeId id) {
  const auto& n = tree.node(id);
  ojson j;
  j["id"] = n.id;
  if (n.level == Level::osd) {
    j["type"] = "osd";
    return j;
  }
  j["name"] = n.name;
  j["type"] = std::string(to_string(n.level));
  j["children"] = ojson::array();
  for (auto c : n.children) j["children"].push_back(crush_to_json(tree, c));
  return j;
}

inline void emit_array(std::string& out, const char* key, const std::vector<ojson>& items, bool last) {
  out += "\"";
  out += key;
  out += "\": [";
  for (std::size_t i = 0; i < items.size(); ++i) {
    out += i == 0 ? "\n" : ",\n";
    out += items[i].dump();
  }
  out += items.empty() ? "]" : "\n]";
  out += last ? "\n" : ",\n";
}

}  // namespace detail

inline std::string serialize_state(const ClusterState& state) {
  using detail::ojson;
  std::vector<ojson> osds, crush, rules, pools, pgs;
  for (const auto& o : state.osds) {
    ojson j;
    j["id"] = o.id;
    j["capacity_bytes"] = o.capacity_bytes;
    j["overhead_bytes"] = o.overhead_bytes;
    j["class"] = o.device_class;
    j["host"] = state.crush.contains(o.crush_parent) ? state.crush.node(o.crush_parent).name : "";
    osds.push_back(std::move(j));
  }
  for (auto root : state.crush.roots()) crush.push_back(detail::crush_to_json(state.crush, root));
  for (const auto& r : state.rules) {
    ojson j;
    j["id"] = r.id;
    j["name"] = r.name;
    j["root"] = r.root;
    j["failure_domain"] = std::string(to_string(r.failure_domain));
    if (r.device_class) j["class"] = *r.device_class;
    j["shard_count"] = r.shard_count;
    rules.push_back(std::move(j));
  }
  for (const auto& p : state.pools) {
    ojson j;
    j["id"] = p.id;
    j["name"] = p.name;
    j["rule"] = p.rule;
    if (p.scheme.kind == Scheme::Kind::replicated) {
      j["scheme"] = ojson{{"type", "replicated"}, {"size", p.scheme.size}};
    } else {
      j["scheme"] = ojson{{"type", "erasure"}, {"k", p.scheme.k}, {"m", p.scheme.m}};
    }
    j["pg_count"] = p.pg_count;
    j["user_data"] = p.user_data;
    j["pg_bytes"] = p.stored_bytes_per_pg;
    pools.push_back(std::move(j));
  }
  for (const auto& [pg, list] : state.pg_map) {
    ojson j;
    j["pg"] = pg_name(pg);
    j["osds"] = list;
    pgs.push_back(std::move(j));
  }

  std::string out = "{\n";
  out += "\"format\": \"" + std::string(kStateFormat) + "\",\n";
  out += "\"version\": " + std::to_string(kStateVersion) + ",\n";
  detail::emit_array(out, "osds", osds, false);
  detail::emit_array(out, "crush", crush, false);
  detail::emit_array(out, "rules", rules, false);
  detail::emit_array(out, "pools", pools, false);
  detail::emit_array(out, "pg_map", pgs, true);
  out += "}\n";
  return out;
}

inline std::string fingerprint(const ClusterState& state) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(serialize_state(state))));
  return buf;
}

inline std::optional<PgId> parse_pg_name(std::string_view s) {
  const auto dot = s.find('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == s.size()) return std::nullopt;
  PgId pg;
  auto r1 = std::from_chars(s.data(), s.data() + dot, pg.pool);
  if (r1.ec != std::errc{} || r1.ptr != s.data() + dot) return std::nullopt;
  auto r2 = std::from_chars(s.data() + dot + 1, s.data() + s.size(), pg.index, 16);
  if (r2.ec != std::errc{} || r2.ptr != s.data() + s.size()) return std::nullopt;
  return pg;
}

namespace detail {

// Reads one JSON document into a ClusterState, collecting every error.
class StateReader {
 public:
  ClusterState read(const nlohmann::json& doc) {
    ClusterState s;
    if (!doc.is_object()) {
      fail("", "document must be an object");
      return s;
    }
    fields(doc, "", {"format", "version", "osds", "crush", "rules", "pools", "pg_map"});
    if (auto f = str(doc, "", "format"); f && *f != kStateFormat) fail("/format", "unexpected format " + *f);
    if (auto v = integer<int>(doc, "", "version"); v && *v != kStateVersion)
      fail("/version", "unsupported version " + std::to_string(*v));

    // crush first so OSD host names resolve
    if (const auto* roots = array(doc, "", "crush"))
      for (std::size_t i = 0; i < roots->size(); ++i) read_node(s, (*roots)[i], "/crush/" + std::to_string(i), std::nullopt);

    std::set<OsdId> osd_ids;
    if (const auto* osds = array(doc, "", "osds")) {
      for (std::size_t i = 0; i < osds->size(); ++i) {
        const auto& j = (*osds)[i];
        const std::string at = "/osds/" + std::to_string(i);
        if (!object(j, at)) continue;
        fields(j, at, {"id", "capacity_bytes", "overhead_bytes", "class", "host"});
        Osd o;
        auto id = integer<OsdId>(j, at, "id");
        auto cap = integer<Bytes>(j, at, "capacity_bytes");
        auto over = integer<Bytes>(j, at, "overhead_bytes");
        auto cls = str(j, at, "class");
        auto host = str(j, at, "host");
        if (!id || !cap || !over || !cls || !host) continue;
        if (!osd_ids.insert(*id).second) {
          fail(at + "/id", "duplicate OSD id " + std::to_string(*id));
          continue;
        }
        o.id = *id;
        o.capacity_bytes = *cap;
        o.overhead_bytes = *over;
        o.device_class = *cls;
        if (auto parent = s.crush.find_by_name(*host)) {
          o.crush_parent = *parent;
        } else {
          fail(at + "/host", "unknown crush bucket " + *host);
        }
        s.osds.push_back(std::move(o));
      }
    }

    std::set<RuleId> rule_ids;
    if (const auto* rules = array(doc, "", "rules")) {
      for (std::size_t i = 0; i < rules->size(); ++i) {
        const auto& j = (*rules)[i];
        const std::string at = "/rules/" + std::to_string(i);
        if (!object(j, at)) continue;
        fields(j, at, {"id", "name", "root", "failure_domain", "class", "shard_count"});
        auto id = integer<RuleId>(j, at, "id");
        auto name = str(j, at, "name");
        auto root = integer<NodeId>(j, at, "root");
        auto fd = str(j, at, "failure_domain");
        auto shards = integer<std::uint32_t>(j, at, "shard_count");
        if (!id || !name || !root || !fd || !shards) continue;
        PlacementRule r;
        r.id = *id;
        r.name = *name;
        r.root = *root;
        r.shard_count = *shards;
        if (auto lvl = parse_level(*fd)) {
          r.failure_domain = *lvl;
        } else {
          fail(at + "/failure_domain", "unknown level " + *fd);
        }
        if (j.contains("class")) {
          if (auto c = str(j, at, "class")) r.device_class = *c;
        }
        if (!rule_ids.insert(r.id).second) {
          fail(at + "/id", "duplicate rule id " + std::to_string(r.id));
          continue;
        }
        s.rules.push_back(std::move(r));
      }
    }

    std::set<PoolId> pool_ids;
    if (const auto* pools = array(doc, "", "pools")) {
      for (std::size_t i = 0; i < pools->size(); ++i) {
        const auto& j = (*pools)[i];
        const std::string at = "/pools/" + std::to_string(i);
        if (!object(j, at)) continue;
        fields(j, at, {"id", "name", "rule", "scheme", "pg_count", "user_data", "pg_bytes"});
        auto id = integer<PoolId>(j, at, "id");
        auto name = str(j, at, "name");
        auto rule = integer<RuleId>(j, at, "rule");
        auto pgs = integer<std::uint32_t>(j, at, "pg_count");
        auto user = boolean(j, at, "user_data");
        const auto* bytes = array(j, at, "pg_bytes");
        if (!id || !name || !rule || !pgs || !user || !bytes) continue;
        Pool p;
        p.id = *id;
        p.name = *name;
        p.rule = *rule;
        p.pg_count = *pgs;
        p.user_data = *user;
        for (std::size_t b = 0; b < bytes->size(); ++b) {
          const auto& v = (*bytes)[b];
          if (!v.is_number_unsigned()) {
            fail(at + "/pg_bytes/" + std::to_string(b), "expected a non-negative integer");
            continue;
          }
          p.stored_bytes_per_pg.push_back(v.get<Bytes>());
        }
        if (!j.contains("scheme") || !j["scheme"].is_object()) {
          fail(at + "/scheme", "missing or not an object");
          continue;
        }
        const auto& sj = j["scheme"];
        const std::string sat = at + "/scheme";
        auto type = str(sj, sat, "type");
        if (!type) continue;
        if (*type == "replicated") {
          fields(sj, sat, {"type", "size"});
          if (auto r = integer<std::uint32_t>(sj, sat, "size")) p.scheme = Scheme::replicated(*r);
        } else if (*type == "erasure") {
          fields(sj, sat, {"type", "k", "m"});
          auto k = integer<std::uint32_t>(sj, sat, "k");
          auto m = integer<std::uint32_t>(sj, sat, "m");
          if (k && m) p.scheme = Scheme::erasure(*k, *m);
        } else {
          fail(sat + "/type", "unknown scheme " + *type);
        }
        if (!pool_ids.insert(p.id).second) {
          fail(at + "/id", "duplicate pool id " + std::to_string(p.id));
          continue;
        }
        s.pools.push_back(std::move(p));
      }
    }

    if (const auto* pgs = array(doc, "", "pg_map")) {
      for (std::size_t i = 0; i < pgs->size(); ++i) {
        const auto& j = (*pgs)[i];
        const std::string at = "/pg_map/" + std::to_string(i);
        if (!object(j, at)) continue;
        fields(j, at, {"pg", "osds"});
        auto name = str(j, at, "pg");
        const auto* list = array(j, at, "osds");
        if (!name || !list) continue;
        auto pg = parse_pg_name(*name);
        if (!pg) {
          fail(at + "/pg", "malformed pg id " + *name);
          continue;
        }
        std::vector<OsdId> osds;
        for (std::size_t k = 0; k < list->size(); ++k) {
          const auto& v = (*list)[k];
          if (!v.is_number_integer()) {
            fail(at + "/osds/" + std::to_string(k), "expected an OSD id");
            continue;
          }
          const auto id = v.get<OsdId>();
          if (!osd_ids.count(id)) fail(at + "/osds/" + std::to_string(k), "shard on unknown OSD " + std::to_string(id));
          osds.push_back(id);
        }
        if (!s.pg_map.emplace(*pg, std::move(osds)).second) fail(at + "/pg", "duplicate pg " + *name);
      }
    }
    return s;
  }

  std::vector<std::string> errors;

 private:
  void fail(const std::string& at, const std::string& message) {
    errors.push_back((at.empty() ? std::string("/") : at) + ": " + message);
  }

  bool object(const nlohmann::json& j, const std::string& at) {
    if (j.is_object()) return true;
    fail(at, "expected an object");
    return false;
  }

  void fields(const nlohmann::json& j, const std::string& at, std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : j.items()) {
      bool known = false;
      for (const char* a : allowed) known = known || key == a;
      if (!known) fail(at + "/" + key, "unknown field");
    }
  }

  const nlohmann::json* member(const nlohmann::json& j, const std::string& at, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) {
      fail(at + "/" + key, "missing field");
      return nullptr;
    }
    return &*it;
  }

  const nlohmann::json* array(const nlohmann::json& j, const std::string& at, const char* key) {
    const auto* v = member(j, at, key);
    if (v && !v->is_array()) {
      fail(at + "/" + key, "expected an array");
      return nullptr;
    }
    return v;
  }

  std::optional<std::string> str(const nlohmann::json& j, const std::string& at, const char* key) {
    const auto* v = member(j, at, key);
    if (!v) return std::nullopt;
    if (!v->is_string()) {
      fail(at + "/" + key, "expected a string");
      return std::nullopt;
    }
    return v->get<std::string>();
  }

  std::optional<bool> boolean(const nlohmann::json& j, const std::string& at, const char* key) {
    const auto* v = member(j, at, key);
    if (!v) return std::nullopt;
    if (!v->is_boolean()) {
      fail(at + "/" + key, "expected a boolean");
      return std::nullopt;
    }
    return v->get<bool>();
  }

  template <typename T>
  std::optional<T> integer(const nlohmann::json& j, const std::string& at, const char* key) {
    const auto* v = member(j, at, key);
    if (!v) return std::nullopt;
    const bool ok = std::is_signed_v<T> ? v->is_number_integer() : v->is_number_unsigned();
    if (!ok) {
      fail(at + "/" + key, std::is_signed_v<T> ? "expected an integer" : "expected a non-negative integer");
      return std::nullopt;
    }
    if constexpr (std::is_signed_v<T>) {
      const auto x = v->get<std::int64_t>();
      if (x < std::numeric_limits<T>::min() || x > std::numeric_limits<T>::max()) {
        fail(at + "/" + key, "integer out of range");
        return std::nullopt;
      }
      return static_cast<T>(x);
    } else {
      const auto x = v->get<std::uint64_t>();
      if (x > std::numeric_limits<T>::max()) {
        fail(at + "/" + key, "integer out of range");
        return std::nullopt;
      }
      return static_cast<T>(x);
    }
  }

  void read_node(ClusterState& s, const nlohmann::json& j, const std::string& at, std::optional<NodeId> parent) {
    if (!object(j, at)) return;
    auto type = str(j, at, "type");
    if (!type) return;
    auto level = parse_level(*type);
    if (!level) {
      fail(at + "/type", "unknown level " + *type);
      return;
    }
    CrushNode n;
    n.level = *level;
    if (*level == Level::osd) {
      fields(j, at, {"id", "type"});
      auto id = integer<NodeId>(j, at, "id");
      if (!id) return;
      n.id = *id;
      n.name = "osd." + std::to_string(*id);
    } else {
      fields(j, at, {"id", "name", "type", "children"});
      auto id = integer<NodeId>(j, at, "id");
      auto name = str(j, at, "name");
      if (!id || !name) return;
      n.id = *id;
      n.name = *name;
    }
    const NodeId id = n.id;
    if (s.crush.contains(id)) {
      fail(at + "/id", "duplicate crush node id " + std::to_string(id));
      return;
    }
    if (n.level != Level::osd && s.crush.find_by_name(n.name)) {
      fail(at + "/name", "duplicate crush bucket name " + n.name);
      return;
    }
    s.crush.add_node(std::move(n));
    if (parent) s.crush.attach(*parent, id);
    if (*level == Level::osd) return;
    if (const auto* children = array(j, at, "children"))
      for (std::size_t i = 0; i < children->size(); ++i)
        read_node(s, (*children)[i], at + "/children/" + std::to_string(i), id);
  }
};

}  // namespace detail

// Parses and validates a state document. Throws ParseError listing every
// syntax, schema, and semantic problem found.
inline ClusterState parse_state(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError({"syntax error at byte " + std::to_string(e.byte) + ": " + e.what()});
  }
  detail::StateReader reader;
  ClusterState s = reader.read(doc);
  if (!reader.errors.empty()) throw ParseError(std::move(reader.errors));
  s.sort_by_id();
  s.crush.recompute_weights([&s](OsdId id) -> double {
    auto p = s.find_osd(id);
    return p ? static_cast<double>(s.osds[*p].capacity_bytes) : 0.0;
  });
  recompute_used_bytes(s);
  std::vector<std::string> semantic;
  for (const auto& v : validate_state(s)) semantic.push_back(v.to_string());
  if (!semantic.empty()) throw ParseError(std::move(semantic));
  return s;
}

}  // namespace equilibrium
