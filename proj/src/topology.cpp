#include "vnfp/topology.hpp"

#include <algorithm>
#include <cstdio>

#include "vnfp/errors.hpp"

namespace vnfp {

const char* to_string(Tier t) {
  switch (t) {
    case Tier::Core: return "core";
    case Tier::Aggregation: return "aggregation";
    case Tier::Access: return "access";
  }
  return "?";
}

Tier tier_from_string(const std::string& s) {
  if (s == "core") return Tier::Core;
  if (s == "aggregation") return Tier::Aggregation;
  if (s == "access") return Tier::Access;
  throw SchemaError("unknown tier: " + s);
}

void TopologyConfig::validate() const {
  if (server_count < 1) throw ConfigError("server_count must be >= 1");
  if (pods < 1) throw ConfigError("pods must be >= 1");
  if (server_count < pods) throw ConfigError("server_count must be >= pods");
  auto check = [](const IntRange& r, const char* name) {
    if (!r.well_formed()) {
      throw ConfigError(std::string(name) + " range malformed: lo must satisfy 0 <= lo <= hi");
    }
  };
  check(intra_rack_delay_us, "intra_rack_delay_us");
  check(intra_pod_delay_us, "intra_pod_delay_us");
  check(inter_pod_delay_us, "inter_pod_delay_us");
  check(cpu_capacity, "cpu_capacity");
  check(mem_capacity, "mem_capacity");
  if (cpu_capacity.lo < 1 || mem_capacity.lo < 1) {
    throw ConfigError("capacity ranges must be strictly positive");
  }
}

namespace {

// Even partition: the first (total % parts) parts get one extra element.
int part_of(int index, int total, int parts) {
  const int base = total / parts;
  const int extra = total % parts;
  const int boundary = (base + 1) * extra;  // elements covered by the larger parts
  if (index < boundary) return index / (base + 1);
  return extra + (index - boundary) / base;
}

Tier tier_of(int index, int total) {
  if (total < 3) return Tier::Access;
  const int core_end = std::max(1, total / 5);
  const int agg_end = core_end + std::max(1, (total * 3) / 10);
  if (index < core_end) return Tier::Core;
  if (index < agg_end) return Tier::Aggregation;
  return Tier::Access;
}

}  // namespace

DelayClass pair_class(const ServerSpec& a, const ServerSpec& b) {
  if (a.pod != b.pod) return DelayClass::InterPod;
  if (a.rack != b.rack) return DelayClass::IntraPod;
  return DelayClass::IntraRack;
}

const IntRange& class_range(const TopologyConfig& config, DelayClass c) {
  switch (c) {
    case DelayClass::IntraRack: return config.intra_rack_delay_us;
    case DelayClass::IntraPod: return config.intra_pod_delay_us;
    case DelayClass::InterPod: return config.inter_pod_delay_us;
  }
  throw ConfigError("bad delay class");
}

Topology generate_topology(const TopologyConfig& config, Rng& rng) {
  config.validate();
  const int n = config.server_count;

  Topology topo;
  topo.servers.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    ServerSpec& s = topo.servers[static_cast<size_t>(i)];
    s.id = i;
    s.pod = part_of(i, n, config.pods);
    s.tier = tier_of(i, n);
  }
  // racks: each pod splits evenly in two once pod extents are known
  for (int p = 0; p < config.pods; ++p) {
    int lo = -1, hi = -1;
    for (int i = 0; i < n; ++i) {
      if (topo.servers[static_cast<size_t>(i)].pod == p) {
        if (lo < 0) lo = i;
        hi = i;
      }
    }
    if (lo < 0) continue;
    const int pod_size = hi - lo + 1;
    for (int i = lo; i <= hi; ++i) {
      topo.servers[static_cast<size_t>(i)].rack = (pod_size == 1) ? 0 : part_of(i - lo, pod_size, 2);
    }
  }

  // capacities first, then delays; sampling order is part of the seed contract
  for (int i = 0; i < n; ++i) {
    ServerSpec& s = topo.servers[static_cast<size_t>(i)];
    s.cpu_capacity = rng.uniform_int(config.cpu_capacity.lo, config.cpu_capacity.hi);
    s.mem_capacity = rng.uniform_int(config.mem_capacity.lo, config.mem_capacity.hi);
  }

  topo.delays = DelayMatrix(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const IntRange& r = class_range(
          config, pair_class(topo.servers[static_cast<size_t>(i)], topo.servers[static_cast<size_t>(j)]));
      topo.delays.set(i, j, rng.uniform_int(r.lo, r.hi));
    }
  }
  return topo;
}

ValidityReport validate_delay_matrix(const DelayMatrix& m) {
  ValidityReport report;
  const int n = m.size();
  for (int i = 0; i < n; ++i) {
    if (m.at(i, i) != 0) {
      report.violations.push_back({MatrixViolation::Kind::NonzeroDiagonal, i, i});
    }
    for (int j = 0; j < n; ++j) {
      if (m.at(i, j) < 0) {
        report.violations.push_back({MatrixViolation::Kind::NegativeEntry, i, j});
      }
      if (j > i && m.at(i, j) != m.at(j, i)) {
        report.violations.push_back({MatrixViolation::Kind::Asymmetry, i, j});
      }
    }
  }
  return report;
}

std::string ValidityReport::to_string() const {
  if (violations.empty()) return "valid";
  std::string out;
  char buf[96];
  for (const auto& v : violations) {
    const char* kind = "?";
    switch (v.kind) {
      case MatrixViolation::Kind::Asymmetry: kind = "asymmetry"; break;
      case MatrixViolation::Kind::NegativeEntry: kind = "negative entry"; break;
      case MatrixViolation::Kind::NonzeroDiagonal: kind = "nonzero diagonal"; break;
    }
    std::snprintf(buf, sizeof(buf), "%s at (%d,%d)\n", kind, v.i, v.j);
    out += buf;
  }
  return out;
}

void to_json(nlohmann::json& j, const IntRange& r) { j = nlohmann::json::array({r.lo, r.hi}); }

void from_json(const nlohmann::json& j, IntRange& r) {
  if (!j.is_array() || j.size() != 2) throw SchemaError("range must be [lo, hi]");
  r.lo = j[0].get<std::int64_t>();
  r.hi = j[1].get<std::int64_t>();
}

void to_json(nlohmann::json& j, const ServerSpec& s) {
  j = nlohmann::json{{"id", s.id},   {"tier", to_string(s.tier)},
                     {"pod", s.pod}, {"rack", s.rack},
                     {"cpu", s.cpu_capacity}, {"mem", s.mem_capacity}};
}

void from_json(const nlohmann::json& j, ServerSpec& s) {
  s.id = j.at("id").get<int>();
  s.tier = tier_from_string(j.at("tier").get<std::string>());
  s.pod = j.at("pod").get<int>();
  s.rack = j.at("rack").get<int>();
  s.cpu_capacity = j.at("cpu").get<Units>();
  s.mem_capacity = j.at("mem").get<Units>();
}

void to_json(nlohmann::json& j, const Topology& t) {
  nlohmann::json delays = nlohmann::json::array();
  const int n = t.delays.size();
  for (int i = 0; i < n; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < n; ++k) row.push_back(t.delays.at(i, k));
    delays.push_back(std::move(row));
  }
  j = nlohmann::json{{"servers", t.servers}, {"delays", std::move(delays)}};
}

void from_json(const nlohmann::json& j, Topology& t) {
  t.servers = j.at("servers").get<std::vector<ServerSpec>>();
  const auto& rows = j.at("delays");
  const int n = static_cast<int>(rows.size());
  t.delays = DelayMatrix(n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[static_cast<size_t>(i)].size()) != n) {
      throw SchemaError("delay matrix is not square");
    }
    for (int k = 0; k < n; ++k) {
      t.delays.set_raw(i, k, rows[static_cast<size_t>(i)][static_cast<size_t>(k)].get<Microseconds>());
    }
  }
}

void to_json(nlohmann::json& j, const TopologyConfig& c) {
  j = nlohmann::json{{"server_count", c.server_count},
                     {"pods", c.pods},
                     {"intra_rack_delay_us", c.intra_rack_delay_us},
                     {"intra_pod_delay_us", c.intra_pod_delay_us},
                     {"inter_pod_delay_us", c.inter_pod_delay_us},
                     {"cpu_capacity", c.cpu_capacity},
                     {"mem_capacity", c.mem_capacity},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TopologyConfig& c) {
  TopologyConfig defaults;
  c.server_count = j.value("server_count", defaults.server_count);
  c.pods = j.value("pods", defaults.pods);
  c.intra_rack_delay_us = j.value("intra_rack_delay_us", defaults.intra_rack_delay_us);
  c.intra_pod_delay_us = j.value("intra_pod_delay_us", defaults.intra_pod_delay_us);
  c.inter_pod_delay_us = j.value("inter_pod_delay_us", defaults.inter_pod_delay_us);
  c.cpu_capacity = j.value("cpu_capacity", defaults.cpu_capacity);
  c.mem_capacity = j.value("mem_capacity", defaults.mem_capacity);
  c.seed = j.value("seed", defaults.seed);
}

}  // namespace vnfp
