#include "vnfp/sfc.hpp"

#include <algorithm>
#include <set>

#include "vnfp/errors.hpp"

namespace vnfp {

const char* to_string(VnfType t) {
  switch (t) {
    case VnfType::Mme: return "MME";
    case VnfType::Hss: return "HSS";
    case VnfType::Sgw: return "SGW";
    case VnfType::Pgw: return "PGW";
  }
  return "?";
}

VnfType vnf_type_from_string(const std::string& s) {
  if (s == "MME") return VnfType::Mme;
  if (s == "HSS") return VnfType::Hss;
  if (s == "SGW") return VnfType::Sgw;
  if (s == "PGW") return VnfType::Pgw;
  throw SchemaError("unknown VNF type: " + s);
}

std::vector<DependencyEdge> default_chain() {
  return {{VnfType::Mme, VnfType::Hss, 2000},
          {VnfType::Hss, VnfType::Sgw, 2000},
          {VnfType::Sgw, VnfType::Pgw, 2000}};
}

int SfcSpec::instance_count() const {
  int total = 0;
  for (const auto& [type, count] : replicas) total += count;
  return total;
}

std::vector<VnfType> SfcSpec::chain_types() const {
  if (chain.empty()) throw ConfigError("chain is empty");
  std::vector<VnfType> types;
  types.push_back(chain.front().from);
  for (size_t e = 0; e < chain.size(); ++e) {
    if (e > 0 && chain[e].from != chain[e - 1].to) {
      throw ConfigError("chain edges do not form a connected path");
    }
    types.push_back(chain[e].to);
  }
  std::set<VnfType> seen(types.begin(), types.end());
  if (seen.size() != types.size()) throw ConfigError("chain revisits a type");
  return types;
}

void SfcSpec::validate() const {
  const auto types = chain_types();
  for (const auto& edge : chain) {
    if (edge.from == edge.to) throw ConfigError("chain edge connects a type to itself");
    if (edge.tolerance_us <= 0) throw ConfigError("edge tolerance must be positive");
  }
  for (VnfType t : types) {
    auto it = replicas.find(t);
    if (it == replicas.end() || it->second < 1) {
      throw ConfigError(std::string("replica count for ") + to_string(t) + " must be >= 1");
    }
  }
}

bool SfcSpec::operator==(const SfcSpec& other) const {
  if (replicas != other.replicas) return false;
  if (chain.size() != other.chain.size()) return false;
  for (size_t i = 0; i < chain.size(); ++i) {
    if (chain[i].from != other.chain[i].from || chain[i].to != other.chain[i].to ||
        chain[i].tolerance_us != other.chain[i].tolerance_us) {
      return false;
    }
  }
  return true;
}

SfcSpec network1_spec() {
  SfcSpec s;
  s.replicas = {{VnfType::Mme, 2}, {VnfType::Hss, 1}, {VnfType::Sgw, 1}, {VnfType::Pgw, 2}};
  s.chain = default_chain();
  return s;
}

SfcSpec network2_spec() {
  SfcSpec s;
  s.replicas = {{VnfType::Mme, 2}, {VnfType::Hss, 3}, {VnfType::Sgw, 3}, {VnfType::Pgw, 2}};
  s.chain = default_chain();
  return s;
}

std::vector<VnfInstance> make_instances(const SfcSpec& spec) {
  spec.validate();
  std::vector<VnfInstance> out;
  InstanceId next = 0;
  for (VnfType t : spec.chain_types()) {
    const int count = spec.replicas.at(t);
    for (int r = 0; r < count; ++r) {
      out.push_back(VnfInstance{next++, t, 1, 1});
    }
  }
  return out;
}

std::vector<ComputationalPath> enumerate_paths(const SfcSpec& spec,
                                               const std::vector<VnfInstance>& instances) {
  const auto types = spec.chain_types();

  std::map<VnfType, std::vector<InstanceId>> by_type;
  for (const auto& inst : instances) by_type[inst.type].push_back(inst.id);
  for (auto& [t, ids] : by_type) std::sort(ids.begin(), ids.end());

  for (VnfType t : types) {
    const int want = spec.replicas.at(t);
    const int have = by_type.count(t) ? static_cast<int>(by_type[t].size()) : 0;
    if (want != have) {
      throw ConfigError(std::string("instance multiset mismatch for ") + to_string(t));
    }
  }

  std::vector<ComputationalPath> paths;
  std::vector<size_t> cursor(types.size(), 0);
  for (;;) {
    ComputationalPath p;
    p.instances.reserve(types.size());
    for (size_t pos = 0; pos < types.size(); ++pos) {
      p.instances.push_back(by_type[types[pos]][cursor[pos]]);
    }
    paths.push_back(std::move(p));
    // odometer increment, last position fastest: lexicographic id order
    size_t pos = types.size();
    while (pos > 0) {
      --pos;
      if (++cursor[pos] < by_type[types[pos]].size()) break;
      cursor[pos] = 0;
      if (pos == 0) return paths;
    }
  }
}

void to_json(nlohmann::json& j, const SfcSpec& s) {
  nlohmann::json replicas = nlohmann::json::object();
  for (const auto& [type, count] : s.replicas) replicas[to_string(type)] = count;
  nlohmann::json chain = nlohmann::json::array();
  for (const auto& e : s.chain) {
    chain.push_back({{"from", to_string(e.from)},
                     {"to", to_string(e.to)},
                     {"tolerance_us", e.tolerance_us}});
  }
  j = nlohmann::json{{"replicas", std::move(replicas)}, {"chain", std::move(chain)}};
}

void from_json(const nlohmann::json& j, SfcSpec& s) {
  s.replicas.clear();
  for (const auto& [key, value] : j.at("replicas").items()) {
    s.replicas[vnf_type_from_string(key)] = value.get<int>();
  }
  s.chain.clear();
  for (const auto& e : j.at("chain")) {
    DependencyEdge edge;
    edge.from = vnf_type_from_string(e.at("from").get<std::string>());
    edge.to = vnf_type_from_string(e.at("to").get<std::string>());
    edge.tolerance_us = e.value("tolerance_us", Microseconds{2000});
    s.chain.push_back(edge);
  }
}

void to_json(nlohmann::json& j, const VnfInstance& v) {
  j = nlohmann::json{{"id", v.id},
                     {"type", to_string(v.type)},
                     {"cpu_req", v.cpu_req},
                     {"mem_req", v.mem_req}};
}

void from_json(const nlohmann::json& j, VnfInstance& v) {
  v.id = j.at("id").get<InstanceId>();
  v.type = vnf_type_from_string(j.at("type").get<std::string>());
  v.cpu_req = j.at("cpu_req").get<Units>();
  v.mem_req = j.at("mem_req").get<Units>();
}

}  // namespace vnfp
