#ifndef VNFP_SFC_HPP
#define VNFP_SFC_HPP

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "vnfp/topology.hpp"

namespace vnfp {

/// The four EPC VNF kinds, in canonical chain order.
enum class VnfType : int { Mme = 0, Hss = 1, Sgw = 2, Pgw = 3 };
inline constexpr int kVnfTypeCount = 4;

const char* to_string(VnfType t);
VnfType vnf_type_from_string(const std::string& s);

using InstanceId = int;

struct VnfInstance {
  InstanceId id = 0;
  VnfType type = VnfType::Mme;
  Units cpu_req = 1;
  Units mem_req = 1;
};

struct DependencyEdge {
  VnfType from = VnfType::Mme;
  VnfType to = VnfType::Hss;
  Microseconds tolerance_us = 2000;
};

struct SfcSpec {
  std::map<VnfType, int> replicas;
  std::vector<DependencyEdge> chain;

  int instance_count() const;
  /// Types visited along the chain, in order. Validates the chain is a
  /// connected path covering each type exactly once.
  std::vector<VnfType> chain_types() const;
  void validate() const;

  bool operator==(const SfcSpec&) const;
};

/// Canonical traversal MME -> HSS -> SGW -> PGW as three edges.
std::vector<DependencyEdge> default_chain();

/// 15-server companion spec: replicas {MME:2, HSS:1, SGW:1, PGW:2}, 6 instances.
SfcSpec network1_spec();
/// 30-server companion spec: replicas {MME:2, HSS:3, SGW:3, PGW:2}, 10 instances.
SfcSpec network2_spec();

/// Dense instance list realizing the spec's replica counts, ids assigned in
/// chain-type order then replica order. Requirements default to 1 unit.
std::vector<VnfInstance> make_instances(const SfcSpec& spec);

struct ComputationalPath {
  std::vector<InstanceId> instances;  // one per chain position
  bool operator==(const ComputationalPath&) const = default;
};

/// Cartesian product of per-type instance sets along the chain order, emitted
/// in lexicographic order of instance ids. Throws ConfigError if the instance
/// multiset does not realize the spec.
std::vector<ComputationalPath> enumerate_paths(const SfcSpec& spec,
                                               const std::vector<VnfInstance>& instances);

void to_json(nlohmann::json& j, const SfcSpec& s);
void from_json(const nlohmann::json& j, SfcSpec& s);
void to_json(nlohmann::json& j, const VnfInstance& v);
void from_json(const nlohmann::json& j, VnfInstance& v);

}  // namespace vnfp

#endif
