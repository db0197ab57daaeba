#ifndef VNFP_TOPOLOGY_HPP
#define VNFP_TOPOLOGY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "vnfp/rng.hpp"

namespace vnfp {

using ServerId = int;
using Units = std::int64_t;
using Microseconds = std::int64_t;

enum class Tier { Core, Aggregation, Access };

const char* to_string(Tier t);
Tier tier_from_string(const std::string& s);

/// Inclusive integer range [lo, hi].
struct IntRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;

  bool well_formed() const { return lo >= 0 && lo <= hi; }
  bool contains(std::int64_t v) const { return v >= lo && v <= hi; }
  double midpoint() const { return (static_cast<double>(lo) + static_cast<double>(hi)) / 2.0; }
};

struct ServerSpec {
  ServerId id = 0;
  Tier tier = Tier::Access;
  int pod = 0;
  int rack = 0;
  Units cpu_capacity = 0;
  Units mem_capacity = 0;
};

/// Symmetric server-to-server delay matrix, zero diagonal, microseconds.
class DelayMatrix {
 public:
  DelayMatrix() = default;
  explicit DelayMatrix(int size) : size_(size), d_(static_cast<size_t>(size) * size, 0) {}

  int size() const { return size_; }
  Microseconds at(int i, int j) const { return d_[static_cast<size_t>(i) * size_ + j]; }
  /// Sets both (i,j) and (j,i).
  void set(int i, int j, Microseconds v) {
    d_[static_cast<size_t>(i) * size_ + j] = v;
    d_[static_cast<size_t>(j) * size_ + i] = v;
  }
  /// Raw entry write; symmetry is the caller's problem. Used by parsers and tests.
  void set_raw(int i, int j, Microseconds v) { d_[static_cast<size_t>(i) * size_ + j] = v; }

  bool operator==(const DelayMatrix&) const = default;

 private:
  int size_ = 0;
  std::vector<Microseconds> d_;
};

struct TopologyConfig {
  int server_count = 15;
  int pods = 3;
  IntRange intra_rack_delay_us{50, 200};
  IntRange intra_pod_delay_us{200, 600};
  IntRange inter_pod_delay_us{600, 1500};
  IntRange cpu_capacity{8, 32};
  IntRange mem_capacity{16, 64};
  std::uint64_t seed = 0;

  /// Throws ConfigError on malformed ranges or server_count < pods.
  void validate() const;
};

struct Topology {
  std::vector<ServerSpec> servers;
  DelayMatrix delays;
};

/// Lays out `server_count` servers into pods (two racks each) and samples
/// per-pair delays by pair class and per-server capacities from the config ranges.
Topology generate_topology(const TopologyConfig& config, Rng& rng);

enum class DelayClass { IntraRack, IntraPod, InterPod };

/// Pair class of two distinct servers under the rack/pod layout.
DelayClass pair_class(const ServerSpec& a, const ServerSpec& b);

const IntRange& class_range(const TopologyConfig& config, DelayClass c);

struct MatrixViolation {
  enum class Kind { Asymmetry, NegativeEntry, NonzeroDiagonal };
  Kind kind;
  int i = 0;
  int j = 0;
};

struct ValidityReport {
  std::vector<MatrixViolation> violations;
  bool valid() const { return violations.empty(); }
  std::string to_string() const;
};

/// Reports every violated matrix invariant; empty report iff valid.
ValidityReport validate_delay_matrix(const DelayMatrix& m);

void to_json(nlohmann::json& j, const ServerSpec& s);
void from_json(const nlohmann::json& j, ServerSpec& s);
void to_json(nlohmann::json& j, const Topology& t);
void from_json(const nlohmann::json& j, Topology& t);
void to_json(nlohmann::json& j, const IntRange& r);
void from_json(const nlohmann::json& j, IntRange& r);
void to_json(nlohmann::json& j, const TopologyConfig& c);
void from_json(const nlohmann::json& j, TopologyConfig& c);

}  // namespace vnfp

#endif
