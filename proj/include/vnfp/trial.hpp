#ifndef VNFP_TRIAL_HPP
#define VNFP_TRIAL_HPP

#include <vector>

#include "vnfp/sfc.hpp"
#include "vnfp/topology.hpp"

namespace vnfp {

/// One randomized placement problem: a server fleet with delays, the chain
/// spec, concrete instances with sampled requirements, and per-edge delay
/// tolerances. `tolerances[e]` mirrors `spec.chain[e].tolerance_us`.
struct NetworkTrial {
  std::vector<ServerSpec> servers;
  DelayMatrix delays;
  SfcSpec spec;
  std::vector<VnfInstance> instances;
  std::vector<Microseconds> tolerances;

  int server_count() const { return static_cast<int>(servers.size()); }
  int instance_count() const { return static_cast<int>(instances.size()); }
};

}  // namespace vnfp

#endif
