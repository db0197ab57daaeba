#ifndef VNFP_ORACLE_HPP
#define VNFP_ORACLE_HPP

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vnfp/trial.hpp"

namespace vnfp {

/// Assignment of every VNF instance to a server, indexed by instance id.
struct Placement {
  std::vector<ServerId> assignment;

  ServerId server_of(InstanceId i) const { return assignment[static_cast<size_t>(i)]; }
  bool operator==(const Placement&) const = default;
};

struct PlacementScore {
  /// Delay for every dependent instance pair (all replica pairs per chain edge).
  std::map<std::pair<InstanceId, InstanceId>, Microseconds> edge_delays;
  Microseconds total = 0;
  int tolerance_violations = 0;
};

/// Delay-greedy placement. Chain edges are processed in order: the first
/// edge places the feasible server pair with the smallest delay over all of
/// its instance pairs (co-location allowed, the diagonal is zero; ties to
/// the earliest candidate in (instance pair, sa, sb) ascending scan order),
/// then every later instance takes the feasible server minimizing the summed
/// delay to its already-placed dependents, ties to the lowest server id.
/// Capacity is decremented as instances are placed. Deterministic.
/// Throws InfeasibleError.
Placement place_greedy(const NetworkTrial& trial);

/// Exhaustive minimum-total-delay placement over all feasible assignments,
/// ties broken by lexicographically smallest assignment vector. Throws
/// BudgetError once more than `candidate_budget` partial assignments have
/// been explored, InfeasibleError when nothing is feasible.
Placement place_exhaustive(const NetworkTrial& trial,
                           std::uint64_t candidate_budget = 10'000'000);

/// Edge delays, their sum, and tolerance violations for a total placement.
PlacementScore score_placement(const NetworkTrial& trial, const Placement& p);

/// All violated placement invariants (totality, server range, capacity,
/// same-type anti-affinity), one message each. Empty iff the placement is valid.
std::vector<std::string> placement_violations(const NetworkTrial& trial, const Placement& p);

/// Dependent instance pairs (a, b), one per chain edge and replica pair,
/// in chain-edge order. Each pair carries its edge index.
struct DependentPair {
  int edge = 0;
  InstanceId from = 0;
  InstanceId to = 0;
};
std::vector<DependentPair> dependent_pairs(const NetworkTrial& trial);

void to_json(nlohmann::json& j, const Placement& p);
void from_json(const nlohmann::json& j, Placement& p);

}  // namespace vnfp

#endif
