#include "vnfp/oracle.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <optional>

#include "vnfp/errors.hpp"

namespace vnfp {

namespace {

struct CapacityLedger {
  std::vector<Units> cpu_left;
  std::vector<Units> mem_left;
  // per server, which types already host an instance there
  std::vector<std::array<bool, kVnfTypeCount>> type_used;

  explicit CapacityLedger(const NetworkTrial& trial) {
    const int n = trial.server_count();
    cpu_left.resize(static_cast<size_t>(n));
    mem_left.resize(static_cast<size_t>(n));
    type_used.assign(static_cast<size_t>(n), {});
    for (int s = 0; s < n; ++s) {
      cpu_left[static_cast<size_t>(s)] = trial.servers[static_cast<size_t>(s)].cpu_capacity;
      mem_left[static_cast<size_t>(s)] = trial.servers[static_cast<size_t>(s)].mem_capacity;
    }
  }

  bool fits(const VnfInstance& inst, ServerId s) const {
    return cpu_left[static_cast<size_t>(s)] >= inst.cpu_req &&
           mem_left[static_cast<size_t>(s)] >= inst.mem_req &&
           !type_used[static_cast<size_t>(s)][static_cast<size_t>(inst.type)];
  }

  void take(const VnfInstance& inst, ServerId s) {
    cpu_left[static_cast<size_t>(s)] -= inst.cpu_req;
    mem_left[static_cast<size_t>(s)] -= inst.mem_req;
    type_used[static_cast<size_t>(s)][static_cast<size_t>(inst.type)] = true;
  }

  void release(const VnfInstance& inst, ServerId s) {
    cpu_left[static_cast<size_t>(s)] += inst.cpu_req;
    mem_left[static_cast<size_t>(s)] += inst.mem_req;
    type_used[static_cast<size_t>(s)][static_cast<size_t>(inst.type)] = false;
  }
};

std::vector<InstanceId> instances_of_type(const NetworkTrial& trial, VnfType t) {
  std::vector<InstanceId> out;
  for (const auto& inst : trial.instances) {
    if (inst.type == t) out.push_back(inst.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

const VnfInstance& instance_by_id(const NetworkTrial& trial, InstanceId id) {
  for (const auto& inst : trial.instances) {
    if (inst.id == id) return inst;
  }
  throw ConfigError("unknown instance id");
}

// Feasible server minimizing the summed delay to the given anchors; ties to
// the lowest server id. Returns -1 when nothing fits.
ServerId best_server_for(const NetworkTrial& trial, const CapacityLedger& ledger,
                         const VnfInstance& inst, const std::vector<ServerId>& anchors) {
  ServerId best = -1;
  Microseconds best_sum = std::numeric_limits<Microseconds>::max();
  for (int s = 0; s < trial.server_count(); ++s) {
    if (!ledger.fits(inst, s)) continue;
    Microseconds sum = 0;
    for (ServerId a : anchors) sum += trial.delays.at(s, a);
    if (sum < best_sum) {
      best_sum = sum;
      best = s;
    }
  }
  return best;
}

}  // namespace

std::vector<DependentPair> dependent_pairs(const NetworkTrial& trial) {
  std::vector<DependentPair> pairs;
  for (size_t e = 0; e < trial.spec.chain.size(); ++e) {
    const auto froms = instances_of_type(trial, trial.spec.chain[e].from);
    const auto tos = instances_of_type(trial, trial.spec.chain[e].to);
    for (InstanceId a : froms) {
      for (InstanceId b : tos) {
        pairs.push_back({static_cast<int>(e), a, b});
      }
    }
  }
  return pairs;
}

Placement place_greedy(const NetworkTrial& trial) {
  trial.spec.validate();
  const int instance_count = trial.instance_count();
  const int server_count = trial.server_count();

  // First chain edge: pick the feasible server pair with the smallest delay
  // over every instance pair of that edge. Co-location is allowed (the
  // diagonal is zero, different types never clash on anti-affinity) but must
  // fit both requirement sets jointly. Ties go to the earliest candidate in
  // (instance pair, sa, sb) ascending scan order.
  const auto froms0 = instances_of_type(trial, trial.spec.chain.front().from);
  const auto tos0 = instances_of_type(trial, trial.spec.chain.front().to);
  Microseconds best_d = 0;
  InstanceId seed_a = -1, seed_b = -1;
  ServerId seed_sa = -1, seed_sb = -1;
  for (InstanceId a : froms0) {
    const VnfInstance& ia = instance_by_id(trial, a);
    for (InstanceId b : tos0) {
      const VnfInstance& ib = instance_by_id(trial, b);
      CapacityLedger probe(trial);
      for (int sa = 0; sa < server_count; ++sa) {
        if (!probe.fits(ia, sa)) continue;
        CapacityLedger with_a(trial);
        with_a.take(ia, sa);
        for (int sb = 0; sb < server_count; ++sb) {
          if (!with_a.fits(ib, sb)) continue;
          const Microseconds d = trial.delays.at(sa, sb);
          if (seed_a < 0 || d < best_d) {
            best_d = d;
            seed_a = a;
            seed_b = b;
            seed_sa = sa;
            seed_sb = sb;
          }
        }
      }
    }
  }
  if (seed_a < 0) throw InfeasibleError("no feasible server pair for the first chain edge");

  CapacityLedger ledger(trial);
  std::vector<ServerId> assignment(static_cast<size_t>(instance_count), -1);
  assignment[static_cast<size_t>(seed_a)] = seed_sa;
  ledger.take(instance_by_id(trial, seed_a), seed_sa);
  assignment[static_cast<size_t>(seed_b)] = seed_sb;
  ledger.take(instance_by_id(trial, seed_b), seed_sb);

  // Every later instance takes the feasible server minimizing the summed
  // delay to its already-placed dependents, ties to the lowest server id.
  auto chase = [&](InstanceId id, const std::vector<InstanceId>& dependents) -> bool {
    std::vector<ServerId> anchors;
    for (InstanceId d : dependents) {
      if (assignment[static_cast<size_t>(d)] >= 0) anchors.push_back(assignment[static_cast<size_t>(d)]);
    }
    const VnfInstance& inst = instance_by_id(trial, id);
    const ServerId s = best_server_for(trial, ledger, inst, anchors);
    if (s < 0) return false;
    assignment[static_cast<size_t>(id)] = s;
    ledger.take(inst, s);
    return true;
  };

  for (size_t e = 0; e < trial.spec.chain.size(); ++e) {
    const auto froms = instances_of_type(trial, trial.spec.chain[e].from);
    const auto tos = instances_of_type(trial, trial.spec.chain[e].to);
    if (e == 0) {
      // remaining replicas of the seeded types, in id order
      for (InstanceId id : froms) {
        if (assignment[static_cast<size_t>(id)] < 0 && !chase(id, tos)) {
          throw InfeasibleError("no feasible server for instance");
        }
      }
      for (InstanceId id : tos) {
        if (assignment[static_cast<size_t>(id)] < 0 && !chase(id, froms)) {
          throw InfeasibleError("no feasible server for instance");
        }
      }
    } else {
      // from_type was placed by the previous edge; each new instance chases
      // the summed delay to all its dependents
      for (InstanceId id : tos) {
        if (!chase(id, froms)) throw InfeasibleError("no feasible server for instance");
      }
    }
  }
  return Placement{std::move(assignment)};
}

Placement place_exhaustive(const NetworkTrial& trial, std::uint64_t candidate_budget) {
  trial.spec.validate();
  const int instance_count = trial.instance_count();
  const int server_count = trial.server_count();

  // dependency adjacency among instances, by id
  const auto pairs = dependent_pairs(trial);
  std::vector<std::vector<InstanceId>> deps(static_cast<size_t>(instance_count));
  for (const auto& p : pairs) {
    deps[static_cast<size_t>(p.from)].push_back(p.to);
    deps[static_cast<size_t>(p.to)].push_back(p.from);
  }

  CapacityLedger ledger(trial);
  std::vector<ServerId> current(static_cast<size_t>(instance_count), -1);
  std::vector<ServerId> best;
  Microseconds best_total = std::numeric_limits<Microseconds>::max();
  std::uint64_t explored = 0;

  // depth-first in instance-id order, servers ascending: assignments are
  // visited lexicographically, so the first strict improvement is also the
  // lexicographically smallest optimum
  auto dfs = [&](auto&& self, int id, Microseconds partial) -> void {
    if (id == instance_count) {
      if (partial < best_total) {
        best_total = partial;
        best = current;
      }
      return;
    }
    const VnfInstance& inst = instance_by_id(trial, id);
    for (int s = 0; s < server_count; ++s) {
      if (!ledger.fits(inst, s)) continue;
      if (++explored > candidate_budget) {
        throw BudgetError("exhaustive search exceeded its candidate budget");
      }
      Microseconds added = 0;
      for (InstanceId d : deps[static_cast<size_t>(id)]) {
        if (d < id) added += trial.delays.at(s, current[static_cast<size_t>(d)]);
      }
      const Microseconds next_partial = partial + added;
      if (next_partial >= best_total) continue;  // delays are nonnegative
      current[static_cast<size_t>(id)] = s;
      ledger.take(inst, s);
      self(self, id + 1, next_partial);
      ledger.release(inst, s);
      current[static_cast<size_t>(id)] = -1;
    }
  };
  dfs(dfs, 0, 0);

  if (best.empty()) throw InfeasibleError("no feasible placement exists");
  return Placement{std::move(best)};
}

PlacementScore score_placement(const NetworkTrial& trial, const Placement& p) {
  const int instance_count = trial.instance_count();
  if (static_cast<int>(p.assignment.size()) != instance_count) {
    throw ConfigError("placement size does not match instance count");
  }
  for (int i = 0; i < instance_count; ++i) {
    if (p.assignment[static_cast<size_t>(i)] < 0 ||
        p.assignment[static_cast<size_t>(i)] >= trial.server_count()) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "instance %d is unassigned or out of range", i);
      throw ConfigError(buf);
    }
  }

  PlacementScore score;
  for (const auto& pair : dependent_pairs(trial)) {
    const Microseconds d =
        trial.delays.at(p.server_of(pair.from), p.server_of(pair.to));
    score.edge_delays[{pair.from, pair.to}] = d;
    score.total += d;
    if (d > trial.tolerances[static_cast<size_t>(pair.edge)]) ++score.tolerance_violations;
  }
  return score;
}

std::vector<std::string> placement_violations(const NetworkTrial& trial, const Placement& p) {
  std::vector<std::string> out;
  char buf[128];
  const int instance_count = trial.instance_count();
  if (static_cast<int>(p.assignment.size()) != instance_count) {
    out.push_back("assignment length does not match instance count");
    return out;
  }

  std::vector<Units> cpu_used(static_cast<size_t>(trial.server_count()), 0);
  std::vector<Units> mem_used(static_cast<size_t>(trial.server_count()), 0);
  std::vector<std::array<int, kVnfTypeCount>> type_count(
      static_cast<size_t>(trial.server_count()), std::array<int, kVnfTypeCount>{});

  for (const auto& inst : trial.instances) {
    const ServerId s = p.assignment[static_cast<size_t>(inst.id)];
    if (s < 0 || s >= trial.server_count()) {
      std::snprintf(buf, sizeof(buf), "instance %d assigned to invalid server %d", inst.id, s);
      out.push_back(buf);
      continue;
    }
    cpu_used[static_cast<size_t>(s)] += inst.cpu_req;
    mem_used[static_cast<size_t>(s)] += inst.mem_req;
    ++type_count[static_cast<size_t>(s)][static_cast<size_t>(inst.type)];
  }

  for (int s = 0; s < trial.server_count(); ++s) {
    const auto& spec = trial.servers[static_cast<size_t>(s)];
    if (cpu_used[static_cast<size_t>(s)] > spec.cpu_capacity) {
      std::snprintf(buf, sizeof(buf), "server %d cpu over capacity (%lld > %lld)", s,
                    static_cast<long long>(cpu_used[static_cast<size_t>(s)]),
                    static_cast<long long>(spec.cpu_capacity));
      out.push_back(buf);
    }
    if (mem_used[static_cast<size_t>(s)] > spec.mem_capacity) {
      std::snprintf(buf, sizeof(buf), "server %d mem over capacity (%lld > %lld)", s,
                    static_cast<long long>(mem_used[static_cast<size_t>(s)]),
                    static_cast<long long>(spec.mem_capacity));
      out.push_back(buf);
    }
    for (int t = 0; t < kVnfTypeCount; ++t) {
      if (type_count[static_cast<size_t>(s)][static_cast<size_t>(t)] > 1) {
        std::snprintf(buf, sizeof(buf), "server %d hosts %d replicas of %s", s,
                      type_count[static_cast<size_t>(s)][static_cast<size_t>(t)],
                      to_string(static_cast<VnfType>(t)));
        out.push_back(buf);
      }
    }
  }
  return out;
}

void to_json(nlohmann::json& j, const Placement& p) {
  nlohmann::json assignment = nlohmann::json::object();
  for (size_t i = 0; i < p.assignment.size(); ++i) {
    assignment[std::to_string(i)] = p.assignment[i];
  }
  j = nlohmann::json{{"assignment", std::move(assignment)}};
}

void from_json(const nlohmann::json& j, Placement& p) {
  const auto& assignment = j.at("assignment");
  p.assignment.assign(assignment.size(), -1);
  for (const auto& [key, value] : assignment.items()) {
    const size_t idx = std::stoul(key);
    if (idx >= p.assignment.size()) throw SchemaError("instance id out of range in placement");
    p.assignment[idx] = value.get<ServerId>();
  }
}

}  // namespace vnfp
