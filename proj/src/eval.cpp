#include "vnfp/eval.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "vnfp/dataset.hpp"
#include "vnfp/errors.hpp"
#include "vnfp/io_util.hpp"

namespace vnfp {

const char* to_string(InfeasiblePolicy p) {
  return p == InfeasiblePolicy::Repair ? "repair" : "exclude";
}

InfeasiblePolicy infeasible_policy_from_string(const std::string& s) {
  if (s == "repair") return InfeasiblePolicy::Repair;
  if (s == "exclude") return InfeasiblePolicy::Exclude;
  throw ConfigError("unknown infeasible policy: " + s);
}

namespace {

/// Residual capacity plus per-server type occupancy (anti-affinity).
struct Ledger {
  std::vector<Units> cpu_left;
  std::vector<Units> mem_left;
  std::vector<std::array<int, kVnfTypeCount>> typed;

  explicit Ledger(const NetworkTrial& trial) {
    cpu_left.reserve(trial.servers.size());
    mem_left.reserve(trial.servers.size());
    for (const auto& s : trial.servers) {
      cpu_left.push_back(s.cpu_capacity);
      mem_left.push_back(s.mem_capacity);
    }
    typed.assign(trial.servers.size(), {});
  }

  bool fits(const VnfInstance& inst, ServerId s) const {
    return cpu_left[static_cast<size_t>(s)] >= inst.cpu_req &&
           mem_left[static_cast<size_t>(s)] >= inst.mem_req &&
           typed[static_cast<size_t>(s)][static_cast<size_t>(inst.type)] == 0;
  }

  void take(const VnfInstance& inst, ServerId s) {
    cpu_left[static_cast<size_t>(s)] -= inst.cpu_req;
    mem_left[static_cast<size_t>(s)] -= inst.mem_req;
    ++typed[static_cast<size_t>(s)][static_cast<size_t>(inst.type)];
  }
};

void check_tree_matches(const NetworkTrial& trial, const DecisionTree& tree) {
  const int width = feature_width(trial.server_count(), trial.spec);
  if (tree.meta().width != width) {
    throw SchemaError("tree expects feature width " + std::to_string(tree.meta().width) +
                      ", trial produces " + std::to_string(width));
  }
  if (tree.meta().outputs != trial.instance_count()) {
    throw SchemaError("tree predicts " + std::to_string(tree.meta().outputs) +
                      " instances, trial has " + std::to_string(trial.instance_count()));
  }
  if (tree.meta().server_count > 0 && tree.meta().server_count != trial.server_count()) {
    throw SchemaError("tree was trained for " + std::to_string(tree.meta().server_count) +
                      " servers, trial has " + std::to_string(trial.server_count()));
  }
}

/// Per-instance adjacency over all dependent pairs (both directions).
std::vector<std::vector<InstanceId>> adjacency(const NetworkTrial& trial) {
  std::vector<std::vector<InstanceId>> adj(static_cast<size_t>(trial.instance_count()));
  for (const auto& pair : dependent_pairs(trial)) {
    adj[static_cast<size_t>(pair.from)].push_back(pair.to);
    adj[static_cast<size_t>(pair.to)].push_back(pair.from);
  }
  return adj;
}

std::vector<Microseconds> per_path_delays(const NetworkTrial& trial,
                                          const std::vector<ComputationalPath>& paths,
                                          const Placement& p) {
  std::vector<Microseconds> out;
  out.reserve(paths.size());
  for (const auto& path : paths) {
    Microseconds total = 0;
    for (size_t k = 0; k + 1 < path.instances.size(); ++k) {
      total += trial.delays.at(p.server_of(path.instances[k]),
                               p.server_of(path.instances[k + 1]));
    }
    out.push_back(total);
  }
  return out;
}

}  // namespace

std::optional<TreePlacementResult> tree_placement(const NetworkTrial& trial,
                                                  const DecisionTree& tree,
                                                  InfeasiblePolicy policy) {
  check_tree_matches(trial, tree);
  const std::vector<double> x = featurize(trial);
  TreePlacementResult result;
  result.placement.assignment = tree.predict(x);

  // accept predictions in instance-id order; anything that breaks range,
  // capacity, or anti-affinity is an offender
  Ledger ledger(trial);
  const int servers = trial.server_count();
  std::vector<InstanceId> offenders;
  std::vector<bool> placed(static_cast<size_t>(trial.instance_count()), false);
  for (const auto& inst : trial.instances) {
    const ServerId s = result.placement.server_of(inst.id);
    if (s >= 0 && s < servers && ledger.fits(inst, s)) {
      ledger.take(inst, s);
      placed[static_cast<size_t>(inst.id)] = true;
    } else {
      offenders.push_back(inst.id);
    }
  }
  if (offenders.empty()) return result;

  result.was_infeasible = true;
  if (policy == InfeasiblePolicy::Exclude) return std::nullopt;

  // repair: move each offender to the feasible server with the smallest
  // summed delay to its already-placed dependents, ties to the lowest id
  const auto adj = adjacency(trial);
  for (const InstanceId id : offenders) {
    const VnfInstance& inst = trial.instances[static_cast<size_t>(id)];
    ServerId best = -1;
    Microseconds best_delay = 0;
    for (ServerId s = 0; s < servers; ++s) {
      if (!ledger.fits(inst, s)) continue;
      Microseconds delay = 0;
      for (const InstanceId d : adj[static_cast<size_t>(id)]) {
        if (!placed[static_cast<size_t>(d)]) continue;
        delay += trial.delays.at(s, result.placement.server_of(d));
      }
      if (best < 0 || delay < best_delay) {
        best = s;
        best_delay = delay;
      }
    }
    if (best < 0) return std::nullopt;  // unrepairable
    result.placement.assignment[static_cast<size_t>(id)] = best;
    ledger.take(inst, best);
    placed[static_cast<size_t>(id)] = true;
    ++result.repaired;
  }
  return result;
}

ComparisonReport evaluate_methods(const std::vector<NetworkTrial>& trials,
                                  const DecisionTree& tree, const EvalOptions& opts) {
  ComparisonReport report;
  report.options = opts;

  for (int t = 0; t < static_cast<int>(trials.size()); ++t) {
    const NetworkTrial& trial = trials[static_cast<size_t>(t)];
    check_tree_matches(trial, tree);
    const auto paths = enumerate_paths(trial.spec, trial.instances);
    report.paths_per_trial = static_cast<int>(paths.size());

    const Placement heuristic = place_greedy(trial);
    const auto placed = tree_placement(trial, tree, opts.policy);
    if (!placed) {
      ++report.infeasible_tree_count;
      ++report.excluded_trials;
      continue;
    }
    if (placed->was_infeasible) ++report.infeasible_tree_count;
    report.repaired_instances += placed->repaired;

    const auto heuristic_paths = per_path_delays(trial, paths, heuristic);
    const auto tree_paths = per_path_delays(trial, paths, placed->placement);
    for (int p = 0; p < static_cast<int>(paths.size()); ++p) {
      report.path_delays.push_back({t, p, heuristic_paths[static_cast<size_t>(p)],
                                    tree_paths[static_cast<size_t>(p)]});
    }
    for (const auto& pair : dependent_pairs(trial)) {
      report.edge_delays.push_back(
          {t, pair.edge, pair.from, pair.to,
           trial.delays.at(heuristic.server_of(pair.from), heuristic.server_of(pair.to)),
           trial.delays.at(placed->placement.server_of(pair.from),
                           placed->placement.server_of(pair.to))});
    }
    ++report.trials_evaluated;
  }

  if (!report.path_delays.empty()) {
    report.diff_stats = delay_diff_distribution(report, opts.bin_width_us);
  } else {
    report.diff_stats.bin_width_us = opts.bin_width_us;
  }
  report.violations = count_violations(report, opts.threshold_us);
  return report;
}

DiffStats delay_diff_distribution(const ComparisonReport& report, double bin_width_us) {
  if (report.path_delays.empty()) throw ConfigError("report has no path delays");
  if (!(bin_width_us > 0.0)) throw ConfigError("bin width must be positive");

  DiffStats stats;
  stats.bin_width_us = bin_width_us;
  stats.count = static_cast<std::int64_t>(report.path_delays.size());

  double sum = 0.0;
  stats.min = std::numeric_limits<double>::infinity();
  stats.max = -std::numeric_limits<double>::infinity();
  std::map<std::int64_t, std::int64_t> bins;
  for (const auto& row : report.path_delays) {
    const double d = static_cast<double>(row.heuristic_us - row.tree_us);
    sum += d;
    stats.min = std::min(stats.min, d);
    stats.max = std::max(stats.max, d);
    ++bins[static_cast<std::int64_t>(std::floor(d / bin_width_us))];
  }
  stats.mean = sum / static_cast<double>(stats.count);
  double var = 0.0;
  for (const auto& row : report.path_delays) {
    const double d = static_cast<double>(row.heuristic_us - row.tree_us);
    var += (d - stats.mean) * (d - stats.mean);
  }
  stats.stddev = std::sqrt(var / static_cast<double>(stats.count));

  // contiguous bins, edges at integer multiples of the width
  const std::int64_t first = bins.begin()->first;
  const std::int64_t last = bins.rbegin()->first;
  for (std::int64_t i = first; i <= last; ++i) {
    const auto it = bins.find(i);
    stats.histogram.push_back({static_cast<double>(i) * bin_width_us,
                               static_cast<double>(i + 1) * bin_width_us,
                               it == bins.end() ? 0 : it->second});
  }
  return stats;
}

ViolationCounts count_violations(const ComparisonReport& report, Microseconds threshold_us) {
  ViolationCounts counts;
  for (const auto& row : report.path_delays) {
    if (row.heuristic_us > threshold_us) ++counts.heuristic;
    if (row.tree_us > threshold_us) ++counts.tree;
  }
  return counts;
}

namespace {

LatencyStats make_stats(std::vector<double> samples_ns) {
  LatencyStats stats;
  std::vector<double> sorted = samples_ns;
  std::sort(sorted.begin(), sorted.end());
  const size_t n = sorted.size();
  stats.median_ns = n % 2 == 1 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
  const size_t rank = static_cast<size_t>(std::ceil(0.95 * static_cast<double>(n)));
  stats.p95_ns = sorted[std::max<size_t>(rank, 1) - 1];
  double sum = 0.0;
  for (const double s : sorted) sum += s;
  stats.mean_ns = sum / static_cast<double>(n);
  stats.min_ns = sorted.front();
  stats.max_ns = sorted.back();
  stats.samples_ns = std::move(samples_ns);
  return stats;
}

double elapsed_ns(std::chrono::steady_clock::time_point t0,
                  std::chrono::steady_clock::time_point t1) {
  return static_cast<double>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
}

}  // namespace

LatencyReport bench_latency(const std::vector<NetworkTrial>& trials, const DecisionTree& tree,
                            const BenchOptions& opts) {
  if (trials.empty()) throw ConfigError("benchmark requires at least one trial");
  if (opts.warmup_runs < 0) throw ConfigError("warmup_runs must be >= 0");
  for (const auto& trial : trials) check_tree_matches(trial, tree);

  for (int w = 0; w < opts.warmup_runs; ++w) {
    const NetworkTrial& trial = trials[static_cast<size_t>(w) % trials.size()];
    (void)place_greedy(trial);
    (void)tree.predict(featurize(trial));
  }

  std::vector<double> heuristic_ns;
  std::vector<double> tree_ns;
  heuristic_ns.reserve(trials.size());
  tree_ns.reserve(trials.size());
  for (const auto& trial : trials) {
    auto t0 = std::chrono::steady_clock::now();
    const Placement p = place_greedy(trial);
    auto t1 = std::chrono::steady_clock::now();
    heuristic_ns.push_back(elapsed_ns(t0, t1));

    // the tree's decision path includes featurization
    t0 = std::chrono::steady_clock::now();
    const std::vector<double> x = featurize(trial);
    const std::vector<int> pred = tree.predict(x);
    t1 = std::chrono::steady_clock::now();
    tree_ns.push_back(elapsed_ns(t0, t1));

    if (p.assignment.empty() || pred.empty()) throw Error("benchmark produced no placement");
  }

  LatencyReport report;
  report.heuristic = make_stats(std::move(heuristic_ns));
  report.tree_query = make_stats(std::move(tree_ns));
  report.warmup_runs = opts.warmup_runs;
  return report;
}

void export_report_csv(const ComparisonReport& report, const std::filesystem::path& path) {
  std::string out = "trial,path,method,delay_us\n";
  char buf[96];
  for (const auto& row : report.path_delays) {
    std::snprintf(buf, sizeof(buf), "%d,%d,heuristic,%lld\n", row.trial, row.path,
                  static_cast<long long>(row.heuristic_us));
    out += buf;
    std::snprintf(buf, sizeof(buf), "%d,%d,tree,%lld\n", row.trial, row.path,
                  static_cast<long long>(row.tree_us));
    out += buf;
  }
  atomic_write(path, out);
}

nlohmann::json latency_to_json(const LatencyReport& report) {
  const auto stats_json = [](const LatencyStats& s) {
    return nlohmann::json{{"samples", s.samples_ns.size()}, {"median_ns", s.median_ns},
                          {"p95_ns", s.p95_ns},             {"mean_ns", s.mean_ns},
                          {"min_ns", s.min_ns},             {"max_ns", s.max_ns}};
  };
  nlohmann::json j{{"warmup_runs", report.warmup_runs},
                   {"heuristic", stats_json(report.heuristic)},
                   {"tree_query", stats_json(report.tree_query)}};
  j["training_ns"] = report.training_ns ? nlohmann::json(*report.training_ns)
                                        : nlohmann::json(nullptr);
  return j;
}

nlohmann::json report_summary_json(const ComparisonReport& report,
                                   const std::optional<LatencyReport>& latency) {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& bin : report.diff_stats.histogram) {
    hist.push_back({{"lo", bin.lo}, {"hi", bin.hi}, {"count", bin.count}});
  }
  nlohmann::json j{
      {"config",
       {{"threshold_us", report.options.threshold_us},
        {"infeasible_policy", to_string(report.options.policy)},
        {"bin_width_us", report.options.bin_width_us}}},
      {"paths_per_trial", report.paths_per_trial},
      {"trials_evaluated", report.trials_evaluated},
      {"infeasible_tree_count", report.infeasible_tree_count},
      {"excluded_trials", report.excluded_trials},
      {"repaired_instances", report.repaired_instances},
      {"diff_stats",
       {{"mean", report.diff_stats.mean},
        {"stddev", report.diff_stats.stddev},
        {"min", report.diff_stats.min},
        {"max", report.diff_stats.max},
        {"count", report.diff_stats.count},
        {"bin_width_us", report.diff_stats.bin_width_us},
        {"histogram", std::move(hist)}}},
      {"violations",
       {{"heuristic", report.violations.heuristic}, {"tree", report.violations.tree}}}};
  j["latency"] = latency ? latency_to_json(*latency) : nlohmann::json(nullptr);
  return j;
}

void export_report_json(const ComparisonReport& report, const std::filesystem::path& path,
                        const std::optional<LatencyReport>& latency) {
  atomic_write(path, report_summary_json(report, latency).dump(2) + "\n");
}

Scorer make_delay_gap_scorer(const TrialSource& source, InfeasiblePolicy policy) {
  return [source, policy](const DecisionTree& tree, const Dataset& data,
                          std::span<const int> rows) -> double {
    if (rows.empty()) throw ConfigError("scorer requires validation rows");
    double gap_sum = 0.0;
    std::int64_t paths_counted = 0;
    for (const int r : rows) {
      const NetworkTrial trial = source.trial(r);
      const auto features = featurize(trial);
      const auto stored = data.feature_row(r);
      if (!std::equal(features.begin(), features.end(), stored.begin(), stored.end())) {
        throw SchemaError("dataset row " + std::to_string(r) +
                          " does not match the trial source");
      }
      const auto placed = tree_placement(trial, tree, policy);
      if (!placed) continue;  // excluded trials contribute nothing

      Placement labeled;
      const auto labels = data.label_row(r);
      labeled.assignment.assign(labels.begin(), labels.end());

      const auto paths = enumerate_paths(trial.spec, trial.instances);
      const auto label_delays = per_path_delays(trial, paths, labeled);
      const auto tree_delays = per_path_delays(trial, paths, placed->placement);
      for (size_t p = 0; p < paths.size(); ++p) {
        gap_sum += static_cast<double>(tree_delays[p] - label_delays[p]);
      }
      paths_counted += static_cast<std::int64_t>(paths.size());
    }
    if (paths_counted == 0) throw ConfigError("every validation trial was excluded");
    return gap_sum / static_cast<double>(paths_counted);
  };
}

}  // namespace vnfp
