#ifndef VNFP_EVAL_HPP
#define VNFP_EVAL_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vnfp/cart.hpp"
#include "vnfp/oracle.hpp"

namespace vnfp {

enum class InfeasiblePolicy { Repair, Exclude };

const char* to_string(InfeasiblePolicy p);
InfeasiblePolicy infeasible_policy_from_string(const std::string& s);

struct EvalOptions {
  Microseconds threshold_us = 2000;
  InfeasiblePolicy policy = InfeasiblePolicy::Repair;
  double bin_width_us = 50.0;
};

struct PathDelays {
  int trial = 0;
  int path = 0;
  Microseconds heuristic_us = 0;
  Microseconds tree_us = 0;
};

struct EdgeDelays {
  int trial = 0;
  int edge = 0;
  InstanceId from_instance = 0;
  InstanceId to_instance = 0;
  Microseconds heuristic_us = 0;
  Microseconds tree_us = 0;
};

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::int64_t count = 0;
};

/// Moments and fixed-width histogram of per-path (heuristic - tree) delay
/// differences; positive mass means the tree's path was faster.
struct DiffStats {
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::int64_t count = 0;
  double bin_width_us = 50.0;
  std::vector<HistogramBin> histogram;  // bin edges at integer multiples of the width
};

struct ViolationCounts {
  std::int64_t heuristic = 0;
  std::int64_t tree = 0;
};

struct ComparisonReport {
  EvalOptions options;
  int paths_per_trial = 0;
  int trials_evaluated = 0;      // trials contributing delay rows
  int infeasible_tree_count = 0; // trials whose raw tree prediction broke an invariant
  int excluded_trials = 0;       // dropped from delay stats (Exclude policy or failed repair)
  int repaired_instances = 0;
  std::vector<PathDelays> path_delays;
  std::vector<EdgeDelays> edge_delays;
  DiffStats diff_stats;
  ViolationCounts violations;    // per-path, at options.threshold_us
};

/// Places every trial with both the greedy heuristic and the tree, recording
/// per-edge and per-path delays. Infeasible tree predictions are repaired
/// (offending instances moved to the nearest feasible server by summed delay
/// to dependents) or excluded, per options.policy.
ComparisonReport evaluate_methods(const std::vector<NetworkTrial>& trials,
                                  const DecisionTree& tree, const EvalOptions& opts = {});

/// Recomputes the difference distribution at a chosen bin width.
/// Throws ConfigError on an empty report.
DiffStats delay_diff_distribution(const ComparisonReport& report, double bin_width_us = 50.0);

/// Paths exceeding the threshold, per method.
ViolationCounts count_violations(const ComparisonReport& report, Microseconds threshold_us);

/// Tree placement for one trial: featurize, predict, then apply the
/// feasibility policy. Returns nullopt when the trial must be excluded.
struct TreePlacementResult {
  Placement placement;
  bool was_infeasible = false;
  int repaired = 0;
};
std::optional<TreePlacementResult> tree_placement(const NetworkTrial& trial,
                                                  const DecisionTree& tree,
                                                  InfeasiblePolicy policy);

struct LatencyStats {
  std::vector<double> samples_ns;
  double median_ns = 0.0;
  double p95_ns = 0.0;
  double mean_ns = 0.0;
  double min_ns = 0.0;
  double max_ns = 0.0;
};

struct LatencyReport {
  LatencyStats heuristic;
  LatencyStats tree_query;  // featurize + predict, the full decision path
  std::optional<double> training_ns;
  int warmup_runs = 0;
};

struct BenchOptions {
  int warmup_runs = 10;
};

/// Wall-clock per-decision timings over the trial set, after warmup.
/// Throws ConfigError on an empty trial list.
LatencyReport bench_latency(const std::vector<NetworkTrial>& trials, const DecisionTree& tree,
                            const BenchOptions& opts = {});

/// Long-format CSV: trial,path,method,delay_us ("heuristic"/"tree" rows).
void export_report_csv(const ComparisonReport& report, const std::filesystem::path& path);

/// Summary JSON: config, diff stats, violations, infeasibility counters, and
/// optionally latency.
void export_report_json(const ComparisonReport& report, const std::filesystem::path& path,
                        const std::optional<LatencyReport>& latency = std::nullopt);

/// CV cost: mean per-path delay gap (tree - labeled placement) in microseconds
/// over the validation rows, trials regenerated from the source.
Scorer make_delay_gap_scorer(const TrialSource& source,
                             InfeasiblePolicy policy = InfeasiblePolicy::Repair);

nlohmann::json report_summary_json(const ComparisonReport& report,
                                   const std::optional<LatencyReport>& latency = std::nullopt);
nlohmann::json latency_to_json(const LatencyReport& report);

}  // namespace vnfp

#endif
