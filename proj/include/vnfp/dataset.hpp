#ifndef VNFP_DATASET_HPP
#define VNFP_DATASET_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vnfp/oracle.hpp"
#include "vnfp/trial.hpp"

namespace vnfp {

/// Per-type sampling ranges for instance requirements plus the per-edge
/// tolerance range.
struct RequirementRanges {
  std::array<IntRange, kVnfTypeCount> cpu_req;
  std::array<IntRange, kVnfTypeCount> mem_req;
  IntRange tolerance_us{800, 2500};

  RequirementRanges() {
    cpu_req.fill(IntRange{1, 6});
    mem_req.fill(IntRange{2, 12});
  }
  void validate() const;
};

inline constexpr const char* kDatasetVersion = "1";
inline constexpr int kDefaultRetryBudget = 100;

/// One randomized, oracle-feasible trial. Infeasible samples are redrawn from
/// the same stream, up to `retry_budget` times; then Error("generation failed").
NetworkTrial generate_trial(const TopologyConfig& topo, const SfcSpec& spec,
                            const RequirementRanges& reqs, Rng& rng,
                            int retry_budget = kDefaultRetryBudget);

/// Regenerates trial i deterministically from (master_seed, i).
class TrialSource {
 public:
  TrialSource(TopologyConfig topo, SfcSpec spec, RequirementRanges reqs,
              std::uint64_t master_seed);

  NetworkTrial trial(int index) const;
  const TopologyConfig& topology_config() const { return topo_; }
  const SfcSpec& spec() const { return spec_; }
  const RequirementRanges& requirements() const { return reqs_; }
  std::uint64_t master_seed() const { return master_seed_; }

 private:
  TopologyConfig topo_;
  SfcSpec spec_;
  RequirementRanges reqs_;
  std::uint64_t master_seed_ = 0;
};

struct DatasetMeta {
  std::string version = kDatasetVersion;
  int server_count = 0;
  int n_trials = 0;
  std::uint64_t master_seed = 0;
  SfcSpec spec;
  TopologyConfig topology;
  RequirementRanges requirements;
};

/// Flattened feature matrix (N x W, row-major) with multi-output labels
/// (N x I, one server id per instance).
struct Dataset {
  int width = 0;    // W
  int outputs = 0;  // I
  std::vector<double> features;
  std::vector<int> labels;
  DatasetMeta meta;

  int rows() const {
    return width == 0 ? 0 : static_cast<int>(features.size()) / width;
  }
  std::span<const double> feature_row(int r) const {
    return {features.data() + static_cast<size_t>(r) * width, static_cast<size_t>(width)};
  }
  std::span<const int> label_row(int r) const {
    return {labels.data() + static_cast<size_t>(r) * outputs, static_cast<size_t>(outputs)};
  }
};

/// Feature width W = 2S + S(S-1)/2 + 2I + E + I for the fixed layout; see featurize.
int feature_width(int server_count, const SfcSpec& spec);

/// Fixed feature layout, in order:
///   per-server cpu capacities (S), per-server mem capacities (S),
///   upper-triangle delays row-major (S(S-1)/2),
///   per-instance [cpu_req, mem_req] interleaved (2I),
///   per-edge tolerance (E),
///   per-instance type index (I).
std::vector<double> featurize(const NetworkTrial& trial);

/// Labels in instance-id order.
std::vector<int> labelize(const Placement& p);

struct BuildOptions {
  int threads = 1;
  int retry_budget = kDefaultRetryBudget;
};

/// n_trials rows; row i comes from the child seed of (master_seed, i) and is
/// labeled with place_greedy. Deterministic for any thread count.
Dataset build_dataset(int n_trials, const TopologyConfig& topo, const SfcSpec& spec,
                      const RequirementRanges& reqs, std::uint64_t master_seed,
                      const BuildOptions& opts = {});

/// Trials matching build_dataset's rows, in index order.
std::vector<NetworkTrial> generate_trials(int n, const TrialSource& source, int threads = 1);

/// CSV (header f0..f{W-1},y0..y{I-1}; %.6f features, integer labels) plus a
/// `<stem>.meta.json` sidecar. Written atomically.
void save_dataset(const Dataset& d, const std::filesystem::path& csv_path);

/// Throws SchemaError when the CSV disagrees with its sidecar metadata.
Dataset load_dataset(const std::filesystem::path& csv_path);

void to_json(nlohmann::json& j, const RequirementRanges& r);
void from_json(const nlohmann::json& j, RequirementRanges& r);
void to_json(nlohmann::json& j, const DatasetMeta& m);
void from_json(const nlohmann::json& j, DatasetMeta& m);

}  // namespace vnfp

#endif
