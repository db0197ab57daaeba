#ifndef VNFP_CART_HPP
#define VNFP_CART_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vnfp/dataset.hpp"

namespace vnfp {

enum class Criterion { Gini, Entropy };

const char* to_string(Criterion c);
Criterion criterion_from_string(const std::string& s);

inline constexpr int kUnlimited = -1;

/// Gain below this is treated as no improvement; splits must beat it.
inline constexpr double kMinGain = 1e-12;

struct Hyperparams {
  int max_depth = 24;             // kUnlimited disables the cap; 0 forces a root leaf
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  int max_features = kUnlimited;  // per-node feature subsample size; kUnlimited = all
  Criterion criterion = Criterion::Gini;
  std::uint64_t seed = 0;         // drives max_features subsampling and CV shuffling

  void validate(int width) const;
  bool operator==(const Hyperparams&) const = default;
};

/// Mean Gini impurity of integer class counts: 1 - sum(c^2)/n^2.
/// Throws ConfigError on an empty node (total count 0).
double gini(std::span<const int> counts);

/// Shannon entropy in bits: -sum(p log2 p), 0*log0 = 0.
double entropy(std::span<const int> counts);

/// Arithmetic mean of per-output impurities over the dataset rows.
double multi_output_impurity(const Dataset& data, std::span<const int> rows, Criterion c);

struct SplitCandidate {
  int feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

/// Best (feature, midpoint threshold) split of `rows` among `features`,
/// minimizing the sample-weighted mean child impurity. Candidates are
/// midpoints between consecutive distinct sorted values; both children must
/// hold at least min_samples_leaf rows; gain must exceed kMinGain. Ties break
/// to the lower feature index, then the lower threshold.
std::optional<SplitCandidate> best_split(const Dataset& data, std::span<const int> rows,
                                         std::span<const int> features, Criterion c,
                                         int min_samples_leaf = 1);

struct TreeNode {
  // internal node
  int feature = -1;
  double threshold = 0.0;
  std::unique_ptr<TreeNode> left;
  std::unique_ptr<TreeNode> right;
  // leaf payload
  std::vector<int> leaf_labels;                 // per-output majority
  std::vector<std::map<int, int>> histograms;   // per output: class -> count
  int sample_count = 0;

  bool is_leaf() const { return left == nullptr; }
};

struct TreeMeta {
  int width = 0;
  int outputs = 0;
  int server_count = 0;
  std::string fingerprint;  // training dataset identity (seed/rows), informational
};

class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(std::unique_ptr<TreeNode> root, Hyperparams params, TreeMeta meta)
      : root_(std::move(root)), params_(params), meta_(meta) {}

  bool trained() const { return root_ != nullptr; }
  const TreeNode& root() const { return *root_; }
  const Hyperparams& params() const { return params_; }
  const TreeMeta& meta() const { return meta_; }

  /// Root-to-leaf descent; left iff value <= threshold.
  /// Throws SchemaError when x.size() != meta().width.
  std::vector<int> predict(std::span<const double> x) const;

  /// Nodes visited by predict(x), leaf included.
  int node_visits(std::span<const double> x) const;

  int depth() const;
  int leaf_count() const;

 private:
  std::unique_ptr<TreeNode> root_;
  Hyperparams params_;
  TreeMeta meta_;
};

/// Grows a CART tree on the dataset: recursive best_split with per-output
/// majority leaves. Deterministic given (data, h).
DecisionTree fit(const Dataset& data, const Hyperparams& h);

/// k-nearest-neighbour baseline: Euclidean distance over raw features,
/// per-output majority among the k closest rows. Distance ties break to the
/// lower row index, majority ties to the lower label.
std::vector<int> knn_predict(const Dataset& data, std::span<const double> x, int k);

/// Cost of a tree on validation rows; lower is better.
using Scorer = std::function<double(const DecisionTree&, const Dataset&,
                                    std::span<const int> validation_rows)>;

/// Per-output misclassification rate averaged over outputs.
Scorer misclassification_scorer();

struct CvReport {
  std::vector<double> fold_scores;
  double mean = 0.0;
  double stddev = 0.0;  // population
};

/// Seeded-shuffle k-fold CV: contiguous folds of size floor(N/k) with the
/// remainder spread over the first folds; the shuffle derives from h.seed.
CvReport cross_validate(const Dataset& data, const Hyperparams& h, int k,
                        const Scorer& scorer, int threads = 1);

struct ObjectiveSpec {
  std::vector<std::string> names;
  std::vector<Scorer> scorers;
  std::vector<double> weights;  // nonnegative, summing to 1

  void validate() const;
};

/// P(h): per-fold weighted sum of objective costs, averaged over folds.
/// `per_objective_fold_scores[j][i]` is objective j's cost on fold i.
double consolidated_objective(const ObjectiveSpec& spec,
                              const std::vector<std::vector<double>>& per_objective_fold_scores);

struct GridPoint {
  Hyperparams params;
  double objective = 0.0;
  std::vector<double> per_objective_means;
};

struct GridResult {
  Hyperparams best;
  std::vector<GridPoint> all;
};

/// Evaluates P(h) for every grid point via k-fold CV; argmin, ties to grid order.
GridResult grid_search(const Dataset& data, const std::vector<Hyperparams>& grid,
                       const ObjectiveSpec& spec, int k, int threads = 1);

inline constexpr const char* kModelVersion = "1";

nlohmann::json tree_to_json(const DecisionTree& tree);
DecisionTree tree_from_json(const nlohmann::json& j);

/// JSON round-trip preserving topology, full-precision thresholds, leaf
/// labels, hyperparams, and metadata. Written atomically.
void save_model(const DecisionTree& tree, const std::filesystem::path& path);
DecisionTree load_model(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const Hyperparams& h);
void from_json(const nlohmann::json& j, Hyperparams& h);

}  // namespace vnfp

#endif
