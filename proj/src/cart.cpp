#include "vnfp/cart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numeric>

#include "vnfp/errors.hpp"
#include "vnfp/io_util.hpp"
#include "vnfp/rng.hpp"

namespace vnfp {

namespace {

// Independent child streams of Hyperparams::seed.
constexpr std::uint64_t kFeatureStream = 0;
constexpr std::uint64_t kShuffleStream = 1;

// The two impurity expressions, written once. best_split re-evaluates them from
// incrementally maintained integer counts, so a split's gain is bit-identical
// to the one recomputed from scratch on the same row partition.
double gini_from(std::int64_t sumsq, std::int64_t total) {
  const double n = static_cast<double>(total);
  return 1.0 - static_cast<double>(sumsq) / (n * n);
}

double entropy_from(std::span<const int> counts, std::int64_t total) {
  const double n = static_cast<double>(total);
  double h = 0.0;
  for (const int c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

std::int64_t checked_total(std::span<const int> counts) {
  std::int64_t total = 0;
  for (const int c : counts) {
    if (c < 0) throw ConfigError("class counts must be nonnegative");
    total += c;
  }
  if (total == 0) throw ConfigError("impurity of an empty node");
  return total;
}

}  // namespace

const char* to_string(Criterion c) {
  return c == Criterion::Gini ? "gini" : "entropy";
}

Criterion criterion_from_string(const std::string& s) {
  if (s == "gini") return Criterion::Gini;
  if (s == "entropy") return Criterion::Entropy;
  throw ConfigError("unknown criterion: " + s);
}

void Hyperparams::validate(int width) const {
  if (max_depth != kUnlimited && max_depth < 0) {
    throw ConfigError("max_depth must be >= 0 or unlimited");
  }
  if (min_samples_split < 2) throw ConfigError("min_samples_split must be >= 2");
  if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
  if (max_features != kUnlimited) {
    if (max_features < 1) throw ConfigError("max_features must be >= 1 or unlimited");
    if (width > 0 && max_features > width) {
      throw ConfigError("max_features exceeds the feature width");
    }
  }
}

double gini(std::span<const int> counts) {
  const std::int64_t total = checked_total(counts);
  std::int64_t sumsq = 0;
  for (const int c : counts) sumsq += static_cast<std::int64_t>(c) * c;
  return gini_from(sumsq, total);
}

double entropy(std::span<const int> counts) {
  const std::int64_t total = checked_total(counts);
  return entropy_from(counts, total);
}

double multi_output_impurity(const Dataset& data, std::span<const int> rows, Criterion c) {
  if (rows.empty()) throw ConfigError("impurity of an empty node");
  if (data.outputs < 1) throw ConfigError("dataset has no outputs");
  double acc = 0.0;
  std::map<int, int> counts;
  std::vector<int> flat;
  for (int j = 0; j < data.outputs; ++j) {
    counts.clear();
    for (const int r : rows) ++counts[data.label_row(r)[static_cast<size_t>(j)]];
    flat.clear();
    for (const auto& [label, n] : counts) flat.push_back(n);
    acc += c == Criterion::Gini ? gini(flat) : entropy(flat);
  }
  return acc / static_cast<double>(data.outputs);
}

std::optional<SplitCandidate> best_split(const Dataset& data, std::span<const int> rows,
                                         std::span<const int> features, Criterion criterion,
                                         int min_samples_leaf) {
  if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
  const int n = static_cast<int>(rows.size());
  if (n < 2 || features.empty()) return std::nullopt;
  const int outputs = data.outputs;
  if (outputs < 1) throw ConfigError("dataset has no outputs");

  // Compact per-output label ids (ascending label order preserved) so class
  // counts live in dense arrays.
  std::vector<std::vector<int>> uniq(static_cast<size_t>(outputs));
  std::vector<std::vector<int>> compact(static_cast<size_t>(outputs),
                                        std::vector<int>(static_cast<size_t>(n)));
  std::vector<std::vector<int>> total_counts(static_cast<size_t>(outputs));
  std::vector<std::int64_t> total_sumsq(static_cast<size_t>(outputs), 0);
  for (int j = 0; j < outputs; ++j) {
    auto& u = uniq[static_cast<size_t>(j)];
    u.reserve(static_cast<size_t>(n));
    for (const int r : rows) u.push_back(data.label_row(r)[static_cast<size_t>(j)]);
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    auto& cnt = total_counts[static_cast<size_t>(j)];
    cnt.assign(u.size(), 0);
    for (int p = 0; p < n; ++p) {
      const int label = data.label_row(rows[static_cast<size_t>(p)])[static_cast<size_t>(j)];
      const int id = static_cast<int>(std::lower_bound(u.begin(), u.end(), label) - u.begin());
      compact[static_cast<size_t>(j)][static_cast<size_t>(p)] = id;
      ++cnt[static_cast<size_t>(id)];
    }
    for (const int c : cnt) total_sumsq[static_cast<size_t>(j)] += static_cast<std::int64_t>(c) * c;
  }

  // Parent impurity, same expression shape as multi_output_impurity.
  double parent_acc = 0.0;
  for (int j = 0; j < outputs; ++j) {
    parent_acc += criterion == Criterion::Gini
                      ? gini_from(total_sumsq[static_cast<size_t>(j)], n)
                      : entropy_from(total_counts[static_cast<size_t>(j)], n);
  }
  const double parent = parent_acc / static_cast<double>(outputs);

  std::vector<int> feats(features.begin(), features.end());
  std::sort(feats.begin(), feats.end());
  feats.erase(std::unique(feats.begin(), feats.end()), feats.end());

  struct ValPos {
    double v;
    int pos;  // index into rows/compact
  };
  std::vector<ValPos> vals(static_cast<size_t>(n));
  std::vector<std::vector<int>> left_counts(static_cast<size_t>(outputs));
  std::vector<std::vector<int>> right_counts(static_cast<size_t>(outputs));
  std::vector<std::int64_t> left_sumsq(static_cast<size_t>(outputs));
  std::vector<std::int64_t> right_sumsq(static_cast<size_t>(outputs));

  std::optional<SplitCandidate> best;
  for (const int f : feats) {
    if (f < 0 || f >= data.width) throw ConfigError("feature index out of range");
    for (int p = 0; p < n; ++p) {
      vals[static_cast<size_t>(p)] = {
          data.feature_row(rows[static_cast<size_t>(p)])[static_cast<size_t>(f)], p};
    }
    std::sort(vals.begin(), vals.end(), [](const ValPos& a, const ValPos& b) { return a.v < b.v; });
    if (vals.front().v == vals.back().v) continue;  // constant feature

    for (int j = 0; j < outputs; ++j) {
      left_counts[static_cast<size_t>(j)].assign(uniq[static_cast<size_t>(j)].size(), 0);
      right_counts[static_cast<size_t>(j)] = total_counts[static_cast<size_t>(j)];
      left_sumsq[static_cast<size_t>(j)] = 0;
      right_sumsq[static_cast<size_t>(j)] = total_sumsq[static_cast<size_t>(j)];
    }

    int n_left = 0;
    int i = 0;
    while (i < n) {
      // move one group of equal values to the left side
      const double group_value = vals[static_cast<size_t>(i)].v;
      while (i < n && vals[static_cast<size_t>(i)].v == group_value) {
        const int pos = vals[static_cast<size_t>(i)].pos;
        for (int j = 0; j < outputs; ++j) {
          const int id = compact[static_cast<size_t>(j)][static_cast<size_t>(pos)];
          auto& cl = left_counts[static_cast<size_t>(j)][static_cast<size_t>(id)];
          left_sumsq[static_cast<size_t>(j)] += 2 * static_cast<std::int64_t>(cl) + 1;
          ++cl;
          auto& cr = right_counts[static_cast<size_t>(j)][static_cast<size_t>(id)];
          --cr;
          right_sumsq[static_cast<size_t>(j)] -= 2 * static_cast<std::int64_t>(cr) + 1;
        }
        ++n_left;
        ++i;
      }
      if (i == n) break;  // no boundary after the last group
      const int n_right = n - n_left;
      if (n_left < min_samples_leaf || n_right < min_samples_leaf) continue;

      double acc_left = 0.0;
      double acc_right = 0.0;
      for (int j = 0; j < outputs; ++j) {
        if (criterion == Criterion::Gini) {
          acc_left += gini_from(left_sumsq[static_cast<size_t>(j)], n_left);
          acc_right += gini_from(right_sumsq[static_cast<size_t>(j)], n_right);
        } else {
          acc_left += entropy_from(left_counts[static_cast<size_t>(j)], n_left);
          acc_right += entropy_from(right_counts[static_cast<size_t>(j)], n_right);
        }
      }
      const double mean_left = acc_left / static_cast<double>(outputs);
      const double mean_right = acc_right / static_cast<double>(outputs);
      const double child = (static_cast<double>(n_left) * mean_left +
                            static_cast<double>(n_right) * mean_right) /
                           static_cast<double>(n);
      const double gain = parent - child;
      if (gain > kMinGain && (!best || gain > best->gain)) {
        const double threshold = (vals[static_cast<size_t>(i - 1)].v +
                                  vals[static_cast<size_t>(i)].v) / 2.0;
        best = SplitCandidate{f, threshold, gain};
      }
    }
  }
  return best;
}

namespace {

bool all_outputs_pure(const Dataset& data, const std::vector<int>& rows) {
  for (int j = 0; j < data.outputs; ++j) {
    const int first = data.label_row(rows.front())[static_cast<size_t>(j)];
    for (const int r : rows) {
      if (data.label_row(r)[static_cast<size_t>(j)] != first) return false;
    }
  }
  return true;
}

std::unique_ptr<TreeNode> make_leaf(const Dataset& data, const std::vector<int>& rows) {
  auto node = std::make_unique<TreeNode>();
  node->sample_count = static_cast<int>(rows.size());
  node->histograms.assign(static_cast<size_t>(data.outputs), {});
  node->leaf_labels.assign(static_cast<size_t>(data.outputs), 0);
  for (int j = 0; j < data.outputs; ++j) {
    auto& hist = node->histograms[static_cast<size_t>(j)];
    for (const int r : rows) ++hist[data.label_row(r)[static_cast<size_t>(j)]];
    // majority, ties to the lowest label (ascending map order, strict >)
    int best_label = 0;
    int best_count = -1;
    for (const auto& [label, count] : hist) {
      if (count > best_count) {
        best_label = label;
        best_count = count;
      }
    }
    node->leaf_labels[static_cast<size_t>(j)] = best_label;
  }
  return node;
}

}  // namespace

DecisionTree fit(const Dataset& data, const Hyperparams& h) {
  if (data.rows() < 1) throw ConfigError("fit requires a nonempty dataset");
  if (data.outputs < 1) throw ConfigError("dataset has no outputs");
  h.validate(data.width);

  Rng feature_rng(child_seed(h.seed, kFeatureStream));
  std::vector<int> all_features(static_cast<size_t>(data.width));
  std::iota(all_features.begin(), all_features.end(), 0);
  const bool subsample =
      h.max_features != kUnlimited && h.max_features < data.width;

  std::function<std::unique_ptr<TreeNode>(std::vector<int>&, int)> build =
      [&](std::vector<int>& rows, int depth) -> std::unique_ptr<TreeNode> {
    const bool depth_capped = h.max_depth != kUnlimited && depth >= h.max_depth;
    std::optional<SplitCandidate> split;
    if (!depth_capped && static_cast<int>(rows.size()) >= h.min_samples_split &&
        !all_outputs_pure(data, rows)) {
      if (subsample) {
        // seeded sample without replacement, consumed in node construction order
        std::vector<int> pool = all_features;
        std::vector<int> chosen(static_cast<size_t>(h.max_features));
        for (int t = 0; t < h.max_features; ++t) {
          const int j = static_cast<int>(feature_rng.uniform_int(t, data.width - 1));
          std::swap(pool[static_cast<size_t>(t)], pool[static_cast<size_t>(j)]);
          chosen[static_cast<size_t>(t)] = pool[static_cast<size_t>(t)];
        }
        split = best_split(data, rows, chosen, h.criterion, h.min_samples_leaf);
      } else {
        split = best_split(data, rows, all_features, h.criterion, h.min_samples_leaf);
      }
    }
    if (!split) return make_leaf(data, rows);

    std::vector<int> left_rows;
    std::vector<int> right_rows;
    for (const int r : rows) {
      const double v = data.feature_row(r)[static_cast<size_t>(split->feature)];
      (v <= split->threshold ? left_rows : right_rows).push_back(r);
    }
    auto node = std::make_unique<TreeNode>();
    node->sample_count = static_cast<int>(rows.size());
    node->feature = split->feature;
    node->threshold = split->threshold;
    rows.clear();
    rows.shrink_to_fit();
    node->left = build(left_rows, depth + 1);
    node->right = build(right_rows, depth + 1);
    return node;
  };

  std::vector<int> rows(static_cast<size_t>(data.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  auto root = build(rows, 0);

  TreeMeta meta;
  meta.width = data.width;
  meta.outputs = data.outputs;
  meta.server_count = data.meta.server_count;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "seed=%llu;rows=%d",
                static_cast<unsigned long long>(data.meta.master_seed), data.rows());
  meta.fingerprint = buf;
  return DecisionTree(std::move(root), h, meta);
}

std::vector<int> DecisionTree::predict(std::span<const double> x) const {
  if (!root_) throw ConfigError("predict on an untrained tree");
  if (static_cast<int>(x.size()) != meta_.width) {
    throw SchemaError("feature width mismatch: got " + std::to_string(x.size()) +
                      ", tree expects " + std::to_string(meta_.width));
  }
  const TreeNode* node = root_.get();
  while (!node->is_leaf()) {
    node = x[static_cast<size_t>(node->feature)] <= node->threshold ? node->left.get()
                                                                    : node->right.get();
  }
  return node->leaf_labels;
}

int DecisionTree::node_visits(std::span<const double> x) const {
  if (!root_) throw ConfigError("predict on an untrained tree");
  if (static_cast<int>(x.size()) != meta_.width) {
    throw SchemaError("feature width mismatch: got " + std::to_string(x.size()) +
                      ", tree expects " + std::to_string(meta_.width));
  }
  int visits = 1;
  const TreeNode* node = root_.get();
  while (!node->is_leaf()) {
    node = x[static_cast<size_t>(node->feature)] <= node->threshold ? node->left.get()
                                                                    : node->right.get();
    ++visits;
  }
  return visits;
}

namespace {

int node_depth(const TreeNode& n) {
  if (n.is_leaf()) return 0;
  return 1 + std::max(node_depth(*n.left), node_depth(*n.right));
}

int node_leaves(const TreeNode& n) {
  if (n.is_leaf()) return 1;
  return node_leaves(*n.left) + node_leaves(*n.right);
}

}  // namespace

int DecisionTree::depth() const { return root_ ? node_depth(*root_) : 0; }

int DecisionTree::leaf_count() const { return root_ ? node_leaves(*root_) : 0; }

std::vector<int> knn_predict(const Dataset& data, std::span<const double> x, int k) {
  const int n = data.rows();
  if (n < 1) throw ConfigError("knn requires a nonempty dataset");
  if (static_cast<int>(x.size()) != data.width) {
    throw SchemaError("feature width mismatch: got " + std::to_string(x.size()) +
                      ", dataset expects " + std::to_string(data.width));
  }
  if (k < 1 || k > n) throw ConfigError("k must be in [1, rows]");

  // squared Euclidean distance: same ordering, and exact for integer features
  std::vector<std::pair<double, int>> dist(static_cast<size_t>(n));
  for (int r = 0; r < n; ++r) {
    const auto row = data.feature_row(r);
    double d = 0.0;
    for (int c = 0; c < data.width; ++c) {
      const double diff = x[static_cast<size_t>(c)] - row[static_cast<size_t>(c)];
      d += diff * diff;
    }
    dist[static_cast<size_t>(r)] = {d, r};
  }
  std::sort(dist.begin(), dist.end());  // ties to the lower row index

  std::vector<int> out(static_cast<size_t>(data.outputs));
  std::map<int, int> counts;
  for (int j = 0; j < data.outputs; ++j) {
    counts.clear();
    for (int t = 0; t < k; ++t) {
      ++counts[data.label_row(dist[static_cast<size_t>(t)].second)[static_cast<size_t>(j)]];
    }
    int best_label = 0;
    int best_count = -1;
    for (const auto& [label, count] : counts) {
      if (count > best_count) {
        best_label = label;
        best_count = count;
      }
    }
    out[static_cast<size_t>(j)] = best_label;
  }
  return out;
}

Scorer misclassification_scorer() {
  return [](const DecisionTree& tree, const Dataset& data, std::span<const int> rows) {
    if (rows.empty()) throw ConfigError("scorer requires validation rows");
    std::int64_t wrong = 0;
    for (const int r : rows) {
      const auto pred = tree.predict(data.feature_row(r));
      const auto truth = data.label_row(r);
      for (int j = 0; j < data.outputs; ++j) {
        wrong += pred[static_cast<size_t>(j)] != truth[static_cast<size_t>(j)];
      }
    }
    return static_cast<double>(wrong) /
           (static_cast<double>(rows.size()) * static_cast<double>(data.outputs));
  };
}

namespace {

std::vector<std::vector<int>> make_folds(int n, int k, std::uint64_t seed) {
  std::vector<int> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(child_seed(seed, kShuffleStream));
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_int(0, i));
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
  }
  // contiguous folds of floor(n/k), remainder spread over the first folds
  std::vector<std::vector<int>> folds(static_cast<size_t>(k));
  const int base = n / k;
  const int rem = n % k;
  int pos = 0;
  for (int i = 0; i < k; ++i) {
    const int size = base + (i < rem ? 1 : 0);
    folds[static_cast<size_t>(i)].assign(idx.begin() + pos, idx.begin() + pos + size);
    pos += size;
  }
  return folds;
}

Dataset subset_rows(const Dataset& data, const std::vector<int>& rows) {
  Dataset s;
  s.width = data.width;
  s.outputs = data.outputs;
  s.meta = data.meta;
  s.meta.n_trials = static_cast<int>(rows.size());
  s.features.reserve(rows.size() * static_cast<size_t>(data.width));
  s.labels.reserve(rows.size() * static_cast<size_t>(data.outputs));
  for (const int r : rows) {
    const auto f = data.feature_row(r);
    const auto y = data.label_row(r);
    s.features.insert(s.features.end(), f.begin(), f.end());
    s.labels.insert(s.labels.end(), y.begin(), y.end());
  }
  return s;
}

std::vector<int> training_rows(const std::vector<std::vector<int>>& folds, int skip) {
  std::vector<int> rows;
  for (int i = 0; i < static_cast<int>(folds.size()); ++i) {
    if (i == skip) continue;
    rows.insert(rows.end(), folds[static_cast<size_t>(i)].begin(),
                folds[static_cast<size_t>(i)].end());
  }
  return rows;
}

void check_cv_args(int n, int k) {
  if (k < 2) throw ConfigError("cross-validation requires k >= 2");
  if (k > n) throw ConfigError("k exceeds the row count (" + std::to_string(k) + " > " +
                               std::to_string(n) + ")");
}

}  // namespace

CvReport cross_validate(const Dataset& data, const Hyperparams& h, int k,
                        const Scorer& scorer, int threads) {
  check_cv_args(data.rows(), k);
  if (!scorer) throw ConfigError("scorer is empty");
  h.validate(data.width);

  const auto folds = make_folds(data.rows(), k, h.seed);
  CvReport report;
  report.fold_scores.assign(static_cast<size_t>(k), 0.0);
  parallel_for(k, threads, [&](int i) {
    const Dataset train = subset_rows(data, training_rows(folds, i));
    const DecisionTree tree = fit(train, h);
    report.fold_scores[static_cast<size_t>(i)] =
        scorer(tree, data, folds[static_cast<size_t>(i)]);
  });

  double sum = 0.0;
  for (const double s : report.fold_scores) sum += s;
  report.mean = sum / static_cast<double>(k);
  double var = 0.0;
  for (const double s : report.fold_scores) var += (s - report.mean) * (s - report.mean);
  report.stddev = std::sqrt(var / static_cast<double>(k));
  return report;
}

void ObjectiveSpec::validate() const {
  if (names.empty()) throw ConfigError("objective spec is empty");
  if (names.size() != scorers.size() || names.size() != weights.size()) {
    throw ConfigError("objective names/scorers/weights lengths differ");
  }
  double sum = 0.0;
  for (const double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("objective weights must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("objective weights must sum to 1");
  for (const auto& s : scorers) {
    if (!s) throw ConfigError("objective scorer is empty");
  }
}

double consolidated_objective(const ObjectiveSpec& spec,
                              const std::vector<std::vector<double>>& per_objective_fold_scores) {
  spec.validate();
  if (per_objective_fold_scores.size() != spec.weights.size()) {
    throw ConfigError("fold scores do not match the objective count");
  }
  const size_t k = per_objective_fold_scores.front().size();
  if (k == 0) throw ConfigError("fold scores are empty");
  for (const auto& scores : per_objective_fold_scores) {
    if (scores.size() != k) throw ConfigError("fold counts differ between objectives");
  }
  double acc = 0.0;
  for (size_t i = 0; i < k; ++i) {
    for (size_t j = 0; j < per_objective_fold_scores.size(); ++j) {
      acc += spec.weights[j] * per_objective_fold_scores[j][i];
    }
  }
  return acc / static_cast<double>(k);
}

GridResult grid_search(const Dataset& data, const std::vector<Hyperparams>& grid,
                       const ObjectiveSpec& spec, int k, int threads) {
  if (grid.empty()) throw ConfigError("grid must not be empty");
  spec.validate();
  check_cv_args(data.rows(), k);
  const int points = static_cast<int>(grid.size());
  for (int g = 0; g < points; ++g) {
    try {
      grid[static_cast<size_t>(g)].validate(data.width);
    } catch (const ConfigError& e) {
      throw ConfigError("grid point " + std::to_string(g) + ": " + e.what());
    }
  }

  const size_t objectives = spec.scorers.size();
  std::vector<std::vector<std::vector<int>>> folds(static_cast<size_t>(points));
  for (int g = 0; g < points; ++g) {
    folds[static_cast<size_t>(g)] = make_folds(data.rows(), k, grid[static_cast<size_t>(g)].seed);
  }

  // scores[g][j][i]: objective j's cost on fold i of grid point g.
  // One tree is fitted per (grid point, fold) and scored by every objective.
  std::vector<std::vector<std::vector<double>>> scores(
      static_cast<size_t>(points),
      std::vector<std::vector<double>>(objectives, std::vector<double>(static_cast<size_t>(k))));
  parallel_for(points * k, threads, [&](int t) {
    const int g = t / k;
    const int i = t % k;
    try {
      const auto& h = grid[static_cast<size_t>(g)];
      const auto& gfolds = folds[static_cast<size_t>(g)];
      const Dataset train = subset_rows(data, training_rows(gfolds, i));
      const DecisionTree tree = fit(train, h);
      for (size_t j = 0; j < objectives; ++j) {
        scores[static_cast<size_t>(g)][j][static_cast<size_t>(i)] =
            spec.scorers[j](tree, data, gfolds[static_cast<size_t>(i)]);
      }
    } catch (const ConfigError& e) {
      throw ConfigError("grid point " + std::to_string(g) + ": " + e.what());
    } catch (const SchemaError& e) {
      throw SchemaError("grid point " + std::to_string(g) + ": " + e.what());
    } catch (const Error& e) {
      throw Error("grid point " + std::to_string(g) + ": " + e.what());
    }
  });

  GridResult result;
  result.all.reserve(static_cast<size_t>(points));
  int best = 0;
  for (int g = 0; g < points; ++g) {
    GridPoint pt;
    pt.params = grid[static_cast<size_t>(g)];
    pt.per_objective_means.resize(objectives);
    for (size_t j = 0; j < objectives; ++j) {
      double sum = 0.0;
      for (const double s : scores[static_cast<size_t>(g)][j]) sum += s;
      pt.per_objective_means[j] = sum / static_cast<double>(k);
    }
    pt.objective = consolidated_objective(spec, scores[static_cast<size_t>(g)]);
    result.all.push_back(std::move(pt));
    // strict < keeps the earliest grid point on ties
    if (result.all[static_cast<size_t>(g)].objective <
        result.all[static_cast<size_t>(best)].objective) {
      best = g;
    }
  }
  result.best = grid[static_cast<size_t>(best)];
  return result;
}

namespace {

std::string format_threshold(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_threshold(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw SchemaError("bad threshold value: " + s);
  return v;
}

nlohmann::json node_to_json(const TreeNode& node) {
  if (node.is_leaf()) {
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& h : node.histograms) {
      nlohmann::json entry = nlohmann::json::object();
      for (const auto& [label, count] : h) entry[std::to_string(label)] = count;
      hist.push_back(std::move(entry));
    }
    return nlohmann::json{
        {"n", node.sample_count}, {"labels", node.leaf_labels}, {"hist", std::move(hist)}};
  }
  return nlohmann::json{{"n", node.sample_count},
                        {"feature", node.feature},
                        {"threshold", format_threshold(node.threshold)},
                        {"left", node_to_json(*node.left)},
                        {"right", node_to_json(*node.right)}};
}

std::unique_ptr<TreeNode> node_from_json(const nlohmann::json& j) {
  auto node = std::make_unique<TreeNode>();
  node->sample_count = j.at("n").get<int>();
  if (j.contains("labels")) {
    node->leaf_labels = j.at("labels").get<std::vector<int>>();
    for (const auto& entry : j.at("hist")) {
      std::map<int, int> h;
      for (const auto& [key, value] : entry.items()) {
        h[std::stoi(key)] = value.get<int>();
      }
      node->histograms.push_back(std::move(h));
    }
    return node;
  }
  node->feature = j.at("feature").get<int>();
  node->threshold = parse_threshold(j.at("threshold").get<std::string>());
  node->left = node_from_json(j.at("left"));
  node->right = node_from_json(j.at("right"));
  return node;
}

}  // namespace

nlohmann::json tree_to_json(const DecisionTree& tree) {
  if (!tree.trained()) throw ConfigError("cannot serialize an untrained tree");
  return nlohmann::json{{"version", kModelVersion},
                        {"params", tree.params()},
                        {"meta",
                         {{"width", tree.meta().width},
                          {"outputs", tree.meta().outputs},
                          {"server_count", tree.meta().server_count},
                          {"fingerprint", tree.meta().fingerprint}}},
                        {"root", node_to_json(tree.root())}};
}

DecisionTree tree_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<std::string>() != kModelVersion) {
      throw SchemaError("unsupported model version: " + j.at("version").dump());
    }
    const Hyperparams params = j.at("params").get<Hyperparams>();
    TreeMeta meta;
    const auto& m = j.at("meta");
    meta.width = m.at("width").get<int>();
    meta.outputs = m.at("outputs").get<int>();
    meta.server_count = m.at("server_count").get<int>();
    meta.fingerprint = m.value("fingerprint", std::string{});
    return DecisionTree(node_from_json(j.at("root")), params, meta);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("bad model JSON: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw SchemaError("bad histogram label in model JSON");
  } catch (const std::out_of_range&) {
    throw SchemaError("bad histogram label in model JSON");
  }
}

void save_model(const DecisionTree& tree, const std::filesystem::path& path) {
  atomic_write(path, tree_to_json(tree).dump(2) + "\n");
}

DecisionTree load_model(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("cannot parse model " + path.string() + ": " + e.what());
  }
  return tree_from_json(j);
}

void to_json(nlohmann::json& j, const Hyperparams& h) {
  j = nlohmann::json{{"max_depth", h.max_depth},
                     {"min_samples_split", h.min_samples_split},
                     {"min_samples_leaf", h.min_samples_leaf},
                     {"max_features", h.max_features},
                     {"criterion", to_string(h.criterion)},
                     {"seed", h.seed}};
}

void from_json(const nlohmann::json& j, Hyperparams& h) {
  const Hyperparams defaults;
  h.max_depth = j.value("max_depth", defaults.max_depth);
  h.min_samples_split = j.value("min_samples_split", defaults.min_samples_split);
  h.min_samples_leaf = j.value("min_samples_leaf", defaults.min_samples_leaf);
  h.max_features = j.value("max_features", defaults.max_features);
  h.criterion = criterion_from_string(j.value("criterion", std::string(to_string(defaults.criterion))));
  h.seed = j.value("seed", defaults.seed);
}

}  // namespace vnfp
