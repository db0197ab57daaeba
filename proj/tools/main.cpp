// vnfp: generate placement datasets, train the decision tree, and compare the
// learned placements against the delay-greedy heuristic.
//
// Subcommands: gen, train, eval, bench, paths. One JSON --config file feeds
// every command; a handful of flags override single fields. Every run is
// seeded — there is no implicit entropy anywhere in the pipeline.
//
// Exit codes: 0 success, 2 config error, 3 data/schema error, 4 runtime failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vnfp/cart.hpp"
#include "vnfp/dataset.hpp"
#include "vnfp/errors.hpp"
#include "vnfp/eval.hpp"
#include "vnfp/io_util.hpp"

namespace {

using nlohmann::json;

struct RunConfig {
  vnfp::TopologyConfig network;
  std::string spec_name = "network1";
  vnfp::SfcSpec spec = vnfp::network1_spec();
  vnfp::RequirementRanges requirements;

  int n_trials = 10000;
  std::uint64_t master_seed = 1;

  vnfp::Hyperparams model;
  int cv_k = 10;

  vnfp::Microseconds threshold_us = 2000;
  int test_trials = 1000;
  std::uint64_t test_seed = 420000;
  vnfp::InfeasiblePolicy policy = vnfp::InfeasiblePolicy::Repair;
  double bin_width_us = 50.0;
  int warmup_runs = 10;

  std::string dataset_csv = "dataset.csv";
  std::string model_file = "model.json";
  std::string report_csv = "report.csv";
  std::string report_json = "report.json";
  std::string latency_json = "latency.json";
};

void apply_config(const json& j, RunConfig& cfg) {
  static const std::vector<std::string> known = {
      "network", "spec", "requirements", "dataset", "model", "cv", "eval", "paths"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw vnfp::ConfigError("unknown config key: " + key);
    }
  }

  if (j.contains("spec")) {
    const auto& s = j.at("spec");
    if (s.is_string()) {
      cfg.spec_name = s.get<std::string>();
      if (cfg.spec_name == "network1") {
        cfg.spec = vnfp::network1_spec();
      } else if (cfg.spec_name == "network2") {
        cfg.spec = vnfp::network2_spec();
      } else {
        throw vnfp::ConfigError("spec must be \"network1\", \"network2\", or an inline object");
      }
    } else {
      cfg.spec = s.get<vnfp::SfcSpec>();
      cfg.spec_name = "inline";
    }
  }
  // without an explicit network block, network2 implies the 30-server fleet
  if (j.contains("network")) {
    cfg.network = j.at("network").get<vnfp::TopologyConfig>();
  } else if (cfg.spec_name == "network2") {
    cfg.network.server_count = 30;
  }
  if (j.contains("requirements")) cfg.requirements = j.at("requirements").get<vnfp::RequirementRanges>();
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    cfg.n_trials = d.value("n_trials", cfg.n_trials);
    cfg.master_seed = d.value("master_seed", cfg.master_seed);
  }
  if (j.contains("model")) cfg.model = j.at("model").get<vnfp::Hyperparams>();
  if (j.contains("cv")) cfg.cv_k = j.at("cv").value("k", cfg.cv_k);
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    cfg.threshold_us = e.value("threshold_us", cfg.threshold_us);
    cfg.test_trials = e.value("test_trials", cfg.test_trials);
    cfg.test_seed = e.value("test_seed", cfg.test_seed);
    if (e.contains("infeasible_policy")) {
      cfg.policy = vnfp::infeasible_policy_from_string(e.at("infeasible_policy").get<std::string>());
    }
    cfg.bin_width_us = e.value("bin_width_us", cfg.bin_width_us);
    cfg.warmup_runs = e.value("warmup_runs", cfg.warmup_runs);
  }
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    cfg.dataset_csv = p.value("dataset_csv", cfg.dataset_csv);
    cfg.model_file = p.value("model", cfg.model_file);
    cfg.report_csv = p.value("report_csv", cfg.report_csv);
    cfg.report_json = p.value("report_json", cfg.report_json);
    cfg.latency_json = p.value("latency_json", cfg.latency_json);
  }
}

RunConfig load_config(const std::string& path) {
  RunConfig cfg;
  if (path.empty()) return cfg;
  json j;
  try {
    j = json::parse(vnfp::read_file(path));
  } catch (const json::parse_error& e) {
    throw vnfp::ConfigError("cannot parse config " + path + ": " + e.what());
  }
  try {
    apply_config(j, cfg);
  } catch (const json::exception& e) {
    throw vnfp::ConfigError("bad config " + path + ": " + e.what());
  }
  return cfg;
}

json config_json(const RunConfig& c) {
  return json{
      {"network", c.network},
      {"spec_name", c.spec_name},
      {"spec", c.spec},
      {"requirements", c.requirements},
      {"dataset", {{"n_trials", c.n_trials}, {"master_seed", c.master_seed}}},
      {"model", c.model},
      {"cv", {{"k", c.cv_k}}},
      {"eval",
       {{"threshold_us", c.threshold_us},
        {"test_trials", c.test_trials},
        {"test_seed", c.test_seed},
        {"infeasible_policy", vnfp::to_string(c.policy)},
        {"bin_width_us", c.bin_width_us},
        {"warmup_runs", c.warmup_runs}}},
      {"paths",
       {{"dataset_csv", c.dataset_csv},
        {"model", c.model_file},
        {"report_csv", c.report_csv},
        {"report_json", c.report_json},
        {"latency_json", c.latency_json}}}};
}

void print_config(const RunConfig& cfg) {
  std::printf("config %s\n", config_json(cfg).dump().c_str());
}

int cmd_gen(const RunConfig& cfg) {
  print_config(cfg);
  vnfp::BuildOptions opts;
  opts.threads = vnfp::env_thread_cap();
  const vnfp::Dataset d = vnfp::build_dataset(cfg.n_trials, cfg.network, cfg.spec,
                                              cfg.requirements, cfg.master_seed, opts);
  vnfp::save_dataset(d, cfg.dataset_csv);
  std::printf("wrote %s (+ sidecar meta)\n", cfg.dataset_csv.c_str());
  std::printf("rows %d, width %d, outputs %d\n", d.rows(), d.width, d.outputs);
  return 0;
}

std::vector<vnfp::Hyperparams> load_grid(const std::string& path) {
  json j;
  try {
    j = json::parse(vnfp::read_file(path));
  } catch (const json::parse_error& e) {
    throw vnfp::ConfigError("cannot parse grid " + path + ": " + e.what());
  }
  if (!j.is_array() || j.empty()) throw vnfp::ConfigError("grid must be a nonempty JSON array");
  try {
    return j.get<std::vector<vnfp::Hyperparams>>();
  } catch (const json::exception& e) {
    throw vnfp::ConfigError("bad grid " + path + ": " + e.what());
  }
}

void print_params(const char* label, const vnfp::Hyperparams& h) {
  std::printf("%s max_depth=%d min_samples_split=%d min_samples_leaf=%d max_features=%d "
              "criterion=%s seed=%llu\n",
              label, h.max_depth, h.min_samples_split, h.min_samples_leaf, h.max_features,
              vnfp::to_string(h.criterion), static_cast<unsigned long long>(h.seed));
}

int cmd_train(const RunConfig& cfg, const std::string& grid_path) {
  print_config(cfg);
  const vnfp::Dataset data = vnfp::load_dataset(cfg.dataset_csv);
  std::printf("loaded %s: rows %d, width %d, outputs %d\n", cfg.dataset_csv.c_str(),
              data.rows(), data.width, data.outputs);
  const int threads = vnfp::env_thread_cap();

  vnfp::Hyperparams params = cfg.model;
  if (!grid_path.empty()) {
    const auto grid = load_grid(grid_path);
    vnfp::ObjectiveSpec objective;
    objective.names = {"misclassification"};
    objective.scorers = {vnfp::misclassification_scorer()};
    objective.weights = {1.0};
    const vnfp::GridResult result = vnfp::grid_search(data, grid, objective, cfg.cv_k, threads);
    for (size_t g = 0; g < result.all.size(); ++g) {
      std::printf("grid[%zu] P(h)=%.6f ", g, result.all[g].objective);
      print_params("", result.all[g].params);
    }
    params = result.best;
    print_params("selected", params);
  } else {
    const vnfp::CvReport cv =
        vnfp::cross_validate(data, params, cfg.cv_k, vnfp::misclassification_scorer(), threads);
    for (size_t i = 0; i < cv.fold_scores.size(); ++i) {
      std::printf("fold %zu misclassification %.6f\n", i, cv.fold_scores[i]);
    }
    std::printf("cv mean %.6f stddev %.6f (k=%d)\n", cv.mean, cv.stddev, cfg.cv_k);
  }

  const vnfp::DecisionTree tree = vnfp::fit(data, params);
  vnfp::save_model(tree, cfg.model_file);
  std::printf("wrote %s: depth %d, leaves %d\n", cfg.model_file.c_str(), tree.depth(),
              tree.leaf_count());
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  print_config(cfg);
  const vnfp::DecisionTree tree = vnfp::load_model(cfg.model_file);
  const vnfp::TrialSource source(cfg.network, cfg.spec, cfg.requirements, cfg.test_seed);
  const auto trials = vnfp::generate_trials(cfg.test_trials, source, vnfp::env_thread_cap());

  vnfp::EvalOptions opts;
  opts.threshold_us = cfg.threshold_us;
  opts.policy = cfg.policy;
  opts.bin_width_us = cfg.bin_width_us;
  const vnfp::ComparisonReport report = vnfp::evaluate_methods(trials, tree, opts);

  vnfp::export_report_csv(report, cfg.report_csv);
  vnfp::export_report_json(report, cfg.report_json);
  std::printf("wrote %s and %s\n", cfg.report_csv.c_str(), cfg.report_json.c_str());
  std::printf("trials evaluated %d of %d (%d paths each), infeasible predictions %d, "
              "excluded %d, repaired instances %d\n",
              report.trials_evaluated, cfg.test_trials, report.paths_per_trial,
              report.infeasible_tree_count, report.excluded_trials, report.repaired_instances);
  std::printf("path delay diff (heuristic - tree): mean %.3f us, stddev %.3f us over %lld paths\n",
              report.diff_stats.mean, report.diff_stats.stddev,
              static_cast<long long>(report.diff_stats.count));
  std::printf("violations at %lld us: heuristic %lld, tree %lld\n",
              static_cast<long long>(cfg.threshold_us),
              static_cast<long long>(report.violations.heuristic),
              static_cast<long long>(report.violations.tree));
  return 0;
}

int cmd_bench(const RunConfig& cfg) {
  print_config(cfg);
  const vnfp::DecisionTree tree = vnfp::load_model(cfg.model_file);
  const vnfp::TrialSource source(cfg.network, cfg.spec, cfg.requirements, cfg.test_seed);
  const auto trials = vnfp::generate_trials(cfg.test_trials, source, vnfp::env_thread_cap());

  vnfp::BenchOptions opts;
  opts.warmup_runs = cfg.warmup_runs;
  vnfp::LatencyReport report = vnfp::bench_latency(trials, tree, opts);

  // training cost is measured separately from the per-decision latencies
  if (std::filesystem::exists(cfg.dataset_csv)) {
    const vnfp::Dataset data = vnfp::load_dataset(cfg.dataset_csv);
    const auto t0 = std::chrono::steady_clock::now();
    const vnfp::DecisionTree refit = vnfp::fit(data, tree.params());
    const auto t1 = std::chrono::steady_clock::now();
    if (refit.leaf_count() > 0) {
      report.training_ns = static_cast<double>(
          std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
    }
  }

  vnfp::atomic_write(cfg.latency_json, vnfp::latency_to_json(report).dump(2) + "\n");
  std::printf("wrote %s\n", cfg.latency_json.c_str());
  std::printf("heuristic median %.0f ns (p95 %.0f), tree query median %.0f ns (p95 %.0f), "
              "%zu trials, %d warmup runs\n",
              report.heuristic.median_ns, report.heuristic.p95_ns, report.tree_query.median_ns,
              report.tree_query.p95_ns, trials.size(), report.warmup_runs);
  if (report.training_ns) {
    std::printf("training time %.0f ns (one-off, %s)\n", *report.training_ns,
                cfg.dataset_csv.c_str());
  }
  return 0;
}

int cmd_paths(const RunConfig& cfg) {
  print_config(cfg);
  const auto instances = vnfp::make_instances(cfg.spec);
  for (const auto& inst : instances) {
    std::printf("instance %d: %s cpu=%lld mem=%lld\n", inst.id, vnfp::to_string(inst.type),
                static_cast<long long>(inst.cpu_req), static_cast<long long>(inst.mem_req));
  }
  const auto paths = vnfp::enumerate_paths(cfg.spec, instances);
  std::printf("%zu computational paths\n", paths.size());
  for (size_t p = 0; p < paths.size(); ++p) {
    std::string line;
    for (size_t k = 0; k < paths[p].instances.size(); ++k) {
      if (k > 0) line += " -> ";
      line += std::to_string(paths[p].instances[k]);
    }
    std::printf("path %zu: %s\n", p, line.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "VNF placement pipeline: generate labeled placement datasets, train a "
      "multi-output decision tree, and compare it against the delay-greedy heuristic.\n"
      "Defaults (overridable via --config JSON or flags): network1 spec on 15 servers / "
      "3 pods, 10000 trials, master seed 1, tree max_depth=24 min_samples_split=2 "
      "min_samples_leaf=1 max_features=all criterion=gini, 10-fold CV, eval threshold "
      "2000 us with repair policy over 1000 test trials (seed 420000), 50 us histogram "
      "bins, 10 warmup runs. Files: dataset.csv, model.json, report.csv, report.json, "
      "latency.json. VNFP_THREADS caps parallelism."};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed_override = 0;
  int n_trials_override = 0;
  long long threshold_override = 0;
  int test_trials_override = 0;
  std::uint64_t test_seed_override = 0;
  std::string policy_override;
  int k_override = 0;
  int warmup_override = 0;
  std::string grid_path;

  app.add_option("--config", config_path, "JSON run configuration file");
  auto* seed_opt = app.add_option("--seed", seed_override, "override dataset.master_seed (default 1)");
  auto* n_trials_opt =
      app.add_option("--n-trials", n_trials_override, "override dataset.n_trials (default 10000)");
  auto* threshold_opt = app.add_option("--threshold-us", threshold_override,
                                       "override eval.threshold_us (default 2000)");
  auto* test_trials_opt = app.add_option("--test-trials", test_trials_override,
                                         "override eval.test_trials (default 1000)");
  auto* test_seed_opt =
      app.add_option("--test-seed", test_seed_override, "override eval.test_seed (default 420000)");
  auto* policy_opt = app.add_option("--policy", policy_override,
                                    "override eval.infeasible_policy: repair|exclude (default repair)");
  auto* k_opt = app.add_option("--k", k_override, "override cv.k folds (default 10)");
  auto* warmup_opt =
      app.add_option("--warmup", warmup_override, "override eval.warmup_runs (default 10)");

  auto* gen = app.add_subcommand("gen", "generate a labeled placement dataset (CSV + meta)");
  auto* train =
      app.add_subcommand("train", "cross-validate and fit the decision tree, write model JSON");
  train->add_option("--grid", grid_path, "hyperparameter grid JSON (array of param objects)");
  auto* eval_cmd = app.add_subcommand("eval", "compare tree placements against the heuristic");
  auto* bench = app.add_subcommand("bench", "measure per-decision latency of both methods");
  auto* paths_cmd = app.add_subcommand("paths", "print the computational paths of the spec");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (seed_opt->count() > 0) cfg.master_seed = seed_override;
    if (n_trials_opt->count() > 0) cfg.n_trials = n_trials_override;
    if (threshold_opt->count() > 0) cfg.threshold_us = threshold_override;
    if (test_trials_opt->count() > 0) cfg.test_trials = test_trials_override;
    if (test_seed_opt->count() > 0) cfg.test_seed = test_seed_override;
    if (policy_opt->count() > 0) cfg.policy = vnfp::infeasible_policy_from_string(policy_override);
    if (k_opt->count() > 0) cfg.cv_k = k_override;
    if (warmup_opt->count() > 0) cfg.warmup_runs = warmup_override;

    if (gen->parsed()) return cmd_gen(cfg);
    if (train->parsed()) return cmd_train(cfg, grid_path);
    if (eval_cmd->parsed()) return cmd_eval(cfg);
    if (bench->parsed()) return cmd_bench(cfg);
    if (paths_cmd->parsed()) return cmd_paths(cfg);
    std::fprintf(stderr, "no subcommand given\n");
    return 2;
  } catch (const vnfp::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const vnfp::SchemaError& e) {
    std::fprintf(stderr, "schema error: %s\n", e.what());
    return 3;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "schema error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
}
