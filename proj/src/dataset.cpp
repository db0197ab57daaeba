#include "vnfp/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

#include "vnfp/errors.hpp"
#include "vnfp/io_util.hpp"

namespace vnfp {

void RequirementRanges::validate() const {
  for (int t = 0; t < kVnfTypeCount; ++t) {
    const auto& c = cpu_req[static_cast<size_t>(t)];
    const auto& m = mem_req[static_cast<size_t>(t)];
    if (!c.well_formed() || c.lo < 1) throw ConfigError("cpu_req range must be positive");
    if (!m.well_formed() || m.lo < 1) throw ConfigError("mem_req range must be positive");
  }
  if (!tolerance_us.well_formed() || tolerance_us.lo < 1) {
    throw ConfigError("tolerance range must be positive");
  }
}

namespace {

NetworkTrial sample_trial(const TopologyConfig& topo, const SfcSpec& spec,
                          const RequirementRanges& reqs, Rng& rng) {
  NetworkTrial trial;
  Topology t = generate_topology(topo, rng);
  trial.servers = std::move(t.servers);
  trial.delays = std::move(t.delays);
  trial.spec = spec;
  trial.instances = make_instances(spec);
  // requirements per instance in id order, cpu then mem
  for (auto& inst : trial.instances) {
    const auto type = static_cast<size_t>(inst.type);
    inst.cpu_req = rng.uniform_int(reqs.cpu_req[type].lo, reqs.cpu_req[type].hi);
    inst.mem_req = rng.uniform_int(reqs.mem_req[type].lo, reqs.mem_req[type].hi);
  }
  // tolerances per edge in chain order
  trial.tolerances.clear();
  for (auto& edge : trial.spec.chain) {
    edge.tolerance_us = rng.uniform_int(reqs.tolerance_us.lo, reqs.tolerance_us.hi);
    trial.tolerances.push_back(edge.tolerance_us);
  }
  return trial;
}

}  // namespace

NetworkTrial generate_trial(const TopologyConfig& topo, const SfcSpec& spec,
                            const RequirementRanges& reqs, Rng& rng, int retry_budget) {
  topo.validate();
  spec.validate();
  reqs.validate();
  for (int attempt = 0; attempt <= retry_budget; ++attempt) {
    NetworkTrial trial = sample_trial(topo, spec, reqs, rng);
    try {
      place_greedy(trial);
      return trial;
    } catch (const InfeasibleError&) {
      // resample from the same stream
    }
  }
  throw Error("trial generation failed: no feasible trial within the retry budget");
}

TrialSource::TrialSource(TopologyConfig topo, SfcSpec spec, RequirementRanges reqs,
                         std::uint64_t master_seed)
    : topo_(topo), spec_(std::move(spec)), reqs_(reqs), master_seed_(master_seed) {
  topo_.validate();
  spec_.validate();
  reqs_.validate();
}

NetworkTrial TrialSource::trial(int index) const {
  Rng rng(child_seed(master_seed_, static_cast<std::uint64_t>(index)));
  return generate_trial(topo_, spec_, reqs_, rng);
}

int feature_width(int server_count, const SfcSpec& spec) {
  const int s = server_count;
  const int i = spec.instance_count();
  const int e = static_cast<int>(spec.chain.size());
  return 2 * s + s * (s - 1) / 2 + 2 * i + e + i;
}

std::vector<double> featurize(const NetworkTrial& trial) {
  const int s = trial.server_count();
  std::vector<double> out;
  out.reserve(static_cast<size_t>(feature_width(s, trial.spec)));

  for (const auto& server : trial.servers) out.push_back(static_cast<double>(server.cpu_capacity));
  for (const auto& server : trial.servers) out.push_back(static_cast<double>(server.mem_capacity));
  for (int i = 0; i < s; ++i) {
    for (int j = i + 1; j < s; ++j) out.push_back(static_cast<double>(trial.delays.at(i, j)));
  }
  for (const auto& inst : trial.instances) {
    out.push_back(static_cast<double>(inst.cpu_req));
    out.push_back(static_cast<double>(inst.mem_req));
  }
  for (const Microseconds tol : trial.tolerances) out.push_back(static_cast<double>(tol));
  for (const auto& inst : trial.instances) out.push_back(static_cast<double>(inst.type));

  return out;
}

std::vector<int> labelize(const Placement& p) {
  return {p.assignment.begin(), p.assignment.end()};
}

Dataset build_dataset(int n_trials, const TopologyConfig& topo, const SfcSpec& spec,
                      const RequirementRanges& reqs, std::uint64_t master_seed,
                      const BuildOptions& opts) {
  if (n_trials < 1) throw ConfigError("n_trials must be >= 1");
  topo.validate();
  spec.validate();
  reqs.validate();

  Dataset d;
  d.width = feature_width(topo.server_count, spec);
  d.outputs = spec.instance_count();
  d.features.assign(static_cast<size_t>(n_trials) * d.width, 0.0);
  d.labels.assign(static_cast<size_t>(n_trials) * d.outputs, -1);
  d.meta.server_count = topo.server_count;
  d.meta.n_trials = n_trials;
  d.meta.master_seed = master_seed;
  d.meta.spec = spec;
  d.meta.topology = topo;
  d.meta.requirements = reqs;

  parallel_for(n_trials, opts.threads, [&](int i) {
    NetworkTrial trial;
    try {
      Rng rng(child_seed(master_seed, static_cast<std::uint64_t>(i)));
      trial = generate_trial(topo, spec, reqs, rng, opts.retry_budget);
    } catch (const Error& e) {
      throw Error("trial " + std::to_string(i) + ": " + e.what());
    }
    const auto row = featurize(trial);
    const auto labels = labelize(place_greedy(trial));
    std::copy(row.begin(), row.end(), d.features.begin() + static_cast<size_t>(i) * d.width);
    std::copy(labels.begin(), labels.end(), d.labels.begin() + static_cast<size_t>(i) * d.outputs);
  });
  return d;
}

std::vector<NetworkTrial> generate_trials(int n, const TrialSource& source, int threads) {
  std::vector<NetworkTrial> trials(static_cast<size_t>(n));
  parallel_for(n, threads, [&](int i) { trials[static_cast<size_t>(i)] = source.trial(i); });
  return trials;
}

namespace {

std::filesystem::path meta_path_for(const std::filesystem::path& csv_path) {
  std::filesystem::path p = csv_path;
  p.replace_extension();  // strip .csv
  p += ".meta.json";
  return p;
}

}  // namespace

void save_dataset(const Dataset& d, const std::filesystem::path& csv_path) {
  std::string out;
  out.reserve(static_cast<size_t>(d.rows()) * (static_cast<size_t>(d.width) * 12 + d.outputs * 4) + 16);

  char buf[64];
  for (int c = 0; c < d.width; ++c) {
    std::snprintf(buf, sizeof(buf), c == 0 ? "f%d" : ",f%d", c);
    out += buf;
  }
  for (int c = 0; c < d.outputs; ++c) {
    std::snprintf(buf, sizeof(buf), ",y%d", c);
    out += buf;
  }
  out += '\n';

  for (int r = 0; r < d.rows(); ++r) {
    const auto row = d.feature_row(r);
    for (int c = 0; c < d.width; ++c) {
      std::snprintf(buf, sizeof(buf), c == 0 ? "%.6f" : ",%.6f", row[static_cast<size_t>(c)]);
      out += buf;
    }
    const auto labels = d.label_row(r);
    for (int c = 0; c < d.outputs; ++c) {
      std::snprintf(buf, sizeof(buf), ",%d", labels[static_cast<size_t>(c)]);
      out += buf;
    }
    out += '\n';
  }

  atomic_write(csv_path, out);

  nlohmann::json meta = d.meta;
  atomic_write(meta_path_for(csv_path), meta.dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path& csv_path) {
  const std::filesystem::path meta_path = meta_path_for(csv_path);
  DatasetMeta meta;
  try {
    meta = nlohmann::json::parse(read_file(meta_path)).get<DatasetMeta>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("bad dataset metadata " + meta_path.string() + ": " + e.what());
  }
  if (meta.version != kDatasetVersion) {
    throw SchemaError("unsupported dataset version: " + meta.version);
  }

  const int expect_width = feature_width(meta.server_count, meta.spec);
  const int expect_outputs = meta.spec.instance_count();

  const std::string text = read_file(csv_path);
  Dataset d;
  d.width = expect_width;
  d.outputs = expect_outputs;
  d.meta = meta;

  size_t pos = 0;
  const size_t end = text.size();
  auto next_line = [&](std::string_view& line) {
    if (pos >= end) return false;
    size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = end;
    line = std::string_view(text).substr(pos, nl - pos);
    pos = nl + 1;
    return true;
  };

  std::string_view header;
  if (!next_line(header) || header.empty()) {
    throw SchemaError("dataset CSV is empty: " + csv_path.string());
  }
  const int columns = static_cast<int>(std::count(header.begin(), header.end(), ',')) + 1;
  if (columns != expect_width + expect_outputs) {
    throw SchemaError("dataset CSV width disagrees with metadata (" +
                      std::to_string(columns) + " columns, expected " +
                      std::to_string(expect_width + expect_outputs) + ")");
  }

  std::string_view line;
  int row = 0;
  while (next_line(line)) {
    if (line.empty()) continue;
    const char* p = line.data();
    const char* line_end = p + line.size();
    int col = 0;
    while (col < expect_width + expect_outputs) {
      if (col < expect_width) {
        double v = 0;
        auto [next, errc] = std::from_chars(p, line_end, v);
        if (errc != std::errc{}) throw SchemaError("bad numeric field in dataset CSV");
        d.features.push_back(v);
        p = next;
      } else {
        int v = 0;
        auto [next, errc] = std::from_chars(p, line_end, v);
        if (errc != std::errc{}) throw SchemaError("bad label field in dataset CSV");
        d.labels.push_back(v);
        p = next;
      }
      ++col;
      if (col < expect_width + expect_outputs) {
        if (p >= line_end || *p != ',') {
          throw SchemaError("dataset CSV row " + std::to_string(row) + " has too few columns");
        }
        ++p;
      }
    }
    if (p != line_end) {
      throw SchemaError("dataset CSV row " + std::to_string(row) + " has trailing data");
    }
    ++row;
  }
  if (row == 0) throw SchemaError("dataset CSV has no data rows: " + csv_path.string());
  if (meta.n_trials != 0 && row != meta.n_trials) {
    throw SchemaError("dataset CSV row count disagrees with metadata");
  }
  return d;
}

void to_json(nlohmann::json& j, const RequirementRanges& r) {
  nlohmann::json cpu = nlohmann::json::object();
  nlohmann::json mem = nlohmann::json::object();
  for (int t = 0; t < kVnfTypeCount; ++t) {
    cpu[to_string(static_cast<VnfType>(t))] = r.cpu_req[static_cast<size_t>(t)];
    mem[to_string(static_cast<VnfType>(t))] = r.mem_req[static_cast<size_t>(t)];
  }
  j = nlohmann::json{{"cpu_req", std::move(cpu)},
                     {"mem_req", std::move(mem)},
                     {"tolerance_us", r.tolerance_us}};
}

void from_json(const nlohmann::json& j, RequirementRanges& r) {
  r = RequirementRanges{};
  if (j.contains("cpu_req")) {
    for (const auto& [key, value] : j.at("cpu_req").items()) {
      r.cpu_req[static_cast<size_t>(vnf_type_from_string(key))] = value.get<IntRange>();
    }
  }
  if (j.contains("mem_req")) {
    for (const auto& [key, value] : j.at("mem_req").items()) {
      r.mem_req[static_cast<size_t>(vnf_type_from_string(key))] = value.get<IntRange>();
    }
  }
  if (j.contains("tolerance_us")) r.tolerance_us = j.at("tolerance_us").get<IntRange>();
}

void to_json(nlohmann::json& j, const DatasetMeta& m) {
  j = nlohmann::json{{"version", m.version},
                     {"server_count", m.server_count},
                     {"n_trials", m.n_trials},
                     {"master_seed", m.master_seed},
                     {"spec", m.spec},
                     {"topology", m.topology},
                     {"requirements", m.requirements}};
}

void from_json(const nlohmann::json& j, DatasetMeta& m) {
  m.version = j.at("version").get<std::string>();
  m.server_count = j.at("server_count").get<int>();
  m.n_trials = j.value("n_trials", 0);
  m.master_seed = j.at("master_seed").get<std::uint64_t>();
  m.spec = j.at("spec").get<SfcSpec>();
  m.topology = j.at("topology").get<TopologyConfig>();
  m.requirements = j.at("requirements").get<RequirementRanges>();
}

}  // namespace vnfp
