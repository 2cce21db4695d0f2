#include "gradlibra/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "gradlibra/config_json.hpp"
#include "gradlibra/rng.hpp"

namespace gradlibra {

TelemetrySelection telemetry_selection_from_string(std::string_view name) {
  if (name == "raw-ce" || name == "raw_ce") return TelemetrySelection::RawCE;
  if (name == "active-loss" || name == "active_loss") return TelemetrySelection::ActiveLoss;
  if (name == "both") return TelemetrySelection::Both;
  throw ConfigError("unknown telemetry mode: " + std::string(name));
}

std::string to_string(TelemetrySelection sel) {
  switch (sel) {
    case TelemetrySelection::RawCE: return "raw-ce";
    case TelemetrySelection::ActiveLoss: return "active-loss";
    case TelemetrySelection::Both: return "both";
  }
  throw ConfigError("invalid telemetry selection value");
}

void ExperimentConfig::validate() const {
  if (!dataset_path) dataset.validate();
  optim.validate();
  loss.validate();
  if (seeds.empty()) throw ConfigError("seeds must be nonempty");
  if (dataset_path && !std::filesystem::exists(*dataset_path)) {
    throw DataError("dataset path does not exist: " + dataset_path->string());
  }
}

ExperimentConfig ExperimentConfig::desk_default() {
  ExperimentConfig config;
  config.dataset = DatasetSpec::desk_default();
  config.model.arch = Arch::Linear;
  config.model.feature_dim = config.dataset.feature_dim;
  config.model.num_classes = config.dataset.num_classes;
  config.optim.lr = 0.05;
  config.seeds = {1, 2, 3, 4, 5};
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig config = ExperimentConfig::desk_default();
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    if (d.is_string()) {
      config.dataset_path = std::filesystem::path(d.get<std::string>());
    } else if (d.contains("path")) {
      config.dataset_path = std::filesystem::path(d.at("path").get<std::string>());
    } else {
      config.dataset = dataset_spec_from_json(d);
    }
  }
  if (j.contains("model")) config.model = model_spec_from_json(j.at("model"));
  if (j.contains("optim")) config.optim = optim_spec_from_json(j.at("optim"));
  if (j.contains("loss")) config.loss = loss_config_from_json(j.at("loss"));
  if (j.contains("seeds")) config.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("output_dir")) {
    config.output_dir = std::filesystem::path(j.at("output_dir").get<std::string>());
  }
  if (j.contains("telemetry_mode")) {
    config.telemetry = telemetry_selection_from_string(j.at("telemetry_mode").get<std::string>());
  }
  // Model dims default to the dataset's when unset.
  if (!config.dataset_path) {
    if (config.model.feature_dim == 0) config.model.feature_dim = config.dataset.feature_dim;
    if (config.model.num_classes == 0) config.model.num_classes = config.dataset.num_classes;
  }
  return config;
}

nlohmann::ordered_json to_json(const ExperimentConfig& config) {
  nlohmann::ordered_json j;
  if (config.dataset_path) {
    j["dataset"] = {{"path", config.dataset_path->string()}};
  } else {
    j["dataset"] = to_json(config.dataset);
  }
  j["model"] = to_json(config.model);
  j["optim"] = to_json(config.optim);
  j["loss"] = to_json(config.loss);
  j["seeds"] = config.seeds;
  j["output_dir"] = config.output_dir.string();
  j["telemetry_mode"] = to_string(config.telemetry);
  return j;
}

void write_manifest(const ExperimentConfig& config, const std::filesystem::path& path) {
  nlohmann::ordered_json j = to_json(config);
  j["tool_version"] = kVersion;
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
}

RunSeeds derive_run_seeds(std::uint64_t run_seed) {
  return {derive_seed(run_seed, 0), derive_seed(run_seed, 1), derive_seed(run_seed, 2)};
}

Dataset resolve_dataset(const ExperimentConfig& config, std::uint64_t run_seed) {
  if (config.dataset_path) return load_dataset(*config.dataset_path);
  DatasetSpec spec = config.dataset;
  spec.seed = derive_run_seeds(run_seed).dataset_seed;
  return generate(spec);
}

RunArtifacts run_training(const Dataset& dataset, const ModelSpec& model_spec,
                          const OptimSpec& optim, const LossConfig& loss_cfg,
                          std::uint64_t init_seed, std::uint64_t shuffle_seed,
                          const std::optional<std::filesystem::path>& telemetry_path,
                          TelemetrySelection selection) {
  ModelSpec spec = model_spec;
  spec.feature_dim = static_cast<int>(dataset.train.features.cols());
  spec.num_classes = static_cast<int>(dataset.train.labels.cols());
  spec.init_seed = init_seed;

  const int C = spec.num_classes;
  RunArtifacts artifacts;
  artifacts.ledger_raw = GradientLedger(C, LedgerMode::RawCE);
  artifacts.ledger_active = GradientLedger(C, LedgerMode::ActiveLoss);

  std::optional<TelemetryWriter> writer;
  if (telemetry_path) writer.emplace(*telemetry_path);
  const bool want_raw = selection != TelemetrySelection::ActiveLoss;
  const bool want_active = selection != TelemetrySelection::RawCE;

  TrainHooks hooks;
  hooks.on_iteration = [&](const IterationEvent& event) {
    artifacts.ledger_raw.accumulate(event.probs, event.labels, event.loss.grad_logits);
    artifacts.ledger_active.accumulate(event.probs, event.labels, event.loss.grad_logits);
    if (writer) {
      writer->write_iteration(event.iteration, want_raw ? &artifacts.ledger_raw : nullptr,
                              want_active ? &artifacts.ledger_active : nullptr);
    }
  };
  hooks.on_epoch = [&](const EpochEvent& event) {
    if (writer) writer->write_epoch(event.epoch, weight_norms(event.state.model));
  };

  TrainState state = train(dataset.train, spec, optim, loss_cfg, hooks, shuffle_seed);
  artifacts.norms = weight_norms(state.model);
  artifacts.report = evaluate(state.model, dataset.test, dataset.groups);
  artifacts.checkpoint.emplace(Checkpoint{spec, optim, std::move(state)});
  return artifacts;
}

namespace {

struct GridJob {
  std::size_t row_index;
  LossConfig loss;
  std::uint64_t seed;
};

// Runs the (loss, seed) grid with at most max_workers threads. Results are
// stored by precomputed index, so worker count never changes the output.
ComparisonResult run_grid(const ExperimentConfig& config,
                          const std::vector<std::pair<std::string, LossConfig>>& losses,
                          int max_workers) {
  config.validate();
  const std::size_t n_seeds = config.seeds.size();
  const std::size_t n_runs = losses.size() * n_seeds;

  // Datasets are shared across losses within a seed (paired design).
  std::vector<Dataset> datasets;
  datasets.reserve(n_seeds);
  for (const std::uint64_t seed : config.seeds) {
    datasets.push_back(resolve_dataset(config, seed));
  }

  ComparisonResult result;
  result.artifacts.resize(n_runs);
  std::vector<GridJob> jobs;
  jobs.reserve(n_runs);
  for (std::size_t l = 0; l < losses.size(); ++l) {
    for (std::size_t s = 0; s < n_seeds; ++s) {
      jobs.push_back({l * n_seeds + s, losses[l].second, config.seeds[s]});
    }
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= jobs.size()) return;
      try {
        const GridJob& job = jobs[k];
        const RunSeeds seeds = derive_run_seeds(job.seed);
        const Dataset& dataset = datasets[job.row_index % n_seeds];
        result.artifacts[job.row_index] =
            run_training(dataset, config.model, config.optim, job.loss, seeds.init_seed,
                         seeds.shuffle_seed, {}, config.telemetry);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const int workers = std::max(1, std::min<int>(max_workers, static_cast<int>(jobs.size())));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  // Per-seed rows, then a mean row per loss (NaN-aware means).
  for (std::size_t l = 0; l < losses.size(); ++l) {
    for (std::size_t s = 0; s < n_seeds; ++s) {
      result.rows.push_back({losses[l].first, losses[l].second, config.seeds[s],
                             result.artifacts[l * n_seeds + s].report});
    }
  }
  for (std::size_t l = 0; l < losses.size(); ++l) {
    EvalReport mean;
    auto metric_mean = [&](auto getter) {
      double sum = 0.0;
      int n = 0;
      for (std::size_t s = 0; s < n_seeds; ++s) {
        const double v = getter(result.artifacts[l * n_seeds + s].report);
        if (!std::isnan(v)) {
          sum += v;
          ++n;
        }
      }
      return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / n;
    };
    mean.mr_f = metric_mean([](const EvalReport& r) { return r.mr_f; });
    mean.ap_f = metric_mean([](const EvalReport& r) { return r.ap_f; });
    mean.mr_c = metric_mean([](const EvalReport& r) { return r.mr_c; });
    mean.ap_c = metric_mean([](const EvalReport& r) { return r.ap_c; });
    mean.mr_r = metric_mean([](const EvalReport& r) { return r.mr_r; });
    mean.ap_r = metric_mean([](const EvalReport& r) { return r.ap_r; });
    mean.map = metric_mean([](const EvalReport& r) { return r.map; });
    result.rows.push_back({losses[l].first, losses[l].second, std::nullopt, std::move(mean)});
  }
  return result;
}

std::string format_alpha(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

ComparisonResult run_compare(const ExperimentConfig& config,
                             const std::vector<LossConfig>& losses, int max_workers) {
  if (losses.empty()) throw ConfigError("compare: need at least one loss");
  std::vector<std::pair<std::string, LossConfig>> labeled;
  labeled.reserve(losses.size());
  for (const LossConfig& loss : losses) {
    loss.validate();
    labeled.emplace_back(to_string(loss.kind), loss);
  }
  return run_grid(config, labeled, max_workers);
}

std::string compare_csv_header() {
  return "loss,alpha_pos,alpha_neg,seed," + eval_csv_header();
}

std::string compare_csv(const ComparisonResult& result) {
  std::string out = compare_csv_header() + "\n";
  for (const ComparisonRow& row : result.rows) {
    const bool gl = row.loss.kind == LossKind::GradLibra;
    out += row.loss_label + ",";
    out += (gl ? format_alpha(row.loss.effective_alpha_pos()) : "") + ",";
    out += (gl ? format_alpha(row.loss.effective_alpha_neg()) : "") + ",";
    out += row.seed ? std::to_string(*row.seed) : "mean";
    out += "," + eval_csv_row(row.report) + "\n";
  }
  return out;
}

ComparisonResult run_sweep(const ExperimentConfig& config, const std::vector<double>& alpha_pos,
                           const std::vector<double>& alpha_neg, int max_workers) {
  if (alpha_pos.empty() || alpha_neg.empty()) {
    throw ConfigError("sweep: alpha grids must be nonempty");
  }
  std::vector<std::pair<std::string, LossConfig>> labeled;
  for (const double ap : alpha_pos) {
    for (const double an : alpha_neg) {
      LossConfig loss = config.loss;
      loss.kind = LossKind::GradLibra;
      loss.alpha_unified.reset();
      loss.alpha_pos = ap;
      loss.alpha_neg = an;
      loss.validate();
      labeled.emplace_back(format_alpha(ap) + "/" + format_alpha(an), loss);
    }
  }
  return run_grid(config, labeled, max_workers);
}

std::string sweep_csv_header() {
  return "alpha_pos,alpha_neg,seed," + eval_csv_header();
}

std::string sweep_csv(const ComparisonResult& result) {
  std::string out = sweep_csv_header() + "\n";
  for (const ComparisonRow& row : result.rows) {
    out += format_alpha(row.loss.effective_alpha_pos()) + ",";
    out += format_alpha(row.loss.effective_alpha_neg()) + ",";
    out += row.seed ? std::to_string(*row.seed) : "mean";
    out += "," + eval_csv_row(row.report) + "\n";
  }
  return out;
}

int worker_cap(int fallback) {
  const char* env = std::getenv("GRADLIBRA_THREADS");
  if (env && *env) {
    try {
      const int v = std::stoi(env);
      if (v >= 1) return v;
    } catch (const std::exception&) {
      throw ConfigError("GRADLIBRA_THREADS must be a positive integer");
    }
    throw ConfigError("GRADLIBRA_THREADS must be a positive integer");
  }
  return fallback;
}

}  // namespace gradlibra
