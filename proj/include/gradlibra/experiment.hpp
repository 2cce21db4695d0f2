#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gradlibra/checkpoint.hpp"
#include "gradlibra/dataset.hpp"
#include "gradlibra/loss.hpp"
#include "gradlibra/metrics.hpp"
#include "gradlibra/model.hpp"
#include "gradlibra/telemetry.hpp"
#include "gradlibra/trainer.hpp"

namespace gradlibra {

enum class TelemetrySelection { RawCE, ActiveLoss, Both };

TelemetrySelection telemetry_selection_from_string(std::string_view name);
std::string to_string(TelemetrySelection sel);

// Full experiment description: either a synthetic dataset spec or a
// directory of previously generated files, plus model/optimizer/loss
// settings and the seed list.
struct ExperimentConfig {
  DatasetSpec dataset;
  std::optional<std::filesystem::path> dataset_path;
  ModelSpec model;
  OptimSpec optim;
  LossConfig loss;
  std::vector<std::uint64_t> seeds{1};
  std::filesystem::path output_dir = "out";
  TelemetrySelection telemetry = TelemetrySelection::Both;

  void validate() const;
  static ExperimentConfig desk_default();
};

ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);

// Manifest = resolved config + tool version; every run is reproducible
// from it alone (it parses back as a config).
void write_manifest(const ExperimentConfig& config, const std::filesystem::path& path);

// Derived stream seeds of a run. Paired comparisons share the dataset and
// model initialization for the same run seed; only the loss differs.
struct RunSeeds {
  std::uint64_t dataset_seed;
  std::uint64_t init_seed;
  std::uint64_t shuffle_seed;
};
RunSeeds derive_run_seeds(std::uint64_t run_seed);

// Resolves the dataset for a run: loads dataset_path when set, otherwise
// generates from the spec with the run's derived dataset seed.
Dataset resolve_dataset(const ExperimentConfig& config, std::uint64_t run_seed);

struct RunArtifacts {
  std::optional<Checkpoint> checkpoint;
  EvalReport report;
  GradientLedger ledger_raw{1, LedgerMode::RawCE};
  GradientLedger ledger_active{1, LedgerMode::ActiveLoss};
  WeightNormResult norms;
};

// Trains on dataset.train with the given loss, evaluates on dataset.test,
// and tracks both telemetry ledgers. telemetry_path, when set, receives
// the JSONL stream (modes per selection).
RunArtifacts run_training(const Dataset& dataset, const ModelSpec& model_spec,
                          const OptimSpec& optim, const LossConfig& loss_cfg,
                          std::uint64_t init_seed, std::uint64_t shuffle_seed,
                          const std::optional<std::filesystem::path>& telemetry_path = {},
                          TelemetrySelection selection = TelemetrySelection::Both);

struct ComparisonRow {
  std::string loss_label;
  LossConfig loss;
  std::optional<std::uint64_t> seed;  // nullopt for the per-loss mean row
  EvalReport report;
};

struct ComparisonResult {
  std::vector<ComparisonRow> rows;  // per-seed rows first, then mean rows
  // Per (loss index * seeds + seed index) artifacts, for diagnostics.
  std::vector<RunArtifacts> artifacts;
};

// Paired comparison over config.seeds: the dataset and model init are
// identical across losses within a seed. max_workers > 1 runs the
// (loss, seed) grid on a thread pool; outputs are independent of worker
// count.
ComparisonResult run_compare(const ExperimentConfig& config,
                             const std::vector<LossConfig>& losses, int max_workers = 1);

std::string compare_csv_header();
std::string compare_csv(const ComparisonResult& result);

struct SweepPoint {
  double alpha_pos;
  double alpha_neg;
};

ComparisonResult run_sweep(const ExperimentConfig& config, const std::vector<double>& alpha_pos,
                           const std::vector<double>& alpha_neg, int max_workers = 1);

std::string sweep_csv_header();
std::string sweep_csv(const ComparisonResult& result);

// Worker cap: GRADLIBRA_THREADS env var when set, otherwise fallback.
int worker_cap(int fallback);

}  // namespace gradlibra
