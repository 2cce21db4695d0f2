// gradlibra: synthetic long-tailed benchmark harness around the
// hardness-weighted loss library. Subcommands: generate, train, eval,
// compare, sweep. Exit codes: 0 success, 2 config error, 3 data error,
// 4 numeric failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include "gradlibra/checkpoint.hpp"
#include "gradlibra/config_json.hpp"
#include "gradlibra/experiment.hpp"

namespace fs = std::filesystem;
using namespace gradlibra;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::vector<std::uint64_t> seeds;
  std::string loss_name;
  std::optional<double> alpha_pos;
  std::optional<double> alpha_neg;
  std::string telemetry_mode;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags, bool single_loss = true) {
  cmd->add_option("--config", flags.config_path, "JSON experiment config; flags override file values");
  cmd->add_option("--out", flags.out_dir, "Output directory");
  cmd->add_option("--seed", flags.seeds, "Run seed (repeatable)");
  if (single_loss) {
    cmd->add_option("--loss", flags.loss_name, "Loss: grad_libra | ce | focal | focal_star");
    cmd->add_option("--alpha-pos", [&flags](const std::vector<std::string>& v) {
      flags.alpha_pos = std::stod(v.back());
      return true;
    }, "Positive modulating factor");
    cmd->add_option("--alpha-neg", [&flags](const std::vector<std::string>& v) {
      flags.alpha_neg = std::stod(v.back());
      return true;
    }, "Negative modulating factor");
  }
  cmd->add_option("--telemetry-mode", flags.telemetry_mode,
                  "Telemetry ledgers to emit: raw-ce | active-loss | both");
}

ExperimentConfig resolve_config(const CommonFlags& flags) {
  ExperimentConfig config = flags.config_path.empty()
                                ? ExperimentConfig::desk_default()
                                : load_config(flags.config_path);
  if (!flags.out_dir.empty()) config.output_dir = flags.out_dir;
  if (!flags.seeds.empty()) config.seeds = flags.seeds;
  if (!flags.loss_name.empty()) config.loss.kind = loss_kind_from_string(flags.loss_name);
  if (flags.alpha_pos) {
    config.loss.alpha_pos = *flags.alpha_pos;
    config.loss.alpha_unified.reset();
  }
  if (flags.alpha_neg) {
    config.loss.alpha_neg = *flags.alpha_neg;
    config.loss.alpha_unified.reset();
  }
  if (!flags.telemetry_mode.empty()) {
    config.telemetry = telemetry_selection_from_string(flags.telemetry_mode);
  }
  config.validate();
  return config;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

fs::path prepare_output(const ExperimentConfig& config) {
  fs::create_directories(config.output_dir);
  write_manifest(config, config.output_dir / "manifest.json");
  return config.output_dir;
}

int default_workers(std::size_t jobs) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int fallback = static_cast<int>(std::min<std::size_t>({4, hw, std::max<std::size_t>(jobs, 1)}));
  return worker_cap(fallback);
}

int cmd_generate(const CommonFlags& flags) {
  ExperimentConfig config = resolve_config(flags);
  if (config.dataset_path) {
    throw ConfigError("generate needs a dataset spec, not a dataset path");
  }
  const fs::path out = prepare_output(config);
  // Materialize the dataset a train run with seeds[0] would see.
  DatasetSpec spec = config.dataset;
  spec.seed = derive_run_seeds(config.seeds.front()).dataset_seed;
  const Dataset dataset = generate(spec);
  save_dataset(dataset, out);
  std::cout << "wrote " << (out / "train.csv").string() << " (" << dataset.train.size()
            << " rows), " << (out / "test.csv").string() << " (" << dataset.test.size()
            << " rows)\n";
  return 0;
}

int cmd_train(const CommonFlags& flags) {
  ExperimentConfig config = resolve_config(flags);
  const fs::path out = prepare_output(config);
  const std::uint64_t seed = config.seeds.front();
  const RunSeeds seeds = derive_run_seeds(seed);
  const Dataset dataset = resolve_dataset(config, seed);
  const RunArtifacts artifacts =
      run_training(dataset, config.model, config.optim, config.loss, seeds.init_seed,
                   seeds.shuffle_seed, out / "telemetry.jsonl", config.telemetry);
  save_checkpoint(*artifacts.checkpoint, out / "checkpoint.json");
  std::cout << "trained " << to_string(config.loss.kind) << " for "
            << artifacts.checkpoint->state.iteration << " iterations; checkpoint at "
            << (out / "checkpoint.json").string() << "\n";
  return 0;
}

int cmd_eval(const CommonFlags& flags, const std::string& checkpoint_path) {
  ExperimentConfig config = resolve_config(flags);
  const fs::path out = prepare_output(config);
  const Checkpoint checkpoint = load_checkpoint(checkpoint_path);
  const Dataset dataset = resolve_dataset(config, config.seeds.front());
  const EvalReport report = evaluate(checkpoint.state.model, dataset.test, dataset.groups);
  write_text(out / "report.json", to_json(report).dump(2) + "\n");
  write_text(out / "report.csv", eval_csv_header() + "\n" + eval_csv_row(report) + "\n");
  for (const std::string& warning : report.warnings) {
    std::cerr << "warning: " << warning << "\n";
  }
  std::cout << eval_csv_header() << "\n" << eval_csv_row(report) << "\n";
  return 0;
}

int cmd_compare(const CommonFlags& flags, const std::vector<std::string>& loss_names) {
  ExperimentConfig config = resolve_config(flags);
  const fs::path out = prepare_output(config);
  std::vector<LossConfig> losses;
  for (const std::string& name : loss_names) {
    LossConfig loss = config.loss;
    loss.kind = loss_kind_from_string(name);
    losses.push_back(loss);
  }
  const ComparisonResult result =
      run_compare(config, losses, default_workers(losses.size() * config.seeds.size()));
  write_text(out / "compare.csv", compare_csv(result));
  std::cout << compare_csv(result);
  return 0;
}

int cmd_sweep(const CommonFlags& flags, std::vector<double> alpha_pos,
              std::vector<double> alpha_neg) {
  ExperimentConfig config = resolve_config(flags);
  const fs::path out = prepare_output(config);
  if (alpha_pos.empty()) alpha_pos = {config.loss.effective_alpha_pos()};
  if (alpha_neg.empty()) alpha_neg = {config.loss.effective_alpha_neg()};
  const ComparisonResult result =
      run_sweep(config, alpha_pos, alpha_neg,
                default_workers(alpha_pos.size() * alpha_neg.size() * config.seeds.size()));
  write_text(out / "sweep.csv", sweep_csv(result));
  std::cout << sweep_csv(result);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Long-tailed classification benchmark with hardness-weighted losses"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  CommonFlags generate_flags, train_flags, eval_flags, compare_flags, sweep_flags;
  std::string checkpoint_path;
  std::vector<std::string> compare_losses;
  std::vector<double> sweep_alpha_pos, sweep_alpha_neg;

  CLI::App* generate = app.add_subcommand("generate", "Write dataset CSVs and manifest");
  add_common_flags(generate, generate_flags);

  CLI::App* train = app.add_subcommand("train", "Train one model; write checkpoint and telemetry");
  add_common_flags(train, train_flags);

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  add_common_flags(eval, eval_flags);
  eval->add_option("--checkpoint", checkpoint_path, "Checkpoint JSON path")->required();

  CLI::App* compare = app.add_subcommand("compare", "Paired-seed comparison of losses");
  add_common_flags(compare, compare_flags, /*single_loss=*/false);
  compare->add_option("--loss", compare_losses, "Loss to include (repeatable)")->required();
  compare->add_option("--alpha-pos", [&compare_flags](const std::vector<std::string>& v) {
    compare_flags.alpha_pos = std::stod(v.back());
    return true;
  }, "Positive factor for grad_libra rows");
  compare->add_option("--alpha-neg", [&compare_flags](const std::vector<std::string>& v) {
    compare_flags.alpha_neg = std::stod(v.back());
    return true;
  }, "Negative factor for grad_libra rows");

  CLI::App* sweep = app.add_subcommand("sweep", "Grid sweep over the modulating factors");
  add_common_flags(sweep, sweep_flags, /*single_loss=*/false);
  sweep->add_option("--alpha-pos", sweep_alpha_pos, "Grid values for the positive factor");
  sweep->add_option("--alpha-neg", sweep_alpha_neg, "Grid values for the negative factor");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (generate->parsed()) return cmd_generate(generate_flags);
    if (train->parsed()) return cmd_train(train_flags);
    if (eval->parsed()) return cmd_eval(eval_flags, checkpoint_path);
    if (compare->parsed()) return cmd_compare(compare_flags, compare_losses);
    if (sweep->parsed()) return cmd_sweep(sweep_flags, sweep_alpha_pos, sweep_alpha_neg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  }
  return 0;
}
