#include "gradlibra/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "gradlibra/config_json.hpp"

namespace gradlibra {

namespace {
constexpr int kCheckpointVersion = 1;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["format"] = "gradlibra-checkpoint";
  j["version"] = kCheckpointVersion;
  j["tool_version"] = kVersion;
  j["model"] = to_json(checkpoint.model_spec);
  j["optim"] = to_json(checkpoint.optim_spec);
  j["iteration"] = checkpoint.state.iteration;
  j["epoch"] = checkpoint.state.epoch;
  j["shuffle_seed"] = checkpoint.state.shuffle_seed;
  j["params"] = std::vector<double>(checkpoint.state.model.params().begin(),
                                    checkpoint.state.model.params().end());
  j["momentum_buffers"] = std::vector<double>(checkpoint.state.momentum_buffers.begin(),
                                              checkpoint.state.momentum_buffers.end());
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw DataError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "gradlibra-checkpoint") {
      throw DataError(path.string() + ": not a gradlibra checkpoint");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw DataError(path.string() + ": unsupported checkpoint version");
    }
    const ModelSpec model_spec = model_spec_from_json(j.at("model"));
    Checkpoint checkpoint{model_spec, optim_spec_from_json(j.at("optim")),
                          init_state(model_spec)};
    checkpoint.state.iteration = j.at("iteration").get<long>();
    checkpoint.state.epoch = j.at("epoch").get<int>();
    checkpoint.state.shuffle_seed = j.at("shuffle_seed").get<std::uint64_t>();
    const auto params = j.at("params").get<std::vector<double>>();
    const auto momentum = j.at("momentum_buffers").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(params.size()) != checkpoint.state.model.param_count() ||
        momentum.size() != params.size()) {
      throw DataError(path.string() + ": parameter count does not match model spec");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      checkpoint.state.model.params()(static_cast<Eigen::Index>(i)) = params[i];
      checkpoint.state.momentum_buffers(static_cast<Eigen::Index>(i)) = momentum[i];
    }
    return checkpoint;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace gradlibra
