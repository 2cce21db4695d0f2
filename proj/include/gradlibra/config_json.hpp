#pragma once

// JSON (de)serialization for the spec structs, shared by checkpoints,
// manifests and the CLI config file.

#include <json.hpp>

#include "gradlibra/dataset.hpp"
#include "gradlibra/loss.hpp"
#include "gradlibra/model.hpp"
#include "gradlibra/trainer.hpp"

namespace gradlibra {

nlohmann::ordered_json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const OptimSpec& spec);
OptimSpec optim_spec_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const LossConfig& cfg);
LossConfig loss_config_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const DatasetSpec& spec);
DatasetSpec dataset_spec_from_json(const nlohmann::json& j);

}  // namespace gradlibra
