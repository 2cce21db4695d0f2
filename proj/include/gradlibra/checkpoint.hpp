#pragma once

#include <filesystem>

#include "gradlibra/trainer.hpp"

namespace gradlibra {

struct Checkpoint {
  ModelSpec model_spec;
  OptimSpec optim_spec;
  TrainState state;
};

// Versioned JSON checkpoint; doubles round-trip exactly. Writes are byte
// deterministic for identical inputs.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gradlibra
