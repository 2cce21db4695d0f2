#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gradlibra/dataset.hpp"
#include "gradlibra/loss.hpp"
#include "gradlibra/model.hpp"

namespace gradlibra {

// SGD schedule following the momentum/weight-decay/step-decay recipe with a
// linear warmup ramp.
struct OptimSpec {
  double lr = 0.002;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int epochs = 12;
  int batch_size = 32;
  std::vector<int> lr_decay_epochs{8, 11};
  double lr_decay_factor = 0.1;
  double warmup_ratio = 0.001;
  long warmup_iters = 500;

  void validate() const;
};

// Effective learning rate for a given iteration/epoch: linear ramp from
// warmup_ratio*lr over warmup_iters iterations, then the step-decayed base
// rate. At iteration == warmup_iters the base rate is returned exactly.
double learning_rate_at(const OptimSpec& optim, long iteration, int epoch);

struct TrainState {
  Model model;
  Vector momentum_buffers;
  long iteration = 0;
  int epoch = 0;
  std::uint64_t shuffle_seed = 0;
};

TrainState init_state(const ModelSpec& spec, std::uint64_t shuffle_seed = 0);

struct StepResult {
  LossOutput loss;
  double lr = 0.0;
  Matrix logits;
};

// One SGD step on a batch: v <- momentum*v + grad + weight_decay*theta
// (weights only), theta <- theta - lr_t*v. Throws NumericError with a
// diagnostic snapshot if the loss or logits go non-finite.
StepResult backward_step(TrainState& state, const Matrix& features, const Matrix& labels,
                         const LossConfig& loss_cfg, const OptimSpec& optim);

struct IterationEvent {
  long iteration;  // 0-based index of the completed step
  int epoch;
  double lr;
  const LossOutput& loss;
  const Matrix& probs;
  const Matrix& labels;
};

struct EpochEvent {
  int epoch;  // just completed
  const TrainState& state;
};

struct TrainHooks {
  std::function<void(const IterationEvent&)> on_iteration;
  std::function<void(const EpochEvent&)> on_epoch;
};

// Full training loop: epochs x ceil(N/batch) steps with a fresh shuffled
// order per epoch (seeded per epoch from shuffle_seed). Deterministic given
// the seeds.
TrainState train(const SampleBatch& trainset, const ModelSpec& model_spec,
                 const OptimSpec& optim, const LossConfig& loss_cfg,
                 const TrainHooks& hooks = {}, std::uint64_t shuffle_seed = 0);

}  // namespace gradlibra
