#include "gradlibra/trainer.hpp"

#include <cmath>
#include <numeric>

#include "gradlibra/rng.hpp"

namespace gradlibra {

void OptimSpec::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr_decay_factor > 0.0)) throw ConfigError("lr_decay_factor must be > 0");
  if (!(warmup_ratio > 0.0 && warmup_ratio <= 1.0)) throw ConfigError("warmup_ratio must be in (0, 1]");
  if (warmup_iters < 0) throw ConfigError("warmup_iters must be >= 0");
  for (std::size_t i = 0; i < lr_decay_epochs.size(); ++i) {
    if (lr_decay_epochs[i] >= epochs && epochs > 0) {
      throw ConfigError("lr_decay_epochs must be < epochs");
    }
    if (i > 0 && lr_decay_epochs[i] <= lr_decay_epochs[i - 1]) {
      throw ConfigError("lr_decay_epochs must be strictly increasing");
    }
  }
}

double learning_rate_at(const OptimSpec& optim, long iteration, int epoch) {
  double base = optim.lr;
  for (const int e : optim.lr_decay_epochs) {
    if (epoch >= e) base *= optim.lr_decay_factor;
  }
  if (optim.warmup_iters > 0 && iteration < optim.warmup_iters) {
    const double t = static_cast<double>(iteration) / static_cast<double>(optim.warmup_iters);
    return base * (optim.warmup_ratio + (1.0 - optim.warmup_ratio) * t);
  }
  return base;
}

TrainState init_state(const ModelSpec& spec, std::uint64_t shuffle_seed) {
  TrainState state{Model(spec), Vector(), 0, 0, shuffle_seed};
  state.momentum_buffers = Vector::Zero(state.model.param_count());
  return state;
}

StepResult backward_step(TrainState& state, const Matrix& features, const Matrix& labels,
                         const LossConfig& loss_cfg, const OptimSpec& optim) {
  Model::Cache cache;
  Matrix logits = state.model.forward(features, cache);
  if (!logits.allFinite()) {
    throw NumericError("non-finite logits at iteration " + std::to_string(state.iteration) +
                       " (epoch " + std::to_string(state.epoch) +
                       ", |params| = " + std::to_string(state.model.params().norm()) + ")");
  }
  LossOutput loss = evaluate_loss(logits, labels, loss_cfg);
  if (!std::isfinite(loss.total)) {
    throw NumericError("non-finite loss " + std::to_string(loss.total) + " at iteration " +
                       std::to_string(state.iteration) + " (epoch " +
                       std::to_string(state.epoch) + ")");
  }
  const Vector grad = state.model.backward(features, cache, loss.grad_logits);
  const double lr = learning_rate_at(optim, state.iteration, state.epoch);

  Vector& v = state.momentum_buffers;
  Vector& theta = state.model.params();
  v = optim.momentum * v + grad +
      optim.weight_decay * state.model.weight_decay_mask().cwiseProduct(theta);
  theta -= lr * v;
  ++state.iteration;

  StepResult result;
  result.loss = std::move(loss);
  result.lr = lr;
  result.logits = std::move(logits);
  return result;
}

TrainState train(const SampleBatch& trainset, const ModelSpec& model_spec,
                 const OptimSpec& optim, const LossConfig& loss_cfg, const TrainHooks& hooks,
                 std::uint64_t shuffle_seed) {
  model_spec.validate();
  optim.validate();
  loss_cfg.validate();
  if (trainset.features.cols() != model_spec.feature_dim ||
      trainset.labels.cols() != model_spec.num_classes) {
    throw ConfigError("train: dataset dims do not match model spec");
  }

  TrainState state = init_state(model_spec, shuffle_seed);
  const Eigen::Index N = trainset.size();
  if (N == 0 && optim.epochs > 0) throw ConfigError("train: empty training set");

  std::vector<std::int64_t> order(N);
  std::iota(order.begin(), order.end(), 0);
  const Rng shuffle_root(shuffle_seed);

  Matrix batch_x, batch_y;
  for (int epoch = 0; epoch < optim.epochs; ++epoch) {
    state.epoch = epoch;
    Rng rng = shuffle_root.split(static_cast<std::uint64_t>(epoch));
    shuffle(order, rng);

    for (Eigen::Index start = 0; start < N; start += optim.batch_size) {
      const Eigen::Index b = std::min<Eigen::Index>(optim.batch_size, N - start);
      batch_x.resize(b, trainset.features.cols());
      batch_y.resize(b, trainset.labels.cols());
      for (Eigen::Index k = 0; k < b; ++k) {
        batch_x.row(k) = trainset.features.row(order[start + k]);
        batch_y.row(k) = trainset.labels.row(order[start + k]);
      }
      const long completed = state.iteration;
      StepResult step = backward_step(state, batch_x, batch_y, loss_cfg, optim);
      if (hooks.on_iteration) {
        const Matrix probs = sigmoid(step.logits, loss_cfg.prob_clamp_eps);
        hooks.on_iteration(
            IterationEvent{completed, epoch, step.lr, step.loss, probs, batch_y});
      }
    }
    if (hooks.on_epoch) hooks.on_epoch(EpochEvent{epoch, state});
  }
  return state;
}

}  // namespace gradlibra
