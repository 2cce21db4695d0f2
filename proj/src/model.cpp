#include "gradlibra/model.hpp"

#include <cmath>

#include "gradlibra/rng.hpp"

namespace gradlibra {

Arch arch_from_string(std::string_view name) {
  if (name == "linear") return Arch::Linear;
  if (name == "mlp1") return Arch::MLP1;
  throw ConfigError("unknown arch: " + std::string(name));
}

std::string to_string(Arch arch) {
  switch (arch) {
    case Arch::Linear: return "linear";
    case Arch::MLP1: return "mlp1";
  }
  throw ConfigError("invalid arch value");
}

void ModelSpec::validate() const {
  if (feature_dim < 1) throw ConfigError("feature_dim must be >= 1");
  if (num_classes < 1) throw ConfigError("num_classes must be >= 1");
  if (arch == Arch::MLP1 && hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
}

Model::Model(const ModelSpec& spec) : spec_(spec) {
  spec_.validate();
  const Eigen::Index D = spec_.feature_dim;
  const Eigen::Index C = spec_.num_classes;
  const Eigen::Index H = spec_.hidden_dim;

  Eigen::Index offset = 0;
  auto add = [&](std::string name, Eigen::Index rows, Eigen::Index cols, bool is_weight) {
    segments_.push_back({std::move(name), offset, rows, cols, is_weight});
    offset += rows * cols;
  };
  if (spec_.arch == Arch::Linear) {
    add("W", C, D, true);
    add("b", C, 1, false);
  } else {
    add("W1", H, D, true);
    add("b1", H, 1, false);
    add("W2", C, H, true);
    add("b2", C, 1, false);
  }
  params_ = Vector::Zero(offset);
  wd_mask_ = Vector::Zero(offset);

  // Seeded uniform init scaled by 1/sqrt(fan_in); biases stay zero.
  Rng rng(spec_.init_seed);
  for (std::size_t s = 0; s < segments_.size(); ++s) {
    const Segment& seg = segments_[s];
    if (!seg.is_weight) continue;
    const double scale = 1.0 / std::sqrt(static_cast<double>(seg.cols));
    for (Eigen::Index k = 0; k < seg.rows * seg.cols; ++k) {
      params_(seg.offset + k) = rng.next_uniform(-scale, scale);
      wd_mask_(seg.offset + k) = 1.0;
    }
  }
}

Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
Model::weight(std::size_t segment) {
  const Segment& seg = segments_[segment];
  return {params_.data() + seg.offset, seg.rows, seg.cols};
}

Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
Model::weight(std::size_t segment) const {
  const Segment& seg = segments_[segment];
  return {params_.data() + seg.offset, seg.rows, seg.cols};
}

Matrix Model::forward(const Matrix& features) const {
  Cache cache;
  return forward(features, cache);
}

Matrix Model::forward(const Matrix& features, Cache& cache) const {
  if (features.cols() != spec_.feature_dim) {
    throw ConfigError("forward: feature dim mismatch: got " + std::to_string(features.cols()) +
                      ", model expects " + std::to_string(spec_.feature_dim));
  }
  if (spec_.arch == Arch::Linear) {
    return (features * weight(0).transpose()).rowwise() + weight(1).col(0).transpose();
  }
  cache.hidden_pre = (features * weight(0).transpose()).rowwise() + weight(1).col(0).transpose();
  cache.hidden_act = cache.hidden_pre.cwiseMax(0.0);
  return (cache.hidden_act * weight(2).transpose()).rowwise() + weight(3).col(0).transpose();
}

Vector Model::backward(const Matrix& features, const Cache& cache,
                       const Matrix& grad_logits) const {
  if (grad_logits.cols() != spec_.num_classes || grad_logits.rows() != features.rows()) {
    throw ConfigError("backward: grad_logits shape mismatch");
  }
  Vector grad = Vector::Zero(params_.size());
  auto seg_map = [&](std::size_t s) {
    const Segment& seg = segments_[s];
    return Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        grad.data() + seg.offset, seg.rows, seg.cols);
  };
  if (spec_.arch == Arch::Linear) {
    seg_map(0) = grad_logits.transpose() * features;
    seg_map(1) = grad_logits.colwise().sum().transpose();
    return grad;
  }
  seg_map(2) = grad_logits.transpose() * cache.hidden_act;
  seg_map(3) = grad_logits.colwise().sum().transpose();
  Matrix grad_hidden = grad_logits * weight(2);
  grad_hidden = (cache.hidden_pre.array() > 0.0).select(grad_hidden, 0.0);
  seg_map(0) = grad_hidden.transpose() * features;
  seg_map(1) = grad_hidden.colwise().sum().transpose();
  return grad;
}

Matrix Model::last_layer_weights() const {
  return spec_.arch == Arch::Linear ? Matrix(weight(0)) : Matrix(weight(2));
}

}  // namespace gradlibra
