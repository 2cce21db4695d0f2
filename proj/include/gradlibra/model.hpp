#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gradlibra/common.hpp"

namespace gradlibra {

enum class Arch { Linear, MLP1 };

Arch arch_from_string(std::string_view name);  // "linear" | "mlp1"
std::string to_string(Arch arch);

struct ModelSpec {
  Arch arch = Arch::Linear;
  int hidden_dim = 32;  // MLP1 only
  int feature_dim = 0;
  int num_classes = 0;
  std::uint64_t init_seed = 0;

  void validate() const;
};

// Multi-binary-classifier model over a flat parameter vector: either a
// single linear layer or one hidden ReLU layer. The flat layout keeps the
// optimizer and checkpointing uniform across architectures.
class Model {
 public:
  struct Segment {
    std::string name;
    Eigen::Index offset;
    Eigen::Index rows;
    Eigen::Index cols;  // 1 for biases
    bool is_weight;
  };

  struct Cache {
    Matrix hidden_pre;  // N x H, MLP1 only
    Matrix hidden_act;
  };

  explicit Model(const ModelSpec& spec);

  Matrix forward(const Matrix& features) const;
  Matrix forward(const Matrix& features, Cache& cache) const;

  // Gradient of a scalar loss w.r.t. the flat parameter vector, given
  // d(loss)/d(logits) and the cache from the matching forward pass.
  Vector backward(const Matrix& features, const Cache& cache, const Matrix& grad_logits) const;

  const ModelSpec& spec() const { return spec_; }
  const Vector& params() const { return params_; }
  Vector& params() { return params_; }
  Eigen::Index param_count() const { return params_.size(); }
  const std::vector<Segment>& layout() const { return segments_; }

  // 1 for weight entries, 0 for biases; used to restrict weight decay.
  const Vector& weight_decay_mask() const { return wd_mask_; }

  // Per-class weight rows of the last linear layer (C x in_dim).
  Matrix last_layer_weights() const;

 private:
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
  weight(std::size_t segment);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
  weight(std::size_t segment) const;

  ModelSpec spec_;
  std::vector<Segment> segments_;
  Vector params_;
  Vector wd_mask_;
};

}  // namespace gradlibra
