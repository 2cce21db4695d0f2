#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "gradlibra/common.hpp"

namespace gradlibra {

enum class LossKind { GradLibra, CrossEntropy, Focal, FocalStar };

// Accepts "grad_libra", "ce", "focal", "focal_star".
LossKind loss_kind_from_string(std::string_view name);
std::string to_string(LossKind kind);

// Loss selector and modulating factors. alpha_unified, when set, forces
// alpha_pos == alpha_neg and mirrors the single-factor weighting.
struct LossConfig {
  LossKind kind = LossKind::GradLibra;
  double alpha_pos = 0.8;
  double alpha_neg = 0.8;
  std::optional<double> alpha_unified;
  // When false (default) the hardness weight is treated as a constant
  // multiplier recomputed each forward pass; when true gradients flow
  // through the weight as well.
  bool differentiate_weight = false;
  double focal_gamma = 2.0;
  double focal_alpha = 0.25;
  double prob_clamp_eps = 1e-12;

  double effective_alpha_pos() const { return alpha_unified.value_or(alpha_pos); }
  double effective_alpha_neg() const { return alpha_unified.value_or(alpha_neg); }
  void validate() const;
};

// total is the per-element loss summed over classes and averaged over rows.
// per_class_pos / per_class_neg split the same reduction by label
// membership, so total == per_class_pos.sum() + per_class_neg.sum().
// grad_logits is d(total)/d(logits).
struct LossOutput {
  double total = 0.0;
  Vector per_class_pos;
  Vector per_class_neg;
  Matrix grad_logits;
};

// p = 1/(1+exp(-z)) clamped to [eps, 1-eps]. Requires finite input and
// 0 < eps < 0.5.
Matrix sigmoid(const Matrix& logits, double eps);

// Per-element gradient norm of the binary cross-entropy w.r.t. the logit:
// g = |p - y|.
Matrix grad_norm(const Matrix& probs, const Matrix& labels);

// Hardness weight G = g - alpha*sin(g), elementwise. Monotone in g and
// bounded by 0 <= G <= g for alpha in (0, 1].
Matrix hardness_weight(const Matrix& g, double alpha);

// Entries must be 0 or 1 with at most one positive per row; all-zero rows
// are background negatives.
void validate_labels(const Matrix& labels);

LossOutput grad_libra_loss(const Matrix& logits, const Matrix& labels, const LossConfig& cfg);
LossOutput cross_entropy_loss(const Matrix& logits, const Matrix& labels, const LossConfig& cfg);
LossOutput focal_loss(const Matrix& logits, const Matrix& labels, const LossConfig& cfg);

// Dispatches on cfg.kind.
LossOutput evaluate_loss(const Matrix& logits, const Matrix& labels, const LossConfig& cfg);

}  // namespace gradlibra
