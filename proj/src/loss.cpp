#include "gradlibra/loss.hpp"

#include <cmath>

namespace gradlibra {

LossKind loss_kind_from_string(std::string_view name) {
  if (name == "grad_libra") return LossKind::GradLibra;
  if (name == "ce") return LossKind::CrossEntropy;
  if (name == "focal") return LossKind::Focal;
  if (name == "focal_star") return LossKind::FocalStar;
  throw ConfigError("unknown loss kind: " + std::string(name));
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::GradLibra: return "grad_libra";
    case LossKind::CrossEntropy: return "ce";
    case LossKind::Focal: return "focal";
    case LossKind::FocalStar: return "focal_star";
  }
  throw ConfigError("invalid loss kind value");
}

void LossConfig::validate() const {
  auto check_alpha = [](double a, const char* name) {
    if (!(a > 0.0 && a <= 1.0)) {
      throw ConfigError(std::string(name) + " must be in (0, 1], got " + std::to_string(a));
    }
  };
  check_alpha(effective_alpha_pos(), "alpha_pos");
  check_alpha(effective_alpha_neg(), "alpha_neg");
  if (alpha_unified && (alpha_pos != *alpha_unified || alpha_neg != *alpha_unified)) {
    throw ConfigError("alpha_unified requires alpha_pos == alpha_neg == alpha_unified");
  }
  if (!(focal_gamma >= 0.0)) throw ConfigError("focal_gamma must be >= 0");
  if (!(focal_alpha > 0.0 && focal_alpha < 1.0)) throw ConfigError("focal_alpha must be in (0, 1)");
  if (!(prob_clamp_eps > 0.0 && prob_clamp_eps < 0.5)) {
    throw ConfigError("prob_clamp_eps must be in (0, 0.5)");
  }
}

Matrix sigmoid(const Matrix& logits, double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw ConfigError("sigmoid eps must be in (0, 0.5)");
  if (!logits.allFinite()) throw ConfigError("sigmoid: non-finite logits");
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      const double v = 1.0 / (1.0 + std::exp(-logits(i, j)));
      p(i, j) = std::min(std::max(v, eps), 1.0 - eps);
    }
  }
  return p;
}

Matrix grad_norm(const Matrix& probs, const Matrix& labels) {
  require_same_shape(probs, labels, "grad_norm");
  return (probs - labels).cwiseAbs();
}

Matrix hardness_weight(const Matrix& g, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in (0, 1]");
  if ((g.array() < 0.0).any() || (g.array() > 1.0).any()) {
    throw ConfigError("hardness_weight: gradient norms must lie in [0, 1]");
  }
  return g.array() - alpha * g.array().sin();
}

void validate_labels(const Matrix& labels) {
  for (Eigen::Index i = 0; i < labels.rows(); ++i) {
    int positives = 0;
    for (Eigen::Index j = 0; j < labels.cols(); ++j) {
      const double y = labels(i, j);
      if (y != 0.0 && y != 1.0) {
        throw ConfigError("labels must be 0 or 1 (row " + std::to_string(i) + ")");
      }
      if (y == 1.0) ++positives;
    }
    if (positives > 1) {
      throw ConfigError("labels must have at most one positive per row (row " +
                        std::to_string(i) + ")");
    }
  }
}

namespace {

struct Accumulator {
  explicit Accumulator(Eigen::Index n, Eigen::Index c)
      : n_rows(n), pos(Vector::Zero(c)), neg(Vector::Zero(c)), grad(Matrix::Zero(n, c)) {}

  Eigen::Index n_rows;
  Vector pos;
  Vector neg;
  Matrix grad;

  LossOutput finish() {
    LossOutput out;
    const double inv_n = n_rows > 0 ? 1.0 / static_cast<double>(n_rows) : 0.0;
    out.per_class_pos = pos * inv_n;
    out.per_class_neg = neg * inv_n;
    out.total = out.per_class_pos.sum() + out.per_class_neg.sum();
    out.grad_logits = grad * inv_n;
    return out;
  }
};

void check_loss_inputs(const Matrix& logits, const Matrix& labels) {
  require_same_shape(logits, labels, "loss");
  if (!logits.allFinite()) throw ConfigError("loss: non-finite logits");
  validate_labels(labels);
}

// Shared Grad-Libra / weighted-BCE core. With override_weight_one the
// hardness weight is replaced by 1, which is exactly binary cross-entropy.
LossOutput weighted_bce(const Matrix& logits, const Matrix& labels, const LossConfig& cfg,
                        bool override_weight_one) {
  check_loss_inputs(logits, labels);
  const Matrix p = sigmoid(logits, cfg.prob_clamp_eps);
  const double a_pos = cfg.effective_alpha_pos();
  const double a_neg = cfg.effective_alpha_neg();

  Accumulator acc(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      const double pij = p(i, j);
      const double dp_dz = pij * (1.0 - pij);
      if (labels(i, j) == 1.0) {
        const double g = 1.0 - pij;
        const double weight = override_weight_one ? 1.0 : g - a_pos * std::sin(g);
        const double ce = -std::log(pij);
        acc.pos(j) += weight * ce;
        double dloss_dp = -weight / pij;
        if (cfg.differentiate_weight && !override_weight_one) {
          // d(weight)/dp = -(1 - a_pos*cos(1-p))
          dloss_dp += -(1.0 - a_pos * std::cos(g)) * ce;
        }
        acc.grad(i, j) = dloss_dp * dp_dz;
      } else {
        const double g = pij;
        const double weight = override_weight_one ? 1.0 : g - a_neg * std::sin(g);
        const double ce = -std::log(1.0 - pij);
        acc.neg(j) += weight * ce;
        double dloss_dp = weight / (1.0 - pij);
        if (cfg.differentiate_weight && !override_weight_one) {
          dloss_dp += (1.0 - a_neg * std::cos(g)) * ce;
        }
        acc.grad(i, j) = dloss_dp * dp_dz;
      }
    }
  }
  return acc.finish();
}

}  // namespace

LossOutput grad_libra_loss(const Matrix& logits, const Matrix& labels, const LossConfig& cfg) {
  cfg.validate();
  return weighted_bce(logits, labels, cfg, /*override_weight_one=*/false);
}

LossOutput cross_entropy_loss(const Matrix& logits, const Matrix& labels, const LossConfig& cfg) {
  cfg.validate();
  return weighted_bce(logits, labels, cfg, /*override_weight_one=*/true);
}

LossOutput focal_loss(const Matrix& logits, const Matrix& labels, const LossConfig& cfg) {
  cfg.validate();
  check_loss_inputs(logits, labels);
  const Matrix p = sigmoid(logits, cfg.prob_clamp_eps);
  const double gamma = cfg.focal_gamma;
  const bool balanced = cfg.kind == LossKind::FocalStar;

  Accumulator acc(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      const double pij = p(i, j);
      const bool positive = labels(i, j) == 1.0;
      const double pt = positive ? pij : 1.0 - pij;
      const double w = balanced ? (positive ? cfg.focal_alpha : 1.0 - cfg.focal_alpha) : 1.0;
      const double u = 1.0 - pt;
      const double pow_u = gamma == 0.0 ? 1.0 : std::pow(u, gamma);
      const double loss = -w * pow_u * std::log(pt);
      (positive ? acc.pos(j) : acc.neg(j)) += loss;

      // Full derivative, modulating factor included.
      const double dpow = gamma == 0.0 ? 0.0 : gamma * std::pow(u, gamma - 1.0);
      const double dloss_dpt = w * dpow * std::log(pt) - w * pow_u / pt;
      const double dpt_dz = positive ? pij * (1.0 - pij) : -pij * (1.0 - pij);
      acc.grad(i, j) = dloss_dpt * dpt_dz;
    }
  }
  return acc.finish();
}

LossOutput evaluate_loss(const Matrix& logits, const Matrix& labels, const LossConfig& cfg) {
  switch (cfg.kind) {
    case LossKind::GradLibra: return grad_libra_loss(logits, labels, cfg);
    case LossKind::CrossEntropy: return cross_entropy_loss(logits, labels, cfg);
    case LossKind::Focal:
    case LossKind::FocalStar: return focal_loss(logits, labels, cfg);
  }
  throw ConfigError("invalid loss kind value");
}

}  // namespace gradlibra
