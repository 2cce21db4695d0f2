#pragma once

// Independent reference implementations used as oracles. These deliberately
// avoid the library's loss code paths: plain per-row loops over clamped
// sigmoid probabilities.

#include <cmath>

#include "gradlibra/common.hpp"
#include "gradlibra/loss.hpp"
#include "gradlibra/rng.hpp"

namespace gradlibra::testing {

inline double ref_sigmoid(double z, double eps) {
  const double p = 1.0 / (1.0 + std::exp(-z));
  return std::min(std::max(p, eps), 1.0 - eps);
}

// Plain binary cross-entropy: sum over classes, mean over rows.
inline double ref_bce_total(const Matrix& z, const Matrix& y, double eps = 1e-12) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      const double p = ref_sigmoid(z(i, j), eps);
      total += y(i, j) == 1.0 ? -std::log(p) : -std::log(1.0 - p);
    }
  }
  return total / static_cast<double>(z.rows());
}

inline Matrix ref_bce_grad(const Matrix& z, const Matrix& y, double eps = 1e-12) {
  Matrix grad(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      grad(i, j) = (ref_sigmoid(z(i, j), eps) - y(i, j)) / static_cast<double>(z.rows());
    }
  }
  return grad;
}

// Single-factor hardness-weighted loss evaluated the unified way:
// g = |p - y|, G = g - alpha*sin(g), per-element loss G * (-log phat) with
// phat = p at positives and 1-p at negatives.
inline double ref_unified_total(const Matrix& z, const Matrix& y, double alpha,
                                double eps = 1e-12) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      const double p = ref_sigmoid(z(i, j), eps);
      const double g = std::abs(p - y(i, j));
      const double weight = g - alpha * std::sin(g);
      const double phat = y(i, j) == 1.0 ? p : 1.0 - p;
      total += weight * -std::log(phat);
    }
  }
  return total / static_cast<double>(z.rows());
}

// Scalar of the hardness-weighted loss with an externally frozen weight
// matrix; finite differences of this match the detached gradient mode.
inline double ref_frozen_weight_total(const Matrix& z, const Matrix& y, const Matrix& weights,
                                      double eps = 1e-12) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      const double p = ref_sigmoid(z(i, j), eps);
      const double phat = y(i, j) == 1.0 ? p : 1.0 - p;
      total += weights(i, j) * -std::log(phat);
    }
  }
  return total / static_cast<double>(z.rows());
}

// Full decoupled-factor scalar (weights move with z).
inline double ref_grad_libra_total(const Matrix& z, const Matrix& y, double alpha_pos,
                                   double alpha_neg, double eps = 1e-12) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      const double p = ref_sigmoid(z(i, j), eps);
      if (y(i, j) == 1.0) {
        total += ((1.0 - p) - alpha_pos * std::sin(1.0 - p)) * -std::log(p);
      } else {
        total += (p - alpha_neg * std::sin(p)) * -std::log(1.0 - p);
      }
    }
  }
  return total / static_cast<double>(z.rows());
}

inline double ref_focal_total(const Matrix& z, const Matrix& y, double gamma, bool balanced,
                              double focal_alpha, double eps = 1e-12) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      const double p = ref_sigmoid(z(i, j), eps);
      const bool pos = y(i, j) == 1.0;
      const double pt = pos ? p : 1.0 - p;
      const double w = balanced ? (pos ? focal_alpha : 1.0 - focal_alpha) : 1.0;
      total += -w * std::pow(1.0 - pt, gamma) * std::log(pt);
    }
  }
  return total / static_cast<double>(z.rows());
}

// Random (logits, labels) pair; labels one-hot or all-zero per row.
inline std::pair<Matrix, Matrix> random_case(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                                             double logit_range = 6.0) {
  Matrix z(rows, cols), y = Matrix::Zero(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) z(i, j) = rng.next_uniform(-logit_range, logit_range);
    const std::uint64_t pick = rng.next_below(static_cast<std::uint64_t>(cols) + 1);
    if (pick < static_cast<std::uint64_t>(cols)) y(i, static_cast<Eigen::Index>(pick)) = 1.0;
  }
  return {std::move(z), std::move(y)};
}

}  // namespace gradlibra::testing
