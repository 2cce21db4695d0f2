#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace gradlibra {

inline constexpr const char* kVersion = "0.1.0";

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Bad configuration or invalid arguments: alpha out of range, shape
// mismatches, inconsistent specs.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// File and format problems: missing datasets, malformed CSV rows.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numeric failures during training (non-finite loss or logits).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ConfigError(std::string(what) + ": shape mismatch (" +
                      std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                      std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
  }
}

}  // namespace gradlibra
