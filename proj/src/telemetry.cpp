#include "gradlibra/telemetry.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

namespace gradlibra {

LedgerMode ledger_mode_from_string(std::string_view name) {
  if (name == "raw_ce") return LedgerMode::RawCE;
  if (name == "active_loss") return LedgerMode::ActiveLoss;
  throw ConfigError("unknown ledger mode: " + std::string(name));
}

std::string to_string(LedgerMode mode) {
  switch (mode) {
    case LedgerMode::RawCE: return "raw_ce";
    case LedgerMode::ActiveLoss: return "active_loss";
  }
  throw ConfigError("invalid ledger mode value");
}

GradientLedger::GradientLedger(int num_classes, LedgerMode mode)
    : pos_sum_(Vector::Zero(num_classes)), neg_sum_(Vector::Zero(num_classes)), mode_(mode) {
  if (num_classes < 1) throw ConfigError("GradientLedger: num_classes must be >= 1");
}

void GradientLedger::accumulate(const Matrix& probs, const Matrix& labels,
                                const Matrix& grad_logits) {
  require_same_shape(probs, labels, "ledger");
  if (labels.cols() != pos_sum_.size()) {
    throw ConfigError("ledger: class count mismatch");
  }
  const Eigen::Index n = probs.rows();
  if (n == 0) {
    ++iterations_;
    return;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Eigen::Index j = 0; j < labels.cols(); ++j) {
    double pos = 0.0, neg = 0.0;
    if (mode_ == LedgerMode::RawCE) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (labels(i, j) == 1.0) {
          pos += probs(i, j) - 1.0;
        } else {
          neg += probs(i, j);
        }
      }
      pos *= inv_n;
      neg *= inv_n;
    } else {
      require_same_shape(probs, grad_logits, "ledger grad_logits");
      // grad_logits carries the 1/N of the batch-mean reduction, so the
      // plain column split already is the batch mean.
      for (Eigen::Index i = 0; i < n; ++i) {
        if (labels(i, j) == 1.0) {
          pos += grad_logits(i, j);
        } else {
          neg += grad_logits(i, j);
        }
      }
    }
    pos_sum_(j) += std::abs(pos);
    neg_sum_(j) += std::abs(neg);
  }
  ++iterations_;
}

Vector GradientLedger::ratio() const {
  Vector r(pos_sum_.size());
  for (Eigen::Index j = 0; j < r.size(); ++j) {
    r(j) = neg_sum_(j) == 0.0 ? std::numeric_limits<double>::infinity()
                              : pos_sum_(j) / neg_sum_(j);
  }
  return r;
}

WeightNormResult weight_norms(const Model& model) {
  const Matrix rows = model.last_layer_weights();
  Vector norms = rows.rowwise().norm();
  const double mean = norms.mean();
  if (mean == 0.0) {
    return {Vector::Ones(norms.size()), true};
  }
  return {norms / mean, false};
}

namespace {

nlohmann::ordered_json ledger_to_json(const GradientLedger& ledger) {
  nlohmann::ordered_json j;
  j["pos_sum"] = std::vector<double>(ledger.pos_sum().begin(), ledger.pos_sum().end());
  j["neg_sum"] = std::vector<double>(ledger.neg_sum().begin(), ledger.neg_sum().end());
  const Vector r = ledger.ratio();
  nlohmann::ordered_json values = nlohmann::ordered_json::array();
  std::vector<bool> infinite;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (std::isinf(r(i))) {
      values.push_back(nullptr);
      infinite.push_back(true);
    } else {
      values.push_back(r(i));
      infinite.push_back(false);
    }
  }
  j["r"] = values;
  j["r_infinite"] = infinite;
  return j;
}

}  // namespace

TelemetryWriter::TelemetryWriter(const std::filesystem::path& path) : out_(path) {
  if (!out_) throw DataError("cannot open for writing: " + path.string());
}

void TelemetryWriter::write_iteration(long iteration, const GradientLedger* raw_ce,
                                      const GradientLedger* active_loss) {
  nlohmann::ordered_json j;
  j["iteration"] = iteration;
  if (raw_ce) j["raw_ce"] = ledger_to_json(*raw_ce);
  if (active_loss) j["active_loss"] = ledger_to_json(*active_loss);
  out_ << j.dump() << "\n";
}

void TelemetryWriter::write_epoch(int epoch, const WeightNormResult& norms) {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["weight_norms"] = std::vector<double>(norms.normalized.begin(), norms.normalized.end());
  j["degenerate"] = norms.degenerate;
  out_ << j.dump() << "\n";
}

}  // namespace gradlibra
