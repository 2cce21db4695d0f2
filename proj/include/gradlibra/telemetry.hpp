#pragma once

#include <filesystem>
#include <fstream>

#include "gradlibra/common.hpp"
#include "gradlibra/model.hpp"

namespace gradlibra {

// What the per-class positive/negative sums accumulate: the raw
// cross-entropy gradients (depend only on p and y, whatever loss is being
// trained) or the active loss's actual logit gradients.
enum class LedgerMode { RawCE, ActiveLoss };

LedgerMode ledger_mode_from_string(std::string_view name);  // "raw_ce" | "active_loss"
std::string to_string(LedgerMode mode);

// Running per-class sums of |batch-mean positive gradient| and |batch-mean
// negative gradient| across iterations, and their ratio r. r close to 1
// means balanced training; r close to 0 an overwhelmed tail class.
class GradientLedger {
 public:
  GradientLedger(int num_classes, LedgerMode mode);

  // probs/labels are the batch (N x C); grad_logits is d(total)/d(logits)
  // of the batch-mean-reduced loss, so its column sums are already batch
  // means of the per-sample gradients.
  void accumulate(const Matrix& probs, const Matrix& labels, const Matrix& grad_logits);

  // r_i = pos_sum_i / neg_sum_i; +infinity where neg_sum_i == 0.
  Vector ratio() const;

  const Vector& pos_sum() const { return pos_sum_; }
  const Vector& neg_sum() const { return neg_sum_; }
  long iterations() const { return iterations_; }
  LedgerMode mode() const { return mode_; }

 private:
  Vector pos_sum_;
  Vector neg_sum_;
  long iterations_ = 0;
  LedgerMode mode_;
};

struct WeightNormResult {
  Vector normalized;  // per-class L2 norm / mean norm; mean == 1
  bool degenerate = false;  // all-zero weights: sentinel vector of ones
};

// Normalized per-class L2 norms of the last classifier layer's weight rows.
WeightNormResult weight_norms(const Model& model);

// JSONL telemetry stream: one record per iteration with both ledgers'
// sums and ratios (infinite ratios serialized as null with a flag), one
// record per epoch with the normalized weight norms.
class TelemetryWriter {
 public:
  explicit TelemetryWriter(const std::filesystem::path& path);

  void write_iteration(long iteration, const GradientLedger* raw_ce,
                       const GradientLedger* active_loss);
  void write_epoch(int epoch, const WeightNormResult& norms);

 private:
  std::ofstream out_;
};

}  // namespace gradlibra
