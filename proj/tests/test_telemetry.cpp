#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gradlibra/loss.hpp"
#include "gradlibra/rng.hpp"
#include "gradlibra/telemetry.hpp"
#include "support/reference.hpp"
#include "support/tempdir.hpp"

using namespace gradlibra;
using namespace gradlibra::testing;

TEST_SUITE_BEGIN("telemetry");

TEST_CASE("two-sample batch accumulates the hand-computed sums") {
  // Class 0: (y=1, p=0.6) and (y=0, p=0.3).
  Matrix probs(2, 1), labels(2, 1);
  probs << 0.6, 0.3;
  labels << 1.0, 0.0;

  GradientLedger ledger(1, LedgerMode::RawCE);
  ledger.accumulate(probs, labels, Matrix());
  CHECK(ledger.pos_sum()(0) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(ledger.neg_sum()(0) == doctest::Approx(0.15).epsilon(1e-14));
  CHECK(ledger.ratio()(0) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("no positives means a zero positive increment") {
  Matrix probs(2, 1), labels = Matrix::Zero(2, 1);
  probs << 0.4, 0.7;
  GradientLedger ledger(1, LedgerMode::RawCE);
  ledger.accumulate(probs, labels, Matrix());
  CHECK(ledger.pos_sum()(0) == 0.0);
  CHECK(ledger.neg_sum()(0) > 0.0);
}

TEST_CASE("two identical batches double the sums exactly") {
  Rng rng(3);
  auto [z, y] = random_case(rng, 5, 3);
  const Matrix p = sigmoid(z, 1e-12);
  GradientLedger once(3, LedgerMode::RawCE);
  once.accumulate(p, y, Matrix());
  const Vector pos1 = once.pos_sum(), neg1 = once.neg_sum();
  once.accumulate(p, y, Matrix());
  CHECK(once.pos_sum() == 2.0 * pos1);
  CHECK(once.neg_sum() == 2.0 * neg1);
  CHECK(once.iterations() == 2);
}

TEST_CASE("active-loss mode with CE gradients equals raw-CE mode") {
  Rng rng(5);
  LossConfig cfg;
  cfg.kind = LossKind::CrossEntropy;
  GradientLedger raw(4, LedgerMode::RawCE);
  GradientLedger active(4, LedgerMode::ActiveLoss);
  for (int rep = 0; rep < 20; ++rep) {
    auto [z, y] = random_case(rng, 6, 4);
    const Matrix p = sigmoid(z, cfg.prob_clamp_eps);
    const LossOutput out = cross_entropy_loss(z, y, cfg);
    raw.accumulate(p, y, out.grad_logits);
    active.accumulate(p, y, out.grad_logits);
  }
  CHECK((raw.pos_sum() - active.pos_sum()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((raw.neg_sum() - active.neg_sum()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("raw-CE increments do not depend on the trained loss") {
  Rng rng(7);
  GradientLedger under_ce(3, LedgerMode::RawCE);
  GradientLedger under_gl(3, LedgerMode::RawCE);
  for (int rep = 0; rep < 10; ++rep) {
    auto [z, y] = random_case(rng, 4, 3);
    const Matrix p = sigmoid(z, 1e-12);
    LossConfig ce;
    ce.kind = LossKind::CrossEntropy;
    LossConfig gl;
    gl.kind = LossKind::GradLibra;
    under_ce.accumulate(p, y, cross_entropy_loss(z, y, ce).grad_logits);
    under_gl.accumulate(p, y, grad_libra_loss(z, y, gl).grad_logits);
  }
  CHECK(under_ce.pos_sum() == under_gl.pos_sum());
  CHECK(under_ce.neg_sum() == under_gl.neg_sum());
}

TEST_CASE("incremental ledger equals brute-force recomputation over a batch log") {
  Rng rng(11);
  const int C = 3;
  std::vector<std::pair<Matrix, Matrix>> log;  // (probs, labels)
  std::vector<Matrix> grads;
  GradientLedger raw(C, LedgerMode::RawCE);
  GradientLedger active(C, LedgerMode::ActiveLoss);
  LossConfig gl;
  gl.kind = LossKind::GradLibra;
  for (int rep = 0; rep < 100; ++rep) {
    auto [z, y] = random_case(rng, 8, C);
    const Matrix p = sigmoid(z, gl.prob_clamp_eps);
    const LossOutput out = grad_libra_loss(z, y, gl);
    raw.accumulate(p, y, out.grad_logits);
    active.accumulate(p, y, out.grad_logits);
    log.emplace_back(p, y);
    grads.push_back(out.grad_logits);
  }

  // Brute force: recompute the batch means independently and sum.
  Vector raw_pos = Vector::Zero(C), raw_neg = Vector::Zero(C);
  Vector act_pos = Vector::Zero(C), act_neg = Vector::Zero(C);
  for (std::size_t t = 0; t < log.size(); ++t) {
    const auto& [p, y] = log[t];
    const double inv_n = 1.0 / static_cast<double>(p.rows());
    for (int j = 0; j < C; ++j) {
      double rp = 0, rn = 0, ap = 0, an = 0;
      for (Eigen::Index i = 0; i < p.rows(); ++i) {
        if (y(i, j) == 1.0) {
          rp += (p(i, j) - 1.0) * inv_n;
          ap += grads[t](i, j);
        } else {
          rn += p(i, j) * inv_n;
          an += grads[t](i, j);
        }
      }
      raw_pos(j) += std::abs(rp);
      raw_neg(j) += std::abs(rn);
      act_pos(j) += std::abs(ap);
      act_neg(j) += std::abs(an);
    }
  }
  CHECK((raw.pos_sum() - raw_pos).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((raw.neg_sum() - raw_neg).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((active.pos_sum() - act_pos).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((active.neg_sum() - act_neg).cwiseAbs().maxCoeff() <= 1e-12);
  const Vector r = raw.ratio();
  for (int j = 0; j < C; ++j) {
    if (raw_neg(j) > 0.0) CHECK(r(j) == doctest::Approx(raw_pos(j) / raw_neg(j)).epsilon(1e-12));
  }
}

TEST_CASE("ratio sentinels") {
  GradientLedger ledger(2, LedgerMode::RawCE);
  Matrix probs(2, 2), labels(2, 2);
  // Class 0 balanced: one positive at p=0.5, one negative at p=0.5.
  // Class 1 has no positives.
  probs << 0.5, 0.25, 0.5, 0.75;
  labels << 1, 0, 0, 0;
  ledger.accumulate(probs, labels, Matrix());
  const Vector r = ledger.ratio();
  CHECK(r(0) == 1.0);
  CHECK(r(1) == 0.0);

  GradientLedger fresh(1, LedgerMode::RawCE);
  CHECK(std::isinf(fresh.ratio()(0)));
}

TEST_CASE("weight norms are normalized by the mean") {
  ModelSpec spec;
  spec.arch = Arch::Linear;
  spec.feature_dim = 2;
  spec.num_classes = 3;
  Model model(spec);
  // Rows with norms 2, 1, 1: normalized (1.5, 0.75, 0.75).
  model.params().setZero();
  model.params()(0) = 2.0;  // W(0, 0)
  model.params()(2) = 1.0;  // W(1, 0)
  model.params()(5) = 1.0;  // W(2, 1)
  const WeightNormResult norms = weight_norms(model);
  CHECK_FALSE(norms.degenerate);
  CHECK(norms.normalized(0) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(norms.normalized(1) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(norms.normalized(2) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(norms.normalized.mean() == doctest::Approx(1.0).epsilon(1e-12));

  // All rows equal: every normalized norm is 1.
  model.params().setOnes();
  const WeightNormResult equal = weight_norms(model);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(equal.normalized(i) == doctest::Approx(1.0).epsilon(1e-14));

  // Zero matrix: sentinel of ones with the degenerate flag.
  model.params().setZero();
  const WeightNormResult zero = weight_norms(model);
  CHECK(zero.degenerate);
  CHECK(zero.normalized == Vector::Ones(3));
}

TEST_CASE("weight norms use the last layer of an MLP") {
  ModelSpec spec;
  spec.arch = Arch::MLP1;
  spec.hidden_dim = 4;
  spec.feature_dim = 2;
  spec.num_classes = 3;
  spec.init_seed = 1;
  const Model model(spec);
  const WeightNormResult norms = weight_norms(model);
  CHECK(norms.normalized.size() == 3);
  CHECK(norms.normalized.mean() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("telemetry writer emits JSONL with null infinite ratios") {
  TempDir dir;
  const auto path = dir.path() / "telemetry.jsonl";
  {
    TelemetryWriter writer(path);
    GradientLedger raw(2, LedgerMode::RawCE);
    GradientLedger active(2, LedgerMode::ActiveLoss);
    Matrix probs(1, 2), labels(1, 2);
    probs << 0.5, 0.5;
    labels << 1, 1;  // no negatives: ratio infinite
    LossConfig ce;
    ce.kind = LossKind::CrossEntropy;
    // labels here are per-class independent; build a grad matrix directly
    Matrix grad(1, 2);
    grad << -0.5, -0.5;
    raw.accumulate(probs, labels, grad);
    active.accumulate(probs, labels, grad);
    writer.write_iteration(0, &raw, &active);
    writer.write_epoch(0, WeightNormResult{Vector::Ones(2), false});
  }
  std::ifstream in(path);
  std::string line;
  REQUIRE(std::getline(in, line));
  const auto iter_record = nlohmann::json::parse(line);
  CHECK(iter_record.at("iteration") == 0);
  CHECK(iter_record.at("raw_ce").at("r")[0].is_null());
  CHECK(iter_record.at("raw_ce").at("r_infinite")[0] == true);
  CHECK(iter_record.at("active_loss").at("pos_sum")[0] == doctest::Approx(0.5));
  REQUIRE(std::getline(in, line));
  const auto epoch_record = nlohmann::json::parse(line);
  CHECK(epoch_record.at("epoch") == 0);
  CHECK(epoch_record.at("weight_norms").size() == 2);
}

TEST_SUITE_END();
