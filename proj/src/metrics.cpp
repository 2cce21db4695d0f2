#include "gradlibra/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "gradlibra/loss.hpp"

namespace gradlibra {

double average_precision(const Vector& scores, const Vector& labels) {
  if (scores.size() != labels.size()) throw ConfigError("average_precision: size mismatch");
  const Eigen::Index n = scores.size();
  Eigen::Index npos = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels(i) != 0.0 && labels(i) != 1.0) {
      throw ConfigError("average_precision: labels must be 0 or 1");
    }
    if (labels(i) == 1.0) ++npos;
  }
  if (npos == 0) throw DataError("average_precision: no positive labels");

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return scores(a) > scores(b); });

  // Precision at every prefix, then the envelope max_{j >= k} P_j.
  std::vector<double> precision(n);
  Eigen::Index tp = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (labels(order[k]) == 1.0) ++tp;
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
  }
  std::vector<double> envelope(n);
  double running = 0.0;
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    running = std::max(running, precision[k]);
    envelope[k] = running;
  }

  // Recall steps by 1/npos at each positive hit.
  double sum = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (labels(order[k]) == 1.0) sum += envelope[k];
  }
  return sum / static_cast<double>(npos);
}

namespace {

double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

double mean_over(const Vector& values, const std::vector<int>& classes) {
  double sum = 0.0;
  int n = 0;
  for (const int c : classes) {
    if (!std::isnan(values(c))) {
      sum += values(c);
      ++n;
    }
  }
  return n == 0 ? nan_value() : sum / n;
}

}  // namespace

EvalReport evaluate(const Model& model, const SampleBatch& test, const ClassGroups& groups) {
  if (test.size() == 0) throw DataError("evaluate: empty test set");
  const int C = model.spec().num_classes;
  if (test.labels.cols() != C) throw ConfigError("evaluate: class count mismatch");
  if (static_cast<int>(groups.assignment.size()) != C) {
    throw ConfigError("evaluate: group assignment size mismatch");
  }

  const Matrix logits = model.forward(test.features);
  const Matrix probs = sigmoid(logits, 1e-12);

  EvalReport report;
  report.per_class_ap = Vector::Constant(C, nan_value());
  report.per_class_recall = Vector::Constant(C, nan_value());

  for (int c = 0; c < C; ++c) {
    const Vector labels = test.labels.col(c);
    const Eigen::Index npos = static_cast<Eigen::Index>(labels.sum());
    if (npos == 0) {
      report.warnings.push_back("class " + std::to_string(c) +
                                " has no positives in the test set; excluded from means");
      continue;
    }
    report.per_class_ap(c) = average_precision(probs.col(c), labels);
    Eigen::Index hits = 0;
    for (Eigen::Index i = 0; i < labels.size(); ++i) {
      if (labels(i) == 1.0 && probs(i, c) >= 0.5) ++hits;
    }
    report.per_class_recall(c) = static_cast<double>(hits) / static_cast<double>(npos);
  }

  std::vector<int> all(C);
  std::iota(all.begin(), all.end(), 0);
  report.map = mean_over(report.per_class_ap, all);
  report.ap_f = mean_over(report.per_class_ap, groups.classes_in(Group::Frequent));
  report.ap_c = mean_over(report.per_class_ap, groups.classes_in(Group::Common));
  report.ap_r = mean_over(report.per_class_ap, groups.classes_in(Group::Rare));
  report.mr_f = mean_over(report.per_class_recall, groups.classes_in(Group::Frequent));
  report.mr_c = mean_over(report.per_class_recall, groups.classes_in(Group::Common));
  report.mr_r = mean_over(report.per_class_recall, groups.classes_in(Group::Rare));
  return report;
}

namespace {

nlohmann::ordered_json json_number(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

nlohmann::ordered_json to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  auto vec = [](const Vector& v) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(json_number(v(i)));
    return arr;
  };
  j["per_class_ap"] = vec(report.per_class_ap);
  j["per_class_recall"] = vec(report.per_class_recall);
  j["mR_f"] = json_number(report.mr_f);
  j["AP_f"] = json_number(report.ap_f);
  j["mR_c"] = json_number(report.mr_c);
  j["AP_c"] = json_number(report.ap_c);
  j["mR_r"] = json_number(report.mr_r);
  j["AP_r"] = json_number(report.ap_r);
  j["mAP"] = json_number(report.map);
  j["warnings"] = report.warnings;
  return j;
}

std::string eval_csv_header() { return "mR_f,AP_f,mR_c,AP_c,mR_r,AP_r,mAP"; }

std::string eval_csv_row(const EvalReport& report) {
  return format_metric(report.mr_f) + "," + format_metric(report.ap_f) + "," +
         format_metric(report.mr_c) + "," + format_metric(report.ap_c) + "," +
         format_metric(report.mr_r) + "," + format_metric(report.ap_r) + "," +
         format_metric(report.map);
}

}  // namespace gradlibra
