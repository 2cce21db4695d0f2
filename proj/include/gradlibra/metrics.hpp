#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "gradlibra/dataset.hpp"
#include "gradlibra/model.hpp"

namespace gradlibra {

// All-points interpolated average precision over a ranking by score
// (descending, ties broken by stable sample index). Throws DataError when
// there is no positive label.
double average_precision(const Vector& scores, const Vector& labels);

// Per-class AP / recall plus grouped means in the frequent/common/rare
// layout. Classes without positives in the test split are excluded from
// the means (NaN entries, with a warning recorded).
struct EvalReport {
  Vector per_class_ap;
  Vector per_class_recall;
  double map = 0.0;
  double mr_f = 0.0, ap_f = 0.0;
  double mr_c = 0.0, ap_c = 0.0;
  double mr_r = 0.0, ap_r = 0.0;
  std::vector<std::string> warnings;
};

// Scores are sigmoid probabilities of each class logit; recall uses a 0.5
// decision threshold.
EvalReport evaluate(const Model& model, const SampleBatch& test, const ClassGroups& groups);

nlohmann::ordered_json to_json(const EvalReport& report);

// CSV row in the column order mR_f, AP_f, mR_c, AP_c, mR_r, AP_r, mAP.
std::string eval_csv_header();
std::string eval_csv_row(const EvalReport& report);

}  // namespace gradlibra
