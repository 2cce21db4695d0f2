#include "gradlibra/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gradlibra/config_json.hpp"
#include "gradlibra/rng.hpp"

namespace gradlibra {

using ordered_json = nlohmann::ordered_json;

void DatasetSpec::validate() const {
  if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
  if (static_cast<int>(counts.size()) != num_classes) {
    throw ConfigError("counts must have one entry per class");
  }
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] <= 0) throw ConfigError("counts must be positive (class " + std::to_string(i) + ")");
    if (i > 0 && counts[i] > counts[i - 1]) {
      throw ConfigError("counts must be non-increasing (head classes first)");
    }
  }
  if (background_count < 0) throw ConfigError("background_count must be >= 0");
  if (feature_dim < 1) throw ConfigError("feature_dim must be >= 1");
  if (!(center_separation > 0.0)) throw ConfigError("center_separation must be > 0");
  if (!(covariance_scale > 0.0)) throw ConfigError("covariance_scale must be > 0");
  if (!(group_thresholds.first > 0 && group_thresholds.first < group_thresholds.second)) {
    throw ConfigError("group_thresholds must be strictly ordered and positive");
  }
}

DatasetSpec DatasetSpec::desk_default() {
  DatasetSpec spec;
  spec.num_classes = 10;
  spec.counts = exponential_counts(10000, 50, 10);
  spec.background_count = 20000;
  spec.feature_dim = 16;
  spec.center_separation = 4.0;
  spec.covariance_scale = 1.0;
  spec.group_thresholds = {5000, 10000};
  spec.seed = 0;
  return spec;
}

std::vector<std::int64_t> exponential_counts(std::int64_t head, std::int64_t tail,
                                             int num_classes) {
  if (num_classes < 2) throw ConfigError("exponential_counts: num_classes must be >= 2");
  if (head < tail || tail < 1) throw ConfigError("exponential_counts: need head >= tail >= 1");
  std::vector<std::int64_t> counts(num_classes);
  const double log_head = std::log(static_cast<double>(head));
  const double log_tail = std::log(static_cast<double>(tail));
  for (int i = 0; i < num_classes; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(num_classes - 1);
    counts[i] = std::llround(std::exp(log_head + (log_tail - log_head) * t));
  }
  counts.front() = head;
  counts.back() = tail;
  return counts;
}

std::string to_string(Group g) {
  switch (g) {
    case Group::Frequent: return "frequent";
    case Group::Common: return "common";
    case Group::Rare: return "rare";
  }
  throw ConfigError("invalid group value");
}

Group group_from_string(std::string_view name) {
  if (name == "frequent") return Group::Frequent;
  if (name == "common") return Group::Common;
  if (name == "rare") return Group::Rare;
  throw ConfigError("unknown group: " + std::string(name));
}

std::vector<int> ClassGroups::classes_in(Group g) const {
  std::vector<int> ids;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == g) ids.push_back(static_cast<int>(i));
  }
  return ids;
}

ClassGroups assign_groups(const std::vector<std::int64_t>& counts,
                          std::pair<std::int64_t, std::int64_t> thresholds) {
  ClassGroups groups;
  groups.assignment.reserve(counts.size());
  for (const std::int64_t c : counts) {
    if (c < thresholds.first) {
      groups.assignment.push_back(Group::Rare);
    } else if (c < thresholds.second) {
      groups.assignment.push_back(Group::Common);
    } else {
      groups.assignment.push_back(Group::Frequent);
    }
  }
  return groups;
}

namespace {

// Test share of the 7:3 split; classes always keep at least one test row.
std::int64_t test_count_for(std::int64_t total, bool at_least_one) {
  std::int64_t n = std::llround(0.3 * static_cast<double>(total));
  if (at_least_one && n < 1) n = 1;
  if (n > total) n = total;
  return n;
}

struct Block {
  Matrix features;       // count x D, generation order
  std::int64_t first_id; // global id of row 0
  int class_index;       // -1 for background
};

}  // namespace

Dataset generate(const DatasetSpec& spec) {
  spec.validate();
  const int C = spec.num_classes;
  const int D = spec.feature_dim;
  const double sigma = std::sqrt(spec.covariance_scale);
  const Rng root(spec.seed);

  // Per-class centers and samples, each from its own stream.
  std::vector<Block> blocks;
  Matrix centers(C, D);
  std::int64_t next_id = 0;
  for (int c = 0; c < C; ++c) {
    Rng rng = root.split(static_cast<std::uint64_t>(c));
    Vector dir(D);
    for (int d = 0; d < D; ++d) dir(d) = rng.next_normal();
    const double norm = dir.norm();
    if (norm < 1e-12) dir.setUnit(0);
    centers.row(c) = (dir / dir.norm()).transpose() * spec.center_separation;

    Block block;
    block.class_index = c;
    block.first_id = next_id;
    block.features.resize(spec.counts[c], D);
    for (std::int64_t n = 0; n < spec.counts[c]; ++n) {
      for (int d = 0; d < D; ++d) {
        block.features(n, d) = centers(c, d) + sigma * rng.next_normal();
      }
    }
    next_id += spec.counts[c];
    blocks.push_back(std::move(block));
  }

  // Background: uniform over the centers' bounding box inflated by 3 sigma.
  if (spec.background_count > 0) {
    Rng rng = root.split(static_cast<std::uint64_t>(C));
    Vector lo = centers.colwise().minCoeff().transpose().array() - 3.0 * sigma;
    Vector hi = centers.colwise().maxCoeff().transpose().array() + 3.0 * sigma;
    Block block;
    block.class_index = -1;
    block.first_id = next_id;
    block.features.resize(spec.background_count, D);
    for (std::int64_t n = 0; n < spec.background_count; ++n) {
      for (int d = 0; d < D; ++d) {
        block.features(n, d) = rng.next_uniform(lo(d), hi(d));
      }
    }
    next_id += spec.background_count;
    blocks.push_back(std::move(block));
  }

  // Stratified 7:3 split; the tail of each block goes to test.
  std::int64_t train_rows = 0, test_rows = 0;
  std::vector<std::int64_t> test_counts(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const std::int64_t total = blocks[b].features.rows();
    test_counts[b] = test_count_for(total, blocks[b].class_index >= 0);
    test_rows += test_counts[b];
    train_rows += total - test_counts[b];
  }

  Dataset out;
  out.spec = spec;
  out.groups = assign_groups(spec.counts, spec.group_thresholds);
  out.train.features.resize(train_rows, D);
  out.train.labels = Matrix::Zero(train_rows, C);
  out.train.sample_ids.resize(train_rows);
  out.test.features.resize(test_rows, D);
  out.test.labels = Matrix::Zero(test_rows, C);
  out.test.sample_ids.resize(test_rows);

  std::int64_t tr = 0, te = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const Block& block = blocks[b];
    const std::int64_t total = block.features.rows();
    const std::int64_t n_train = total - test_counts[b];
    for (std::int64_t n = 0; n < total; ++n) {
      const bool to_train = n < n_train;
      SampleBatch& dst = to_train ? out.train : out.test;
      const std::int64_t row = to_train ? tr++ : te++;
      dst.features.row(row) = block.features.row(n);
      dst.sample_ids[row] = block.first_id + n;
      if (block.class_index >= 0) dst.labels(row, block.class_index) = 1.0;
    }
  }
  return out;
}

void save_csv(const SampleBatch& batch, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  const Eigen::Index D = batch.features.cols();
  const Eigen::Index C = batch.labels.cols();
  out << "id";
  for (Eigen::Index d = 0; d < D; ++d) out << ",f" << d;
  for (Eigen::Index c = 0; c < C; ++c) out << ",y" << c;
  out << "\n";
  char buf[64];
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    out << batch.sample_ids[i];
    for (Eigen::Index d = 0; d < D; ++d) {
      std::snprintf(buf, sizeof(buf), "%.17g", batch.features(i, d));
      out << ',' << buf;
    }
    for (Eigen::Index c = 0; c < C; ++c) {
      out << ',' << (batch.labels(i, c) == 1.0 ? '1' : '0');
    }
    out << "\n";
  }
  if (!out) throw DataError("write failed: " + path.string());
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::size_t line, const std::string& what) {
  throw DataError(path.string() + ": line " + std::to_string(line) + ": " + what);
}

}  // namespace

SampleBatch load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path.string());

  std::string line;
  if (!std::getline(in, line)) parse_fail(path, 0, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_fields(line);
  if (header.empty() || header[0] != "id") parse_fail(path, 0, "header must start with 'id'");
  Eigen::Index D = 0, C = 0;
  std::size_t k = 1;
  while (k < header.size() && header[k] == "f" + std::to_string(D)) { ++D; ++k; }
  while (k < header.size() && header[k] == "y" + std::to_string(C)) { ++C; ++k; }
  if (k != header.size() || C == 0) parse_fail(path, 0, "header must be id,f0..f{D-1},y0..y{C-1}");

  std::vector<std::int64_t> ids;
  std::vector<double> features;
  std::vector<double> labels;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != static_cast<std::size_t>(1 + D + C)) {
      parse_fail(path, line_no, "expected " + std::to_string(1 + D + C) + " fields, got " +
                                    std::to_string(fields.size()));
    }
    try {
      std::size_t pos = 0;
      ids.push_back(std::stoll(fields[0], &pos));
      if (pos != fields[0].size()) throw std::invalid_argument("trailing");
      for (Eigen::Index d = 0; d < D; ++d) {
        features.push_back(std::stod(fields[1 + d], &pos));
        if (pos != fields[1 + d].size()) throw std::invalid_argument("trailing");
      }
    } catch (const std::exception&) {
      parse_fail(path, line_no, "malformed numeric field");
    }
    int positives = 0;
    for (Eigen::Index c = 0; c < C; ++c) {
      const std::string& f = fields[1 + D + c];
      if (f == "1") { labels.push_back(1.0); ++positives; }
      else if (f == "0") { labels.push_back(0.0); }
      else parse_fail(path, line_no, "label fields must be 0 or 1");
    }
    if (positives > 1) parse_fail(path, line_no, "more than one positive label");
  }

  SampleBatch batch;
  const Eigen::Index N = static_cast<Eigen::Index>(ids.size());
  batch.sample_ids = std::move(ids);
  batch.features.resize(N, D);
  batch.labels.resize(N, C);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index d = 0; d < D; ++d) batch.features(i, d) = features[i * D + d];
    for (Eigen::Index c = 0; c < C; ++c) batch.labels(i, c) = labels[i * C + c];
  }
  return batch;
}

void save_dataset_manifest(const DatasetSpec& spec, const ClassGroups& groups,
                           const std::filesystem::path& path) {
  ordered_json j;
  j["spec"] = to_json(spec);
  std::vector<std::string> names;
  names.reserve(groups.assignment.size());
  for (const Group g : groups.assignment) names.push_back(to_string(g));
  j["groups"] = names;
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
}

std::pair<DatasetSpec, ClassGroups> load_dataset_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  try {
    DatasetSpec spec = dataset_spec_from_json(j.at("spec"));
    ClassGroups groups;
    for (const auto& name : j.at("groups")) {
      groups.assignment.push_back(group_from_string(name.get<std::string>()));
    }
    return {std::move(spec), std::move(groups)};
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_csv(dataset.train, dir / "train.csv");
  save_csv(dataset.test, dir / "test.csv");
  save_dataset_manifest(dataset.spec, dataset.groups, dir / "dataset.json");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset dataset;
  auto [spec, groups] = load_dataset_manifest(dir / "dataset.json");
  dataset.spec = std::move(spec);
  dataset.groups = std::move(groups);
  dataset.train = load_csv(dir / "train.csv");
  dataset.test = load_csv(dir / "test.csv");
  const Eigen::Index C = dataset.spec.num_classes;
  if (dataset.train.labels.cols() != C || dataset.test.labels.cols() != C) {
    throw DataError(dir.string() + ": label column count does not match manifest num_classes");
  }
  return dataset;
}

}  // namespace gradlibra
