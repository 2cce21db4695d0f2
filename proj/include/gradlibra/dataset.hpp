#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "gradlibra/common.hpp"

namespace gradlibra {

// Synthetic long-tailed dataset description. counts must be non-increasing
// (head first); group_thresholds = (rare/common, common/frequent) cutoffs on
// the instance count.
struct DatasetSpec {
  int num_classes = 2;
  std::vector<std::int64_t> counts;
  std::int64_t background_count = 0;
  int feature_dim = 2;
  double center_separation = 3.0;
  double covariance_scale = 1.0;
  std::pair<std::int64_t, std::int64_t> group_thresholds{5000, 10000};
  std::uint64_t seed = 0;

  void validate() const;

  // Desk-scale long-tailed benchmark: 10 classes with counts decaying
  // 10000 -> 50 plus 20000 background negatives in 16 dimensions. The
  // separation/covariance pair is calibrated so a plain cross-entropy
  // baseline lands mid-range.
  static DatasetSpec desk_default();
};

// Geometric decay from head to tail, rounded to integers; endpoints exact.
std::vector<std::int64_t> exponential_counts(std::int64_t head, std::int64_t tail,
                                             int num_classes);

enum class Group { Frequent, Common, Rare };

std::string to_string(Group g);
Group group_from_string(std::string_view name);

struct ClassGroups {
  std::vector<Group> assignment;  // one entry per class

  std::vector<int> classes_in(Group g) const;
};

ClassGroups assign_groups(const std::vector<std::int64_t>& counts,
                          std::pair<std::int64_t, std::int64_t> thresholds);

// Feature matrix plus multi-hot labels; all-zero label rows are background
// negatives. sample_ids are stable across the train/test split.
struct SampleBatch {
  Matrix features;
  Matrix labels;
  std::vector<std::int64_t> sample_ids;

  Eigen::Index size() const { return features.rows(); }
};

struct Dataset {
  SampleBatch train;
  SampleBatch test;
  ClassGroups groups;
  DatasetSpec spec;
};

// Deterministic generation: per-class Gaussian clusters with centers on the
// sphere of radius center_separation and isotropic variance
// covariance_scale; background drawn uniformly from the bounding box of all
// centers inflated by 3 standard deviations. Each class uses its own RNG
// stream, so changing one class count leaves the others' draws untouched.
// The split is 7:3 per class with at least one test sample per class.
Dataset generate(const DatasetSpec& spec);

// CSV with header `id,f0..f{D-1},y0..y{C-1}`; features at 17 significant
// digits so a save/load round trip is exact.
void save_csv(const SampleBatch& batch, const std::filesystem::path& path);
SampleBatch load_csv(const std::filesystem::path& path);

// JSON sidecar carrying the spec and group assignment.
void save_dataset_manifest(const DatasetSpec& spec, const ClassGroups& groups,
                           const std::filesystem::path& path);
std::pair<DatasetSpec, ClassGroups> load_dataset_manifest(const std::filesystem::path& path);

// Writes train.csv, test.csv and dataset.json under dir.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace gradlibra
