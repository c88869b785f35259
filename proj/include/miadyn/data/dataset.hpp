// Copyright 2026 The miadyn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef MIADYN_DATA_DATASET_HPP_
#define MIADYN_DATA_DATASET_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "miadyn/core/plane.hpp"
#include "miadyn/util/rng.hpp"

namespace miadyn::data {

enum class DatasetKind { kGaussianBlobs, kConcentricRings, kCsvFile, kIdxFile };

inline std::string_view DatasetKindName(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kGaussianBlobs: return "gaussian-blobs";
    case DatasetKind::kConcentricRings: return "concentric-rings";
    case DatasetKind::kCsvFile: return "csv-file";
    case DatasetKind::kIdxFile: return "idx-file";
  }
  return "unknown";
}

inline absl::StatusOr<DatasetKind> ParseDatasetKind(std::string_view name) {
  for (auto kind : {DatasetKind::kGaussianBlobs, DatasetKind::kConcentricRings,
                    DatasetKind::kCsvFile, DatasetKind::kIdxFile}) {
    if (DatasetKindName(kind) == name) return kind;
  }
  return absl::InvalidArgumentError(absl::StrCat("unsupported dataset kind '", std::string(name), "'"));
}

struct DatasetSpec {
  DatasetKind kind = DatasetKind::kGaussianBlobs;
  int n_classes = 4;
  int n_samples = 1000;
  int dim = 8;
  double class_separation = 3.0;
  double label_noise_rate = 0.0;
  std::uint64_t seed = 0;
  // File-backed kinds only. For idx-file, `path` holds images and
  // `labels_path` the label file.
  std::string path;
  std::string labels_path;

  friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;
};

inline absl::Status Validate(const DatasetSpec& spec) {
  if (spec.n_classes <= 0 || spec.n_samples <= 0 || spec.dim <= 0) {
    return absl::InvalidArgumentError(absl::StrCat(
        "dataset dimensions must be positive (n_classes=", spec.n_classes,
        ", n_samples=", spec.n_samples, ", dim=", spec.dim, ")"));
  }
  if (!(spec.label_noise_rate >= 0.0 && spec.label_noise_rate < 1.0)) {
    return absl::InvalidArgumentError("label_noise_rate must lie in [0, 1)");
  }
  if (spec.kind == DatasetKind::kCsvFile || spec.kind == DatasetKind::kIdxFile) {
    if (spec.path.empty() || (spec.kind == DatasetKind::kIdxFile && spec.labels_path.empty())) {
      return absl::InvalidArgumentError(
          absl::StrCat(std::string(DatasetKindName(spec.kind)), " needs a path to its data files"));
    }
    return absl::OkStatus();
  }
  if (spec.n_samples % spec.n_classes != 0) {
    return absl::InvalidArgumentError(absl::StrCat(
        "n_samples (", spec.n_samples, ") must be divisible by n_classes (",
        spec.n_classes, ")"));
  }
  if (!(spec.class_separation >= 0.0)) {
    return absl::InvalidArgumentError("class_separation must be non-negative");
  }
  if (spec.kind == DatasetKind::kGaussianBlobs && spec.dim < spec.n_classes) {
    return absl::InvalidArgumentError(absl::StrCat(
        "gaussian-blobs places one center per axis: dim (", spec.dim,
        ") must be >= n_classes (", spec.n_classes, ")"));
  }
  if (spec.kind == DatasetKind::kConcentricRings && spec.dim < 2) {
    return absl::InvalidArgumentError("concentric-rings needs dim >= 2");
  }
  return absl::OkStatus();
}

// The sample pool: row i of `features` is sample i. Pool row indices are the
// sample keys used by every downstream table.
struct SamplePool {
  Eigen::MatrixXd features;        // M x dim
  std::vector<int> labels;         // training labels (post-noise)
  std::vector<int> true_labels;    // pre-noise labels
  std::vector<SampleId> sample_ids;
  int n_classes = 0;

  std::size_t size() const { return labels.size(); }
  int dim() const { return static_cast<int>(features.cols()); }
};

inline absl::Status ValidatePool(const SamplePool& pool) {
  const std::size_t m = pool.labels.size();
  if (static_cast<std::size_t>(pool.features.rows()) != m ||
      pool.true_labels.size() != m || pool.sample_ids.size() != m) {
    return absl::InvalidArgumentError("pool columns have inconsistent lengths");
  }
  if (!pool.features.allFinite()) {
    return absl::InvalidArgumentError("pool contains non-finite features");
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (pool.labels[i] < 0 || pool.labels[i] >= pool.n_classes ||
        pool.true_labels[i] < 0 || pool.true_labels[i] >= pool.n_classes) {
      return absl::InvalidArgumentError(
          absl::StrCat("label out of range at row ", i));
    }
  }
  std::vector<SampleId> ids = pool.sample_ids;
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    return absl::InvalidArgumentError("sample ids are not unique");
  }
  return absl::OkStatus();
}

// Zero mean, unit variance per column; constant columns are only centered.
// Values are rounded to float so the persisted pool reproduces them exactly.
inline void StandardizeColumns(Eigen::MatrixXd& x) {
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    auto col = x.col(c);
    const double mean = col.mean();
    col.array() -= mean;
    const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(x.rows()));
    if (sd > 0.0) col /= sd;
  }
  x = x.cast<float>().cast<double>();
}

// Replaces exactly round(rate * M) labels, chosen without replacement, by a
// uniformly drawn different class.
inline void InjectLabelNoise(std::vector<int>& labels, int n_classes,
                             double rate, Rng& rng) {
  const std::size_t m = labels.size();
  const auto flips = static_cast<std::size_t>(std::llround(rate * static_cast<double>(m)));
  if (flips == 0 || n_classes < 2) return;
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::uniform_int_distribution<int> offset(1, n_classes - 1);
  for (std::size_t k = 0; k < flips; ++k) {
    int& y = labels[order[k]];
    y = (y + offset(rng)) % n_classes;
  }
}

// Builds a synthetic pool. Gaussian blobs put class k's center at
// class_separation * e_k (pairwise distance class_separation * sqrt(2)) with
// unit isotropic noise. Rings put class k on a circle of radius
// 1 + k * class_separation in the first two axes; remaining axes are noise.
inline absl::StatusOr<SamplePool> Generate(const DatasetSpec& spec) {
  if (spec.kind == DatasetKind::kCsvFile || spec.kind == DatasetKind::kIdxFile) {
    return absl::InvalidArgumentError(
        "file-backed dataset kinds are loaded, not generated");
  }
  if (absl::Status s = Validate(spec); !s.ok()) return s;

  Rng rng = MakeStream(spec.seed, 0, kTagData);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);

  const int m = spec.n_samples;
  const int per_class = m / spec.n_classes;
  SamplePool pool;
  pool.n_classes = spec.n_classes;
  pool.features.resize(m, spec.dim);
  pool.labels.resize(m);
  pool.sample_ids.resize(m);

  for (int i = 0; i < m; ++i) {
    const int label = i / per_class;
    pool.labels[i] = label;
    pool.sample_ids[i] = static_cast<SampleId>(i);
    for (int d = 0; d < spec.dim; ++d) pool.features(i, d) = gauss(rng);
    if (spec.kind == DatasetKind::kGaussianBlobs) {
      pool.features(i, label) += spec.class_separation;
    } else {
      const double radius = 1.0 + label * spec.class_separation;
      const double phi = angle(rng);
      pool.features(i, 0) += radius * std::cos(phi);
      pool.features(i, 1) += radius * std::sin(phi);
    }
  }
  pool.true_labels = pool.labels;
  InjectLabelNoise(pool.labels, spec.n_classes, spec.label_noise_rate, rng);
  StandardizeColumns(pool.features);
  return pool;
}

}  // namespace miadyn::data

#endif  // MIADYN_DATA_DATASET_HPP_
