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
#ifndef MIADYN_TRAIN_POSTERIORS_HPP_
#define MIADYN_TRAIN_POSTERIORS_HPP_

#include <cstddef>
#include <vector>

#include "Eigen/Dense"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "miadyn/data/dataset.hpp"
#include "miadyn/train/mlp.hpp"
#include "miadyn/train/population.hpp"
#include "miadyn/util/parallel.hpp"

namespace miadyn::train {

// Full softmax outputs of every model on every pool row at every checkpoint.
struct PosteriorCube {
  std::vector<int> epochs;
  int n_models = 0;
  // probs[k * n_models + i] is the M x C output of model i at checkpoint k.
  std::vector<Eigen::MatrixXd> probs;

  const Eigen::MatrixXd& at(std::size_t k, int model) const {
    return probs[k * static_cast<std::size_t>(n_models) + static_cast<std::size_t>(model)];
  }
};

inline absl::StatusOr<PosteriorCube> ComputePosteriors(const std::vector<TrainRun>& runs,
                                                       const data::SamplePool& pool) {
  if (runs.empty()) return absl::InvalidArgumentError("no training runs");
  PosteriorCube cube;
  cube.epochs = runs.front().checkpoint_epochs;
  cube.n_models = static_cast<int>(runs.size());
  for (const auto& run : runs) {
    if (run.checkpoint_epochs != cube.epochs || run.checkpoints.size() != cube.epochs.size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("run ", run.model_id, " has a different checkpoint schedule"));
    }
  }
  const std::size_t n_k = cube.epochs.size();
  const std::size_t n = runs.size();
  cube.probs.resize(n_k * n);
  std::vector<absl::Status> status(n_k * n);
  ParallelFor(n_k * n, [&](std::size_t j) {
    const std::size_t k = j / n, i = j % n;
    auto p = PredictBatch(runs[i].checkpoints[k], pool.features);
    if (!p.ok()) {
      status[j] = p.status();
      return;
    }
    cube.probs[j] = std::move(p).value();
  });
  for (const auto& s : status) {
    if (!s.ok()) return s;
  }
  return cube;
}

}  // namespace miadyn::train

#endif  // MIADYN_TRAIN_POSTERIORS_HPP_
