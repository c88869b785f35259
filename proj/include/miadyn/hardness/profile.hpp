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
#ifndef MIADYN_HARDNESS_PROFILE_HPP_
#define MIADYN_HARDNESS_PROFILE_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "Eigen/Dense"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "miadyn/attack/field.hpp"
#include "miadyn/core/plane.hpp"
#include "miadyn/data/dataset.hpp"
#include "miadyn/data/membership.hpp"
#include "miadyn/hardness/influence.hpp"
#include "miadyn/hardness/uncertainty.hpp"
#include "miadyn/train/mlp.hpp"
#include "miadyn/train/population.hpp"
#include "miadyn/train/posteriors.hpp"
#include "miadyn/util/parallel.hpp"
#include "miadyn/util/status.hpp"

namespace miadyn::hardness {

// v_alpha = L / (T - 1): mean absolute advantage change per interval.
inline absl::StatusOr<double> EncodingRate(const Trajectory& traj) {
  if (traj.size() < 2) {
    return absl::InvalidArgumentError(
        absl::StrCat("sample ", traj.sample_id(), " has a single checkpoint"));
  }
  return PathLength(traj) / static_cast<double>(traj.size() - 1);
}

// Smallest t with history[t..] all correct; nullopt (never learned) when the
// last entry is incorrect.
inline std::optional<int> IterationLearned(std::span<const std::uint8_t> history) {
  int t = static_cast<int>(history.size());
  while (t > 0 && history[static_cast<std::size_t>(t - 1)]) --t;
  if (t == static_cast<int>(history.size())) return std::nullopt;
  return t;
}

// Never-learned samples rank after every checkpoint index.
inline double IterationLearnedValue(std::optional<int> learned, int n_checkpoints) {
  return learned ? static_cast<double>(*learned) : static_cast<double>(n_checkpoints);
}

// Per checkpoint: correct on a strict majority of the sample's in-models.
inline std::vector<std::uint8_t> MajorityCorrectHistory(const attack::ScoreCube& cube,
                                                        int sample) {
  std::vector<std::uint8_t> history(cube.epochs.size(), 0);
  for (std::size_t k = 0; k < cube.epochs.size(); ++k) {
    int n_in = 0, correct = 0;
    for (int i = 0; i < cube.n_models; ++i) {
      if (!cube.member[static_cast<std::size_t>(i) * cube.n_samples + sample]) continue;
      ++n_in;
      correct += cube.correct[cube.Index(k, i, sample)] ? 1 : 0;
    }
    history[k] = 2 * correct > n_in ? 1 : 0;
  }
  return history;
}

struct HardnessOptions {
  InfluenceOptions influence;
  int uncertainty_checkpoint = -1;  // negative counts from the end

  friend bool operator==(const HardnessOptions&, const HardnessOptions&) = default;
};

struct HardnessProfile {
  int n_checkpoints = 0;
  int uncertainty_epoch = 0;
  std::vector<double> grad_norm;
  std::vector<std::optional<int>> iteration_learned;
  std::vector<double> influence;
  std::vector<double> aleatoric;
  std::vector<double> epistemic;
};

namespace internal {

// Adds per-model contributions in model order so the totals do not depend on
// the schedule.
inline void ReduceInOrder(const std::vector<std::vector<double>>& parts,
                          std::vector<double>& total) {
  for (const auto& part : parts) {
    for (std::size_t z = 0; z < total.size(); ++z) total[z] += part[z];
  }
}

}  // namespace internal

// Gradient norms average over in-models and all checkpoints; influence
// averages over in-models at the final checkpoint; uncertainty uses the
// sample's out-models at the chosen checkpoint.
inline absl::StatusOr<HardnessProfile> ComputeHardness(
    const data::SamplePool& pool, const data::MembershipPlan& plan,
    const std::vector<train::TrainRun>& runs, const attack::ScoreCube& cube,
    const train::PosteriorCube& posteriors, const HardnessOptions& options) {
  const std::size_t m = pool.size();
  const std::size_t n = runs.size();
  if (static_cast<int>(n) != plan.n_models() || static_cast<int>(m) != plan.n_samples() ||
      posteriors.n_models != plan.n_models()) {
    return absl::InvalidArgumentError("hardness inputs do not share one population");
  }
  const int n_k = static_cast<int>(posteriors.epochs.size());
  int uk = options.uncertainty_checkpoint < 0 ? n_k + options.uncertainty_checkpoint
                                              : options.uncertainty_checkpoint;
  if (uk < 0 || uk >= n_k) {
    return absl::InvalidArgumentError(absl::StrCat(
        "uncertainty checkpoint ", options.uncertainty_checkpoint, " is out of range"));
  }

  HardnessProfile profile;
  profile.n_checkpoints = n_k;
  profile.uncertainty_epoch = posteriors.epochs[static_cast<std::size_t>(uk)];

  std::vector<std::vector<double>> norm_parts(n, std::vector<double>(m, 0.0));
  std::vector<std::vector<double>> infl_parts(n, std::vector<double>(m, 0.0));
  std::vector<absl::Status> status(n);
  ParallelFor(n, [&](std::size_t i) {
    const auto& run = runs[i];
    const std::vector<int> rows = plan.TrainSet(static_cast<int>(i));
    const Eigen::MatrixXd x = train::GatherRows(pool.features, rows);
    std::vector<int> labels;
    labels.reserve(rows.size());
    for (int r : rows) labels.push_back(pool.labels[static_cast<std::size_t>(r)]);
    for (const auto& params : run.checkpoints) {
      auto norms = train::PerSampleGradientNorms(params, x, labels);
      if (!norms.ok()) {
        status[i] = norms.status();
        return;
      }
      for (std::size_t j = 0; j < rows.size(); ++j) {
        norm_parts[i][static_cast<std::size_t>(rows[j])] += (*norms)(static_cast<Eigen::Index>(j));
      }
    }
    auto solver = SelfInfluence::Create(run.checkpoints.back(), x, labels, options.influence);
    if (!solver.ok()) {
      status[i] = solver.status();
      return;
    }
    for (std::size_t j = 0; j < rows.size(); ++j) {
      auto value = solver->Evaluate(x.row(static_cast<Eigen::Index>(j)).transpose(), labels[j]);
      if (!value.ok()) {
        status[i] = absl::Status(value.status().code(),
                                 absl::StrCat("influence of sample ", rows[j], " under model ",
                                              i, ": ", value.status().message()));
        return;
      }
      infl_parts[i][static_cast<std::size_t>(rows[j])] = *value;
    }
  });
  for (const auto& s : status) MIADYN_RETURN_IF_ERROR(s);

  profile.grad_norm.assign(m, 0.0);
  profile.influence.assign(m, 0.0);
  internal::ReduceInOrder(norm_parts, profile.grad_norm);
  internal::ReduceInOrder(infl_parts, profile.influence);
  profile.aleatoric.resize(m);
  profile.epistemic.resize(m);
  profile.iteration_learned.resize(m);
  for (std::size_t z = 0; z < m; ++z) {
    const int n_in = plan.InCount(static_cast<int>(z));
    profile.grad_norm[z] /= static_cast<double>(n_in * n_k);
    profile.influence[z] /= static_cast<double>(n_in);
    profile.iteration_learned[z] =
        IterationLearned(MajorityCorrectHistory(cube, static_cast<int>(z)));

    Eigen::MatrixXd members(plan.n_models() - n_in, pool.n_classes);
    Eigen::Index r = 0;
    for (int i = 0; i < plan.n_models(); ++i) {
      if (plan.member(i, static_cast<int>(z))) continue;
      members.row(r++) = posteriors.at(static_cast<std::size_t>(uk), i).row(static_cast<Eigen::Index>(z));
    }
    MIADYN_ASSIGN_OR_RETURN(Uncertainty u, DecomposeUncertainty(members));
    profile.aleatoric[z] = u.aleatoric;
    profile.epistemic[z] = u.epistemic;
  }
  return profile;
}

}  // namespace miadyn::hardness

#endif  // MIADYN_HARDNESS_PROFILE_HPP_
