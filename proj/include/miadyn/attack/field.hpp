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
#ifndef MIADYN_ATTACK_FIELD_HPP_
#define MIADYN_ATTACK_FIELD_HPP_

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "miadyn/attack/lira.hpp"
#include "miadyn/core/field.hpp"
#include "miadyn/core/plane.hpp"
#include "miadyn/data/membership.hpp"
#include "miadyn/train/score_log.hpp"
#include "miadyn/util/parallel.hpp"
#include "miadyn/util/status.hpp"

namespace miadyn::attack {

// Dense view of a complete score log: values indexed [checkpoint][model][sample].
struct ScoreCube {
  std::vector<int> epochs;
  int n_models = 0;
  int n_samples = 0;
  std::vector<float> conf;
  std::vector<float> loss;
  std::vector<std::uint8_t> correct;
  std::vector<std::uint8_t> member;  // [model][sample], from the plan

  std::size_t Index(std::size_t k, int model, int sample) const {
    return (k * static_cast<std::size_t>(n_models) + static_cast<std::size_t>(model)) *
               static_cast<std::size_t>(n_samples) +
           static_cast<std::size_t>(sample);
  }
  std::size_t slice() const {
    return static_cast<std::size_t>(n_models) * static_cast<std::size_t>(n_samples);
  }
};

// Rejects logs with gaps, duplicates, unknown models/samples, or membership
// bits that disagree with the plan. Gaps are listed (first few).
inline absl::StatusOr<ScoreCube> BuildScoreCube(const train::ScoreLog& log,
                                                const data::MembershipPlan& plan) {
  ScoreCube cube;
  cube.n_models = plan.n_models();
  cube.n_samples = plan.n_samples();
  for (const auto& r : log.records) cube.epochs.push_back(static_cast<int>(r.epoch));
  std::sort(cube.epochs.begin(), cube.epochs.end());
  cube.epochs.erase(std::unique(cube.epochs.begin(), cube.epochs.end()), cube.epochs.end());
  if (cube.epochs.empty()) return absl::InvalidArgumentError("score log is empty");

  const std::size_t total = cube.epochs.size() * cube.slice();
  cube.conf.assign(total, 0.0f);
  cube.loss.assign(total, 0.0f);
  cube.correct.assign(total, 0);
  std::vector<std::uint8_t> seen(total, 0);
  cube.member.resize(cube.slice());
  for (int i = 0; i < cube.n_models; ++i) {
    for (int z = 0; z < cube.n_samples; ++z) {
      cube.member[static_cast<std::size_t>(i) * cube.n_samples + z] = plan.member(i, z) ? 1 : 0;
    }
  }

  for (const auto& r : log.records) {
    if (r.model >= static_cast<std::uint32_t>(cube.n_models) ||
        r.sample >= static_cast<std::uint32_t>(cube.n_samples)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "score record (epoch ", r.epoch, ", model ", r.model, ", sample ", r.sample,
          ") is outside the membership plan"));
    }
    const auto k = static_cast<std::size_t>(
        std::lower_bound(cube.epochs.begin(), cube.epochs.end(), static_cast<int>(r.epoch)) -
        cube.epochs.begin());
    const std::size_t idx = cube.Index(k, static_cast<int>(r.model), static_cast<int>(r.sample));
    if (seen[idx]) {
      return absl::InvalidArgumentError(absl::StrCat("duplicate score record (epoch ", r.epoch,
                                                     ", model ", r.model, ", sample ",
                                                     r.sample, ")"));
    }
    if (r.member != cube.member[static_cast<std::size_t>(r.model) * cube.n_samples + r.sample]) {
      return absl::InvalidArgumentError(absl::StrCat(
          "membership bit of (model ", r.model, ", sample ", r.sample,
          ") disagrees with the plan"));
    }
    seen[idx] = 1;
    cube.conf[idx] = r.conf;
    cube.loss[idx] = r.loss;
    cube.correct[idx] = r.correct;
  }

  std::vector<std::string> gaps;
  std::size_t n_gaps = 0;
  for (std::size_t k = 0; k < cube.epochs.size(); ++k) {
    for (int i = 0; i < cube.n_models; ++i) {
      for (int z = 0; z < cube.n_samples; ++z) {
        if (seen[cube.Index(k, i, z)]) continue;
        if (++n_gaps <= 5) {
          gaps.push_back(absl::StrCat("(epoch ", cube.epochs[k], ", model ", i, ", sample ", z, ")"));
        }
      }
    }
  }
  if (n_gaps > 0) {
    return absl::InvalidArgumentError(absl::StrCat("score log has ", n_gaps,
                                                   " missing records, e.g. ",
                                                   absl::StrJoin(gaps, ", ")));
  }
  return cube;
}

// LiRA outcomes for every sample at checkpoint k.
inline absl::StatusOr<std::vector<SampleOutcome>> LiraOutcomesAt(const ScoreCube& cube,
                                                                 std::size_t k,
                                                                 const LiraConfig& cfg) {
  const std::size_t slice = cube.slice();
  std::vector<double> phis(slice);
  for (std::size_t j = 0; j < slice; ++j) {
    phis[j] = LogitScale(static_cast<double>(cube.conf[k * slice + j]));
  }
  std::optional<PooledVariance> pooled;
  if (cfg.variance_mode == VarianceMode::kGlobal) {
    auto v = PooledVariances(phis, cube.member, cube.n_models, cube.n_samples);
    if (!v.ok()) {
      return absl::Status(v.status().code(),
                          absl::StrCat("epoch ", cube.epochs[k], ": ", v.status().message()));
    }
    pooled = *v;
  }
  const auto m = static_cast<std::size_t>(cube.n_samples);
  std::vector<absl::StatusOr<SampleOutcome>> results(m, absl::UnknownError("not run"));
  ParallelFor(m, [&](std::size_t z) {
    std::vector<double> column(static_cast<std::size_t>(cube.n_models));
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(cube.n_models));
    for (int i = 0; i < cube.n_models; ++i) {
      const std::size_t j = static_cast<std::size_t>(i) * m + z;
      column[static_cast<std::size_t>(i)] = phis[j];
      bits[static_cast<std::size_t>(i)] = cube.member[j];
    }
    results[z] = EstimateState(column, bits, cfg, pooled);
  });
  std::vector<SampleOutcome> out;
  out.reserve(m);
  for (std::size_t z = 0; z < m; ++z) {
    if (!results[z].ok()) {
      return absl::Status(results[z].status().code(),
                          absl::StrCat("epoch ", cube.epochs[k], ", sample ", z, ": ",
                                       results[z].status().message()));
    }
    out.push_back(std::move(results[z]).value());
  }
  return out;
}

// LiRA trajectories for every sample across all checkpoints in the log.
inline absl::StatusOr<VulnerabilityField> LiraVulnerabilityField(const train::ScoreLog& log,
                                                                 const data::MembershipPlan& plan,
                                                                 const LiraConfig& cfg) {
  MIADYN_ASSIGN_OR_RETURN(ScoreCube cube, BuildScoreCube(log, plan));
  std::vector<std::vector<VulnerabilityState>> states;
  for (std::size_t k = 0; k < cube.epochs.size(); ++k) {
    MIADYN_ASSIGN_OR_RETURN(std::vector<SampleOutcome> outcomes, LiraOutcomesAt(cube, k, cfg));
    std::vector<VulnerabilityState> row;
    row.reserve(outcomes.size());
    for (const auto& o : outcomes) row.push_back(o.state);
    states.push_back(std::move(row));
  }
  return AssembleField(cube.epochs, states);
}

}  // namespace miadyn::attack

#endif  // MIADYN_ATTACK_FIELD_HPP_
