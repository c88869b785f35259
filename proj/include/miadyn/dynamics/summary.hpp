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
#ifndef MIADYN_DYNAMICS_SUMMARY_HPP_
#define MIADYN_DYNAMICS_SUMMARY_HPP_

#include <algorithm>
#include <optional>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "miadyn/core/field.hpp"
#include "miadyn/core/plane.hpp"
#include "miadyn/dynamics/dbscan.hpp"
#include "miadyn/dynamics/entropy.hpp"
#include "miadyn/dynamics/motion.hpp"
#include "miadyn/dynamics/transition.hpp"
#include "miadyn/util/parallel.hpp"
#include "miadyn/util/status.hpp"

namespace miadyn::dynamics {

struct SummaryOptions {
  int entropy_resolution = 30;
  DbscanParams dbscan;
  double vulnerable_threshold = 0.0;
};

struct PopulationSummary {
  std::vector<int> epochs;
  std::vector<Point2> com_series;
  double com_displacement = 0.0;
  double mean_speed = 0.0;
  std::optional<double> mean_speed_vulnerable;
  std::optional<double> directional_angle;
  std::vector<double> entropy_series;
  double delta_entropy = 0.0;
  std::vector<int> cluster_counts;
  double avg_clusters = 0.0;
  int delta_clusters = 0;

  std::vector<TransitionMatrix> transitions;  // one per interval
  std::vector<std::optional<double>> robust_to_vulnerable;
  std::optional<double> peak_robust_to_vulnerable;
  double final_mean_advantage = 0.0;
};

// Cluster count per checkpoint.
inline absl::StatusOr<std::vector<int>> ClusterCounts(const VulnerabilityField& field,
                                                      const DbscanParams& params) {
  std::vector<absl::StatusOr<DbscanResult>> results(field.epochs.size(),
                                                    absl::UnknownError("not run"));
  ParallelFor(field.epochs.size(), [&](std::size_t k) {
    const std::vector<VulnerabilityState> states = field.StatesAt(k);
    results[k] = Dbscan(states, params);
  });
  std::vector<int> counts;
  for (auto& r : results) {
    if (!r.ok()) return r.status();
    counts.push_back(r->n_clusters);
  }
  return counts;
}

inline absl::StatusOr<PopulationSummary> Summarize(const VulnerabilityField& field,
                                                   const SummaryOptions& options) {
  const std::vector<Trajectory>& trajs = field.trajectories;
  MIADYN_RETURN_IF_ERROR(CheckAligned(trajs));
  if (field.epochs.size() < 3) {
    return absl::InvalidArgumentError("population metrics need at least three checkpoints");
  }
  MIADYN_ASSIGN_OR_RETURN(PlaneGrid entropy_grid, PlaneGrid::Create(options.entropy_resolution));

  PopulationSummary s;
  s.epochs = field.epochs;
  MIADYN_ASSIGN_OR_RETURN(s.com_series, ComSeries(trajs));
  s.com_displacement = ComDisplacement(s.com_series);
  MIADYN_ASSIGN_OR_RETURN(std::optional<double> speed, MeanEncodingSpeed(trajs));
  s.mean_speed = speed.value_or(0.0);
  MIADYN_ASSIGN_OR_RETURN(s.mean_speed_vulnerable,
                          MeanEncodingSpeed(trajs, FinalAdvantageAbove(options.vulnerable_threshold)));
  MIADYN_ASSIGN_OR_RETURN(s.directional_angle, DirectionalAngle(s.com_series));

  for (std::size_t k = 0; k < field.epochs.size(); ++k) {
    const std::vector<VulnerabilityState> states = field.StatesAt(k);
    s.entropy_series.push_back(SpatialEntropy(states, entropy_grid));
    if (k + 1 < field.epochs.size()) {
      const std::vector<VulnerabilityState> next = field.StatesAt(k + 1);
      MIADYN_ASSIGN_OR_RETURN(TransitionMatrix tm,
                              ComputeTransitionMatrix(states, next, field.epochs[k]));
      s.transitions.push_back(std::move(tm));
    }
  }
  s.delta_entropy = s.entropy_series.back() - s.entropy_series.front();

  MIADYN_ASSIGN_OR_RETURN(s.cluster_counts, ClusterCounts(field, options.dbscan));
  double total = 0.0;
  for (int c : s.cluster_counts) total += c;
  s.avg_clusters = total / static_cast<double>(s.cluster_counts.size());
  s.delta_clusters = s.cluster_counts.back() - s.cluster_counts.front();

  s.robust_to_vulnerable = RobustToVulnerableSeries(s.transitions);
  for (const auto& p : s.robust_to_vulnerable) {
    if (p && (!s.peak_robust_to_vulnerable || *p > *s.peak_robust_to_vulnerable)) {
      s.peak_robust_to_vulnerable = p;
    }
  }
  double adv = 0.0;
  for (const auto& t : trajs) adv += Advantage(t.back());
  s.final_mean_advantage = adv / static_cast<double>(trajs.size());
  return s;
}

}  // namespace miadyn::dynamics

#endif  // MIADYN_DYNAMICS_SUMMARY_HPP_
