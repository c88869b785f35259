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
// Early exposure of the finally-vulnerable set, and high/low-travel strata,
// both ranked by vulnerability path length.

#ifndef MIADYN_DYNAMICS_EXPOSURE_HPP_
#define MIADYN_DYNAMICS_EXPOSURE_HPP_

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "miadyn/core/plane.hpp"
#include "miadyn/dynamics/motion.hpp"

namespace miadyn::dynamics {

enum class BudgetRule {
  kVulnerableCount,  // flag |V| samples per checkpoint
  kFixedFraction,    // flag ceil(fraction * M)
};

inline std::string_view BudgetRuleName(BudgetRule rule) {
  return rule == BudgetRule::kVulnerableCount ? "vulnerable-count" : "fixed-fraction";
}

inline absl::StatusOr<BudgetRule> ParseBudgetRule(std::string_view name) {
  if (name == "vulnerable-count") return BudgetRule::kVulnerableCount;
  if (name == "fixed-fraction") return BudgetRule::kFixedFraction;
  return absl::InvalidArgumentError(absl::StrCat("unknown budget rule '", std::string(name), "'"));
}

struct ExposureOptions {
  double vulnerable_threshold = 0.0;  // V = { z : final advantage > threshold }
  BudgetRule budget_rule = BudgetRule::kVulnerableCount;
  double budget_fraction = 0.1;
};

struct ExposureCurve {
  std::vector<double> coverage;  // per checkpoint
  std::size_t vulnerable_set_size = 0;
  std::size_t flag_budget = 0;
  bool defined = false;  // false when V is empty
};

// Indices sorted by score descending, ties by sample id ascending.
inline std::vector<std::size_t> RankDescending(std::span<const double> score,
                                               std::span<const Trajectory> trajectories) {
  std::vector<std::size_t> order(score.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return trajectories[a].sample_id() < trajectories[b].sample_id();
  });
  return order;
}

// At each checkpoint t, flags the top-budget samples by prefix path length
// up to t; coverage(t) = |flagged and in V| / |V|.
inline absl::StatusOr<ExposureCurve> ComputeExposureCurve(std::span<const Trajectory> trajectories,
                                                          const ExposureOptions& options) {
  if (absl::Status s = CheckAligned(trajectories); !s.ok()) return s;
  const std::size_t t_len = trajectories.front().size();
  if (t_len < 2) return absl::InvalidArgumentError("exposure curve needs at least two checkpoints");
  const std::size_t m = trajectories.size();

  std::vector<char> vulnerable(m, 0);
  ExposureCurve curve;
  for (std::size_t z = 0; z < m; ++z) {
    vulnerable[z] = Advantage(trajectories[z].back()) > options.vulnerable_threshold ? 1 : 0;
    curve.vulnerable_set_size += static_cast<std::size_t>(vulnerable[z]);
  }
  if (curve.vulnerable_set_size == 0) return curve;
  curve.defined = true;
  curve.flag_budget =
      options.budget_rule == BudgetRule::kVulnerableCount
          ? curve.vulnerable_set_size
          : std::min(m, static_cast<std::size_t>(
                            std::ceil(options.budget_fraction * static_cast<double>(m))));

  std::vector<double> prefix(m, 0.0);
  for (std::size_t t = 0; t < t_len; ++t) {
    if (t > 0) {
      for (std::size_t z = 0; z < m; ++z) {
        prefix[z] += std::abs(Advantage(trajectories[z].state(t)) -
                              Advantage(trajectories[z].state(t - 1)));
      }
    }
    const std::vector<std::size_t> order = RankDescending(prefix, trajectories);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < curve.flag_budget; ++r) hits += static_cast<std::size_t>(vulnerable[order[r]]);
    curve.coverage.push_back(static_cast<double>(hits) /
                             static_cast<double>(curve.vulnerable_set_size));
  }
  return curve;
}

struct TravelStrata {
  std::vector<SampleId> high;  // longest path lengths first
  std::vector<SampleId> low;   // shortest path lengths first
};

// Top-q and bottom-q fractions of the population by path length.
inline absl::StatusOr<TravelStrata> TravelStratification(std::span<const Trajectory> trajectories,
                                                         double q) {
  if (!(q > 0.0 && q < 0.5)) return absl::InvalidArgumentError("q must lie in (0, 0.5)");
  const std::size_t m = trajectories.size();
  if (static_cast<double>(m) < 2.0 / q) {
    return absl::InvalidArgumentError(absl::StrCat("population of ", m,
                                                   " is smaller than 2/q = ", 2.0 / q));
  }
  const auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(m) + 1e-9));
  std::vector<double> lengths(m);
  for (std::size_t z = 0; z < m; ++z) lengths[z] = PathLength(trajectories[z]);

  // One ordering serves both strata, so they stay disjoint under ties.
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (lengths[a] != lengths[b]) return lengths[a] > lengths[b];
    return trajectories[a].sample_id() < trajectories[b].sample_id();
  });
  TravelStrata strata;
  for (std::size_t r = 0; r < k; ++r) {
    strata.high.push_back(trajectories[order[r]].sample_id());
    strata.low.push_back(trajectories[order[m - 1 - r]].sample_id());
  }
  return strata;
}

}  // namespace miadyn::dynamics

#endif  // MIADYN_DYNAMICS_EXPOSURE_HPP_
