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
#ifndef MIADYN_DYNAMICS_TRANSITION_HPP_
#define MIADYN_DYNAMICS_TRANSITION_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "miadyn/core/plane.hpp"

namespace miadyn::dynamics {

// Empirical cell-to-cell movement between two consecutive checkpoints.
// Rows are the source cell, columns the destination, both in the grid's
// row-major cell order (S_11, S_12, S_13, S_21, ...).
struct TransitionMatrix {
  int epoch_from = 0;
  int cells = 0;
  std::vector<std::int64_t> counts;  // cells x cells
  std::vector<double> probs;         // row-normalized; unoccupied rows are zero

  std::int64_t count(std::size_t from, std::size_t to) const {
    return counts[from * static_cast<std::size_t>(cells) + to];
  }
  double prob(std::size_t from, std::size_t to) const {
    return probs[from * static_cast<std::size_t>(cells) + to];
  }
  std::int64_t RowTotal(std::size_t from) const {
    std::int64_t total = 0;
    for (int c = 0; c < cells; ++c) total += count(from, static_cast<std::size_t>(c));
    return total;
  }
  bool Occupied(std::size_t from) const { return RowTotal(from) > 0; }
};

inline absl::StatusOr<TransitionMatrix> ComputeTransitionMatrix(
    std::span<const VulnerabilityState> from, std::span<const VulnerabilityState> to,
    int epoch_from = 0, const PlaneGrid& grid = PlaneGrid::Transition()) {
  if (from.size() != to.size()) {
    return absl::InvalidArgumentError(absl::StrCat("state lists differ in length (",
                                                   from.size(), " vs ", to.size(), ")"));
  }
  TransitionMatrix tm;
  tm.epoch_from = epoch_from;
  tm.cells = static_cast<int>(grid.cell_count());
  const auto cells = static_cast<std::size_t>(tm.cells);
  tm.counts.assign(cells * cells, 0);
  tm.probs.assign(cells * cells, 0.0);
  for (std::size_t z = 0; z < from.size(); ++z) {
    ++tm.counts[CellIndexOf(from[z], grid) * cells + CellIndexOf(to[z], grid)];
  }
  for (std::size_t r = 0; r < cells; ++r) {
    const std::int64_t total = tm.RowTotal(r);
    if (total == 0) continue;
    for (std::size_t c = 0; c < cells; ++c) {
      tm.probs[r * cells + c] =
          static_cast<double>(tm.counts[r * cells + c]) / static_cast<double>(total);
    }
  }
  return tm;
}

// P(v_{t+1} in S_31 | v_t in S_11) per interval; nullopt where S_11 is empty.
inline std::vector<std::optional<double>> RobustToVulnerableSeries(
    std::span<const TransitionMatrix> matrices) {
  const PlaneGrid grid = PlaneGrid::Transition();
  const std::size_t robust = grid.Index(GridCell{1, 1});
  const std::size_t exposed = grid.Index(GridCell{3, 1});
  std::vector<std::optional<double>> out;
  for (const auto& tm : matrices) {
    if (tm.Occupied(robust)) {
      out.push_back(tm.prob(robust, exposed));
    } else {
      out.push_back(std::nullopt);
    }
  }
  return out;
}

}  // namespace miadyn::dynamics

#endif  // MIADYN_DYNAMICS_TRANSITION_HPP_
