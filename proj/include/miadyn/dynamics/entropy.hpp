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
#ifndef MIADYN_DYNAMICS_ENTROPY_HPP_
#define MIADYN_DYNAMICS_ENTROPY_HPP_

#include <cmath>
#include <span>
#include <vector>

#include "miadyn/core/plane.hpp"

namespace miadyn::dynamics {

// Shannon entropy (nats) of the grid-cell occupancy histogram.
inline double SpatialEntropy(std::span<const VulnerabilityState> states,
                             const PlaneGrid& grid) {
  if (states.empty()) return 0.0;
  std::vector<std::size_t> counts(grid.cell_count(), 0);
  for (const auto& s : states) ++counts[CellIndexOf(s, grid)];
  const auto m = static_cast<double>(states.size());
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / m;
    h -= p * std::log(p);
  }
  return h;
}

}  // namespace miadyn::dynamics

#endif  // MIADYN_DYNAMICS_ENTROPY_HPP_
