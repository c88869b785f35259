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


#ifndef MIADYN_CORE_FIELD_HPP_
#define MIADYN_CORE_FIELD_HPP_

#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "miadyn/core/plane.hpp"
#include "miadyn/util/status.hpp"

namespace miadyn {

// Every sample's trajectory across all checkpoints; trajectories[z] belongs to
// pool row z.
struct VulnerabilityField {
  std::vector<int> epochs;
  std::vector<Trajectory> trajectories;

  std::vector<VulnerabilityState> StatesAt(std::size_t k) const {
    std::vector<VulnerabilityState> out;
    out.reserve(trajectories.size());
    for (const auto& t : trajectories) out.push_back(t.state(k));
    return out;
  }
};

// Assembles trajectories from per-checkpoint state tables, [checkpoint][sample].
inline absl::StatusOr<VulnerabilityField> AssembleField(
    std::vector<int> epochs, const std::vector<std::vector<VulnerabilityState>>& states) {
  if (states.size() != epochs.size() || states.empty()) {
    return absl::InvalidArgumentError("state table does not match the checkpoint list");
  }
  VulnerabilityField field;
  field.epochs = std::move(epochs);
  const std::size_t m = states.front().size();
  for (std::size_t z = 0; z < m; ++z) {
    std::vector<VulnerabilityState> seq;
    seq.reserve(states.size());
    for (const auto& row : states) {
      if (row.size() != m) return absl::InvalidArgumentError("ragged state table");
      seq.push_back(row[z]);
    }
    MIADYN_ASSIGN_OR_RETURN(Trajectory t, Trajectory::Create(static_cast<SampleId>(z),
                                                             field.epochs, std::move(seq)));
    field.trajectories.push_back(std::move(t));
  }
  return field;
}

}  // namespace miadyn

#endif  // MIADYN_CORE_FIELD_HPP_
