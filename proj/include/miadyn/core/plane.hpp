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
// The vulnerability plane: per-sample (FPR, TPR) states, their trajectories
// across checkpoints, and the grid used to discretize the plane.

#ifndef MIADYN_CORE_PLANE_HPP_
#define MIADYN_CORE_PLANE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"

namespace miadyn {

using SampleId = std::uint32_t;

// One sample's coordinate on the unit square at one checkpoint.
struct VulnerabilityState {
  double fpr = 0.0;
  double tpr = 0.0;

  static absl::StatusOr<VulnerabilityState> Create(double fpr, double tpr) {
    if (!(fpr >= 0.0 && fpr <= 1.0 && tpr >= 0.0 && tpr <= 1.0)) {
      return absl::InvalidArgumentError(
          absl::StrCat("state (fpr=", fpr, ", tpr=", tpr,
                       ") is outside the unit square"));
    }
    return VulnerabilityState{fpr, tpr};
  }

  friend bool operator==(const VulnerabilityState&,
                         const VulnerabilityState&) = default;
};

// Membership advantage: TPR - FPR.
inline double Advantage(const VulnerabilityState& state) {
  return state.tpr - state.fpr;
}

// Displacement between consecutive states.
struct Velocity {
  double dfpr = 0.0;
  double dtpr = 0.0;

  double Speed() const { return std::hypot(dfpr, dtpr); }
};

class Trajectory {
 public:
  // Fails unless states is non-empty, lengths agree, and checkpoint epochs
  // strictly increase.
  static absl::StatusOr<Trajectory> Create(SampleId sample_id,
                                           std::vector<int> checkpoints,
                                           std::vector<VulnerabilityState> states) {
    if (states.empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat("trajectory for sample ", sample_id, " has no states"));
    }
    if (states.size() != checkpoints.size()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "trajectory for sample ", sample_id, ": ", states.size(),
          " states but ", checkpoints.size(), " checkpoints"));
    }
    for (std::size_t i = 1; i < checkpoints.size(); ++i) {
      if (checkpoints[i] <= checkpoints[i - 1]) {
        return absl::InvalidArgumentError(absl::StrCat(
            "trajectory for sample ", sample_id,
            ": checkpoints must strictly increase (", checkpoints[i - 1],
            " then ", checkpoints[i], ")"));
      }
    }
    return Trajectory(sample_id, std::move(checkpoints), std::move(states));
  }

  SampleId sample_id() const { return sample_id_; }
  std::size_t size() const { return states_.size(); }
  const std::vector<int>& checkpoints() const { return checkpoints_; }
  const std::vector<VulnerabilityState>& states() const { return states_; }
  const VulnerabilityState& state(std::size_t t) const { return states_[t]; }
  const VulnerabilityState& front() const { return states_.front(); }
  const VulnerabilityState& back() const { return states_.back(); }

  std::vector<double> Advantages() const {
    std::vector<double> out(states_.size());
    std::transform(states_.begin(), states_.end(), out.begin(),
                   [](const VulnerabilityState& s) { return Advantage(s); });
    return out;
  }

 private:
  Trajectory(SampleId id, std::vector<int> checkpoints,
             std::vector<VulnerabilityState> states)
      : sample_id_(id),
        checkpoints_(std::move(checkpoints)),
        states_(std::move(states)) {}

  SampleId sample_id_;
  std::vector<int> checkpoints_;
  std::vector<VulnerabilityState> states_;
};

// s(z, t) = v_{t+1} - v_t. Valid for t < size() - 1.
inline absl::StatusOr<Velocity> VelocityAt(const Trajectory& traj,
                                           std::size_t t) {
  if (t + 1 >= traj.size()) {
    return absl::OutOfRangeError(absl::StrCat(
        "velocity index ", t, " out of range for trajectory of length ",
        traj.size()));
  }
  const auto& a = traj.state(t);
  const auto& b = traj.state(t + 1);
  return Velocity{b.fpr - a.fpr, b.tpr - a.tpr};
}

// Sum of |delta advantage| over the first `transitions` intervals.
inline double AdvantagePathLength(std::span<const double> alphas,
                                  std::size_t transitions) {
  double total = 0.0;
  const std::size_t n = std::min(transitions + 1, alphas.size());
  for (std::size_t t = 1; t < n; ++t) total += std::abs(alphas[t] - alphas[t - 1]);
  return total;
}

// Vulnerability path length L(z): cumulative absolute change in advantage.
// Movement parallel to the diagonal leaves advantage unchanged and adds 0.
inline double PathLength(const Trajectory& traj) {
  double total = 0.0;
  for (std::size_t t = 1; t < traj.size(); ++t) {
    total += std::abs(Advantage(traj.state(t)) - Advantage(traj.state(t - 1)));
  }
  return total;
}

// Path length over the transitions that end at or before checkpoint `upto`.
inline absl::StatusOr<double> PrefixPathLength(const Trajectory& traj,
                                               std::size_t upto) {
  if (upto >= traj.size()) {
    return absl::OutOfRangeError(absl::StrCat(
        "prefix index ", upto, " out of range for trajectory of length ",
        traj.size()));
  }
  double total = 0.0;
  for (std::size_t t = 1; t <= upto; ++t) {
    total += std::abs(Advantage(traj.state(t)) - Advantage(traj.state(t - 1)));
  }
  return total;
}

// Grid cell S_ij with i the TPR band and j the FPR band, both 1-based.
struct GridCell {
  int tpr_band = 1;
  int fpr_band = 1;

  friend bool operator==(const GridCell&, const GridCell&) = default;
};

class PlaneGrid {
 public:
  // Cells per axis used by transition analysis.
  static constexpr int kTransitionResolution = 3;

  static absl::StatusOr<PlaneGrid> Create(int resolution) {
    if (resolution < 2) {
      return absl::InvalidArgumentError(
          absl::StrCat("grid resolution must be >= 2, got ", resolution));
    }
    return PlaneGrid(resolution);
  }

  static PlaneGrid Transition() { return PlaneGrid(kTransitionResolution); }

  int resolution() const { return resolution_; }
  std::size_t cell_count() const {
    return static_cast<std::size_t>(resolution_) * resolution_;
  }

  // Band of one coordinate: floor(x * resolution) + 1, with x = 1 kept in
  // the top band.
  int Band(double coordinate) const {
    int band = static_cast<int>(std::floor(coordinate * resolution_)) + 1;
    return std::clamp(band, 1, resolution_);
  }

  // Row-major index with the TPR band as the row.
  std::size_t Index(const GridCell& cell) const {
    return static_cast<std::size_t>(cell.tpr_band - 1) * resolution_ +
           static_cast<std::size_t>(cell.fpr_band - 1);
  }

  GridCell CellAt(std::size_t index) const {
    return GridCell{static_cast<int>(index / resolution_) + 1,
                    static_cast<int>(index % resolution_) + 1};
  }

 private:
  explicit PlaneGrid(int resolution) : resolution_(resolution) {}
  int resolution_;
};

inline GridCell CellOf(const VulnerabilityState& state, const PlaneGrid& grid) {
  return GridCell{grid.Band(state.tpr), grid.Band(state.fpr)};
}

inline std::size_t CellIndexOf(const VulnerabilityState& state,
                               const PlaneGrid& grid) {
  return grid.Index(CellOf(state, grid));
}

}  // namespace miadyn

#endif  // MIADYN_CORE_PLANE_HPP_
