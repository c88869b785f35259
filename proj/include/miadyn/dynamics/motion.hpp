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
// Population motion metrics: center of mass, encoding speed, drift angle.

#ifndef MIADYN_DYNAMICS_MOTION_HPP_
#define MIADYN_DYNAMICS_MOTION_HPP_

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "miadyn/core/plane.hpp"

namespace miadyn::dynamics {

struct Point2 {
  double x = 0.0;  // fpr
  double y = 0.0;  // tpr

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline absl::Status CheckAligned(std::span<const Trajectory> trajectories) {
  if (trajectories.empty()) return absl::InvalidArgumentError("empty population");
  const std::size_t t = trajectories.front().size();
  for (const auto& traj : trajectories) {
    if (traj.size() != t) return absl::InvalidArgumentError("trajectories are not aligned");
  }
  return absl::OkStatus();
}

// Mean (fpr, tpr) at every checkpoint.
inline absl::StatusOr<std::vector<Point2>> ComSeries(std::span<const Trajectory> trajectories) {
  if (absl::Status s = CheckAligned(trajectories); !s.ok()) return s;
  const std::size_t t_len = trajectories.front().size();
  std::vector<Point2> com(t_len);
  for (std::size_t t = 0; t < t_len; ++t) {
    double sx = 0.0, sy = 0.0;
    for (const auto& traj : trajectories) {
      sx += traj.state(t).fpr;
      sy += traj.state(t).tpr;
    }
    const auto m = static_cast<double>(trajectories.size());
    com[t] = Point2{sx / m, sy / m};
  }
  return com;
}

// Cumulative Euclidean path length of the center of mass.
inline double ComDisplacement(std::span<const Point2> series) {
  double total = 0.0;
  for (std::size_t t = 1; t < series.size(); ++t) {
    total += std::hypot(series[t].x - series[t - 1].x, series[t].y - series[t - 1].y);
  }
  return total;
}

using TrajectoryFilter = std::function<bool(const Trajectory&)>;

// Mean |s(z, t)| over the filtered samples and all intervals; nullopt when no
// sample passes the filter.
inline absl::StatusOr<std::optional<double>> MeanEncodingSpeed(
    std::span<const Trajectory> trajectories, const TrajectoryFilter& filter = nullptr) {
  if (absl::Status s = CheckAligned(trajectories); !s.ok()) return s;
  if (trajectories.front().size() < 2) {
    return absl::InvalidArgumentError("encoding speed needs at least two checkpoints");
  }
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& traj : trajectories) {
    if (filter && !filter(traj)) continue;
    for (std::size_t t = 0; t + 1 < traj.size(); ++t) {
      const double dx = traj.state(t + 1).fpr - traj.state(t).fpr;
      const double dy = traj.state(t + 1).tpr - traj.state(t).tpr;
      total += std::hypot(dx, dy);
      ++count;
    }
  }
  if (count == 0) return std::optional<double>();
  return std::optional<double>(total / static_cast<double>(count));
}

// Samples whose final advantage exceeds the threshold.
inline TrajectoryFilter FinalAdvantageAbove(double threshold) {
  return [threshold](const Trajectory& t) { return Advantage(t.back()) > threshold; };
}

// Dominant axis of the center-of-mass velocity field, in radians within
// (-pi, pi]. The principal eigenvector of the 2x2 velocity covariance is
// oriented to have non-negative dot product with the mean velocity. With zero
// covariance the mean velocity's angle is used; with a zero mean velocity as
// well the angle is undefined (nullopt).
inline absl::StatusOr<std::optional<double>> DirectionalAngle(std::span<const Point2> com) {
  if (com.size() < 3) {
    return absl::InvalidArgumentError("directional angle needs at least two velocities");
  }
  const std::size_t n = com.size() - 1;
  std::vector<Point2> vel(n);
  double mx = 0.0, my = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    vel[t] = Point2{com[t + 1].x - com[t].x, com[t + 1].y - com[t].y};
    mx += vel[t].x;
    my += vel[t].y;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& v : vel) {
    sxx += (v.x - mx) * (v.x - mx);
    sxy += (v.x - mx) * (v.y - my);
    syy += (v.y - my) * (v.y - my);
  }
  const double denom = static_cast<double>(n > 1 ? n - 1 : 1);
  sxx /= denom;
  sxy /= denom;
  syy /= denom;

  double ex = 0.0, ey = 0.0;
  if (sxx == 0.0 && sxy == 0.0 && syy == 0.0) {
    if (mx == 0.0 && my == 0.0) return std::optional<double>();
    return std::optional<double>(std::atan2(my, mx));
  }
  // Principal axis of [[sxx, sxy], [sxy, syy]]: angle 0.5 * atan2(2 sxy, sxx - syy).
  const double phi = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  ex = std::cos(phi);
  ey = std::sin(phi);
  if (ex * mx + ey * my < 0.0) {
    ex = -ex;
    ey = -ey;
  }
  double angle = std::atan2(ey, ex);
  if (angle <= -std::numbers::pi) angle += 2.0 * std::numbers::pi;
  return std::optional<double>(angle);
}

}  // namespace miadyn::dynamics

#endif  // MIADYN_DYNAMICS_MOTION_HPP_
