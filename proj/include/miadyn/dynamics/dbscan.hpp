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
// DBSCAN on the vulnerability plane with a uniform-grid neighbor index.

#ifndef MIADYN_DYNAMICS_DBSCAN_HPP_
#define MIADYN_DYNAMICS_DBSCAN_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <span>
#include <unordered_map>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "miadyn/core/plane.hpp"

namespace miadyn::dynamics {

struct DbscanParams {
  double eps = 0.02;
  int min_pts = 5;

  friend bool operator==(const DbscanParams&, const DbscanParams&) = default;
};

inline constexpr int kNoise = -1;

struct DbscanResult {
  std::vector<int> labels;  // cluster id per point, or kNoise
  int n_clusters = 0;
};

namespace internal {

// Buckets points into eps-sized cells; a radius-eps query only visits the
// 3x3 block of cells around the query point.
class GridIndex {
 public:
  GridIndex(std::span<const VulnerabilityState> points, double eps)
      : points_(points), eps_(eps) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      buckets_[Key(CellX(points[i].fpr), CellY(points[i].tpr))].push_back(i);
    }
  }

  // Neighbors within eps (inclusive, self included), ascending by index.
  std::vector<std::size_t> Query(std::size_t i) const {
    std::vector<std::size_t> out;
    const auto cx = CellX(points_[i].fpr);
    const auto cy = CellY(points_[i].tpr);
    const double eps2 = eps_ * eps_;
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = buckets_.find(Key(cx + dx, cy + dy));
        if (it == buckets_.end()) continue;
        for (std::size_t j : it->second) {
          const double ddx = points_[i].fpr - points_[j].fpr;
          const double ddy = points_[i].tpr - points_[j].tpr;
          if (ddx * ddx + ddy * ddy <= eps2) out.push_back(j);
        }
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::int64_t CellX(double x) const { return static_cast<std::int64_t>(std::floor(x / eps_)); }
  std::int64_t CellY(double y) const { return static_cast<std::int64_t>(std::floor(y / eps_)); }
  static std::uint64_t Key(std::int64_t x, std::int64_t y) {
    return (static_cast<std::uint64_t>(x) << 32) ^ static_cast<std::uint32_t>(y);
  }

  std::span<const VulnerabilityState> points_;
  double eps_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets_;
};

}  // namespace internal

// Clusters are grown from core points in ascending index order with a FIFO
// frontier; a border point joins the first cluster that reaches it. Noise
// points are not counted as clusters.
inline absl::StatusOr<DbscanResult> Dbscan(std::span<const VulnerabilityState> points,
                                           const DbscanParams& params) {
  if (!(params.eps > 0.0) || params.min_pts < 1) {
    return absl::InvalidArgumentError("dbscan needs eps > 0 and min_pts >= 1");
  }
  constexpr int kUnvisited = -2;
  DbscanResult result;
  result.labels.assign(points.size(), kUnvisited);
  internal::GridIndex index(points, params.eps);
  const auto min_pts = static_cast<std::size_t>(params.min_pts);

  for (std::size_t i = 0; i < points.size(); ++i) {
    if (result.labels[i] != kUnvisited) continue;
    std::vector<std::size_t> seeds = index.Query(i);
    if (seeds.size() < min_pts) {
      result.labels[i] = kNoise;
      continue;
    }
    const int cluster = result.n_clusters++;
    result.labels[i] = cluster;
    std::deque<std::size_t> frontier(seeds.begin(), seeds.end());
    while (!frontier.empty()) {
      const std::size_t j = frontier.front();
      frontier.pop_front();
      if (result.labels[j] == kNoise) result.labels[j] = cluster;
      if (result.labels[j] != kUnvisited) continue;
      result.labels[j] = cluster;
      std::vector<std::size_t> nbrs = index.Query(j);
      if (nbrs.size() >= min_pts) frontier.insert(frontier.end(), nbrs.begin(), nbrs.end());
    }
  }
  return result;
}

}  // namespace miadyn::dynamics

#endif  // MIADYN_DYNAMICS_DBSCAN_HPP_
