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
#include <cmath>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "miadyn/core/field.hpp"
#include "miadyn/core/plane.hpp"

namespace miadyn {
namespace {

VulnerabilityState S(double fpr, double tpr) { return VulnerabilityState::Create(fpr, tpr).value(); }

Trajectory MakeTrajectory(std::vector<VulnerabilityState> states) {
  std::vector<int> epochs(states.size());
  for (std::size_t i = 0; i < epochs.size(); ++i) epochs[i] = static_cast<int>(5 * i);
  return Trajectory::Create(0, epochs, std::move(states)).value();
}

// States with tpr = alpha, fpr = 0 for alpha >= 0 and the mirror otherwise.
Trajectory FromAlphas(const std::vector<double>& alphas) {
  std::vector<VulnerabilityState> states;
  for (double a : alphas) states.push_back(a >= 0 ? S(0.0, a) : S(-a, 0.0));
  return MakeTrajectory(states);
}

TEST(VulnerabilityStateTest, RejectsPointsOutsideUnitSquare) {
  EXPECT_FALSE(VulnerabilityState::Create(-0.01, 0.5).ok());
  EXPECT_FALSE(VulnerabilityState::Create(0.5, 1.01).ok());
  EXPECT_FALSE(VulnerabilityState::Create(NAN, 0.5).ok());
  EXPECT_TRUE(VulnerabilityState::Create(1.0, 0.0).ok());
}

TEST(AdvantageTest, Anchors) {
  EXPECT_EQ(Advantage(S(0.0, 1.0)), 1.0);
  EXPECT_EQ(Advantage(S(0.4, 0.4)), 0.0);
  EXPECT_DOUBLE_EQ(Advantage(S(0.2, 0.7)), 0.5);
}

TEST(AdvantageTest, BoundedByLargerCoordinate) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const auto s = S(u(rng), u(rng));
    EXPECT_LE(std::abs(Advantage(s)), std::max(s.fpr, s.tpr));
  }
}

TEST(TrajectoryTest, RejectsMalformedInput) {
  EXPECT_FALSE(Trajectory::Create(0, {}, {}).ok());
  EXPECT_FALSE(Trajectory::Create(0, {0, 5}, {S(0, 0)}).ok());
  EXPECT_FALSE(Trajectory::Create(0, {5, 5}, {S(0, 0), S(0, 0)}).ok());
  EXPECT_FALSE(Trajectory::Create(0, {5, 0}, {S(0, 0), S(0, 0)}).ok());
}

TEST(VelocityTest, Anchors) {
  const auto flat = MakeTrajectory({S(0.2, 0.3), S(0.2, 0.3)});
  EXPECT_EQ(VelocityAt(flat, 0)->Speed(), 0.0);

  const auto up = MakeTrajectory({S(0.1, 0.1), S(0.1, 0.5)});
  const Velocity v = VelocityAt(up, 0).value();
  EXPECT_EQ(v.dfpr, 0.0);
  EXPECT_NEAR(v.dtpr, 0.4, 1e-15);
  EXPECT_NEAR(v.Speed(), 0.4, 1e-15);

  const auto diag = MakeTrajectory({S(0.0, 0.0), S(0.3, 0.4)});
  EXPECT_NEAR(VelocityAt(diag, 0)->Speed(), 0.5, 1e-15);
}

TEST(VelocityTest, LastCheckpointIsOutOfRange) {
  const auto t = MakeTrajectory({S(0, 0), S(0.1, 0.1)});
  EXPECT_EQ(VelocityAt(t, 1).status().code(), absl::StatusCode::kOutOfRange);
}

TEST(VelocityTest, Telescopes) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<VulnerabilityState> states;
  for (int i = 0; i < 12; ++i) states.push_back(S(u(rng), u(rng)));
  const auto t = MakeTrajectory(states);
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    sx += VelocityAt(t, i)->dfpr;
    sy += VelocityAt(t, i)->dtpr;
  }
  EXPECT_NEAR(sx, t.back().fpr - t.front().fpr, 1e-12);
  EXPECT_NEAR(sy, t.back().tpr - t.front().tpr, 1e-12);
}

TEST(PathLengthTest, Anchors) {
  EXPECT_EQ(PathLength(FromAlphas({0.3, 0.3, 0.3})), 0.0);
  EXPECT_NEAR(PathLength(FromAlphas({0.0, 0.5, 0.2})), 0.8, 1e-15);
  EXPECT_EQ(PathLength(MakeTrajectory({S(0.4, 0.9)})), 0.0);
}

TEST(PathLengthTest, MovementAlongDiagonalIsFree) {
  EXPECT_EQ(PathLength(MakeTrajectory({S(0.1, 0.1), S(0.5, 0.5), S(0.9, 0.9)})), 0.0);
}

TEST(PathLengthTest, MatchesElementwiseOracleOnRandomSequences) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 20);
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<VulnerabilityState> states;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) states.push_back(S(u(rng), u(rng)));
    const auto t = MakeTrajectory(states);
    double oracle = 0.0;
    for (int i = 1; i < n; ++i) {
      const double a1 = states[i].tpr - states[i].fpr;
      const double a0 = states[i - 1].tpr - states[i - 1].fpr;
      oracle += std::fabs(a1 - a0);
    }
    ASSERT_EQ(PathLength(t), oracle);
    ASSERT_GE(PathLength(t) + 1e-12, std::fabs(Advantage(t.back()) - Advantage(t.front())));
  }
}

TEST(PrefixPathLengthTest, Anchors) {
  const auto t = FromAlphas({0.0, 0.5, 0.2});
  EXPECT_EQ(PrefixPathLength(t, 0).value(), 0.0);
  EXPECT_NEAR(PrefixPathLength(t, 1).value(), 0.5, 1e-15);
  EXPECT_EQ(PrefixPathLength(t, 2).value(), PathLength(t));
  EXPECT_EQ(PrefixPathLength(t, 3).status().code(), absl::StatusCode::kOutOfRange);
}

TEST(PrefixPathLengthTest, NonDecreasing) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<VulnerabilityState> states;
  for (int i = 0; i < 30; ++i) states.push_back(S(u(rng), u(rng)));
  const auto t = MakeTrajectory(states);
  for (std::size_t k = 1; k < t.size(); ++k) {
    EXPECT_GE(PrefixPathLength(t, k).value(), PrefixPathLength(t, k - 1).value());
  }
}

TEST(PlaneGridTest, CellAnchors) {
  const PlaneGrid g = PlaneGrid::Transition();
  EXPECT_EQ(CellOf(S(0.0, 0.0), g), (GridCell{1, 1}));
  EXPECT_EQ(CellOf(S(0.1, 0.9), g), (GridCell{3, 1}));
  EXPECT_EQ(CellOf(S(1.0, 1.0), g), (GridCell{3, 3}));
}

TEST(PlaneGridTest, BandEdgesAreHalfOpenExceptTop) {
  const PlaneGrid g = PlaneGrid::Transition();
  EXPECT_EQ(g.Band(0.0), 1);
  EXPECT_EQ(g.Band(0.3333), 1);
  EXPECT_EQ(g.Band(0.5), 2);
  EXPECT_EQ(g.Band(2.0 / 3.0), 3);
  EXPECT_EQ(g.Band(1.0), 3);
}

TEST(PlaneGridTest, RejectsResolutionBelowTwo) {
  EXPECT_FALSE(PlaneGrid::Create(1).ok());
  EXPECT_TRUE(PlaneGrid::Create(2).ok());
}

TEST(PlaneGridTest, IndexRoundTripsEveryCell) {
  const PlaneGrid g = PlaneGrid::Create(7).value();
  for (std::size_t i = 0; i < g.cell_count(); ++i) EXPECT_EQ(g.Index(g.CellAt(i)), i);
}

TEST(PlaneGridTest, CellsTileTheSquare) {
  const PlaneGrid g = PlaneGrid::Create(30).value();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const auto s = S(u(rng), u(rng));
    const std::size_t idx = CellIndexOf(s, g);
    ASSERT_LT(idx, g.cell_count());
    const GridCell c = g.CellAt(idx);
    ASSERT_GE(s.tpr, (c.tpr_band - 1) / 30.0 - 1e-15);
    ASSERT_GE(s.fpr, (c.fpr_band - 1) / 30.0 - 1e-15);
  }
}

TEST(FieldTest, AssemblesOneTrajectoryPerSample) {
  const std::vector<std::vector<VulnerabilityState>> table = {{S(0, 0), S(0.5, 0.5)},
                                                              {S(0, 1), S(0.25, 0.75)}};
  const auto field = AssembleField({0, 10}, table).value();
  ASSERT_EQ(field.trajectories.size(), 2u);
  EXPECT_EQ(field.trajectories[1].sample_id(), 1u);
  EXPECT_EQ(field.trajectories[1].back(), S(0.25, 0.75));
  EXPECT_EQ(field.StatesAt(1)[0], S(0, 1));
}

TEST(FieldTest, RejectsRaggedOrMismatchedTables) {
  EXPECT_FALSE(AssembleField({0}, {{S(0, 0)}, {S(0, 0)}}).ok());
  EXPECT_FALSE(AssembleField({0, 1}, {{S(0, 0), S(0, 0)}, {S(0, 0)}}).ok());
}

}  // namespace
}  // namespace miadyn
