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
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "miadyn/data/dataset.hpp"
#include "miadyn/data/loaders.hpp"
#include "miadyn/data/membership.hpp"
#include "miadyn/util/io.hpp"

namespace miadyn::data {
namespace {

namespace fs = std::filesystem;

fs::path TempDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("miadyn_data_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

DatasetSpec Blobs(double separation, double noise, std::uint64_t seed = 3) {
  DatasetSpec spec;
  spec.n_classes = 4;
  spec.n_samples = 400;
  spec.dim = 6;
  spec.class_separation = separation;
  spec.label_noise_rate = noise;
  spec.seed = seed;
  return spec;
}

TEST(GenerateTest, SeparableLimitIsSolvedByNearestCentroid) {
  const SamplePool pool = Generate(Blobs(100.0, 0.0)).value();
  Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(4, pool.dim());
  std::vector<int> counts(4, 0);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    centroids.row(pool.labels[i]) += pool.features.row(static_cast<Eigen::Index>(i));
    ++counts[static_cast<std::size_t>(pool.labels[i])];
  }
  for (int c = 0; c < 4; ++c) centroids.row(c) /= counts[static_cast<std::size_t>(c)];
  int correct = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    Eigen::Index best = 0;
    (centroids.rowwise() - pool.features.row(static_cast<Eigen::Index>(i)))
        .rowwise()
        .squaredNorm()
        .minCoeff(&best);
    correct += best == pool.labels[i] ? 1 : 0;
  }
  EXPECT_EQ(correct, static_cast<int>(pool.size()));
}

TEST(GenerateTest, NoNoiseKeepsTrueLabels) {
  const SamplePool pool = Generate(Blobs(3.0, 0.0)).value();
  EXPECT_EQ(pool.labels, pool.true_labels);
}

TEST(GenerateTest, NoiseFlipsExactlyRoundedFractionToWrongLabels) {
  const SamplePool pool = Generate(Blobs(3.0, 0.13)).value();
  int flipped = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) flipped += pool.labels[i] != pool.true_labels[i];
  EXPECT_EQ(flipped, 52);  // round(0.13 * 400)
}

TEST(GenerateTest, SameSeedIsBitIdentical) {
  const SamplePool a = Generate(Blobs(2.0, 0.1)).value();
  const SamplePool b = Generate(Blobs(2.0, 0.1)).value();
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  const SamplePool c = Generate(Blobs(2.0, 0.1, 4)).value();
  EXPECT_NE(a.features, c.features);
}

// Features are rounded to float after standardization.
TEST(GenerateTest, StandardizesEveryColumn) {
  const SamplePool pool = Generate(Blobs(3.0, 0.0)).value();
  for (Eigen::Index c = 0; c < pool.features.cols(); ++c) {
    const auto col = pool.features.col(c);
    const double mean = col.mean();
    EXPECT_NEAR(mean, 0.0, 1e-6);
    EXPECT_NEAR((col.array() - mean).square().mean(), 1.0, 1e-6);
  }
}

TEST(GenerateTest, BalancedClasses) {
  const SamplePool pool = Generate(Blobs(3.0, 0.0)).value();
  std::vector<int> counts(4, 0);
  for (int y : pool.true_labels) ++counts[static_cast<std::size_t>(y)];
  EXPECT_EQ(counts, std::vector<int>(4, 100));
}

TEST(GenerateTest, RingsAreGenerated) {
  DatasetSpec spec = Blobs(2.0, 0.0);
  spec.kind = DatasetKind::kConcentricRings;
  spec.dim = 2;
  const SamplePool pool = Generate(spec).value();
  EXPECT_EQ(pool.size(), 400u);
  EXPECT_TRUE(pool.features.allFinite());
}

TEST(GenerateTest, RejectsInvalidSpecs) {
  DatasetSpec spec = Blobs(3.0, 0.0);
  spec.n_samples = 401;
  EXPECT_FALSE(Generate(spec).ok());
  spec = Blobs(3.0, 1.0);
  EXPECT_FALSE(Generate(spec).ok());
  spec = Blobs(3.0, 0.0);
  spec.dim = 0;
  EXPECT_FALSE(Generate(spec).ok());
  spec = Blobs(3.0, 0.0);
  spec.kind = DatasetKind::kCsvFile;
  EXPECT_FALSE(Generate(spec).ok());
  EXPECT_FALSE(ParseDatasetKind("spirals").ok());
}

TEST(PlanMembershipTest, MeanInCountNearHalf) {
  const MembershipPlan plan = PlanMembership(1000, 16, 11).value();
  double total = 0.0;
  for (int z = 0; z < 1000; ++z) total += plan.InCount(z);
  EXPECT_NEAR(total / 1000.0, 8.0, 0.5);
}

TEST(PlanMembershipTest, EverySampleHasTwoOnEachSide) {
  const MembershipPlan plan = PlanMembership(2000, 4, 5).value();
  for (int z = 0; z < 2000; ++z) {
    EXPECT_GE(plan.InCount(z), kMinPerSide);
    EXPECT_GE(4 - plan.InCount(z), kMinPerSide);
  }
}

TEST(PlanMembershipTest, DeterministicAndSeedSensitive) {
  EXPECT_EQ(PlanMembership(300, 8, 1).value(), PlanMembership(300, 8, 1).value());
  EXPECT_NE(PlanMembership(300, 8, 1).value(), PlanMembership(300, 8, 2).value());
}

TEST(PlanMembershipTest, RejectsFewerThanFourModels) {
  EXPECT_FALSE(PlanMembership(10, 3, 1).ok());
}

TEST(PlanMembershipTest, TrainAndHoldoutPartitionThePool) {
  const MembershipPlan plan = PlanMembership(100, 6, 9).value();
  for (int i = 0; i < 6; ++i) {
    std::vector<int> seen(100, 0);
    for (int z : plan.TrainSet(i)) seen[static_cast<std::size_t>(z)] += 1;
    for (int z : plan.HoldoutSet(i)) seen[static_cast<std::size_t>(z)] += 1;
    EXPECT_EQ(seen, std::vector<int>(100, 1));
  }
}

TEST(LoadCsvTest, ReadsRows) {
  const fs::path dir = TempDir("csv");
  ASSERT_TRUE(WriteFile(dir / "p.csv", "id,label,f0,f1\n10,0,1.5,2\n11,1,-1,0.25\n12,2,0,0\n").ok());
  const SamplePool pool = LoadCsv(dir / "p.csv", 3).value();
  EXPECT_EQ(pool.size(), 3u);
  EXPECT_EQ(pool.dim(), 2);
  EXPECT_EQ(pool.sample_ids[1], 11u);
  EXPECT_EQ(pool.features(1, 1), 0.25);
  EXPECT_EQ(pool.labels, pool.true_labels);
}

TEST(LoadCsvTest, LabelOutOfRangeNamesTheLine) {
  const fs::path dir = TempDir("csv_bad");
  ASSERT_TRUE(WriteFile(dir / "p.csv", "id,label,f0\n0,0,1\n1,3,1\n").ok());
  const auto pool = LoadCsv(dir / "p.csv", 3);
  ASSERT_FALSE(pool.ok());
  EXPECT_NE(pool.status().message().find(":3:"), std::string::npos);
}

TEST(LoadCsvTest, RejectsMalformedHeaderAndRows) {
  const fs::path dir = TempDir("csv_header");
  ASSERT_TRUE(WriteFile(dir / "a.csv", "label,id,f0\n0,0,1\n").ok());
  EXPECT_FALSE(LoadCsv(dir / "a.csv", 2).ok());
  ASSERT_TRUE(WriteFile(dir / "b.csv", "id,label,f0,f1\n0,0,1\n").ok());
  EXPECT_FALSE(LoadCsv(dir / "b.csv", 2).ok());
  EXPECT_FALSE(LoadCsv(dir / "missing.csv", 2).ok());
}

std::string BigEndian(std::uint32_t v) {
  return {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
          static_cast<char>(v)};
}

TEST(LoadIdxTest, ReadsHandBuiltFixture) {
  const fs::path dir = TempDir("idx");
  std::string images = BigEndian(0x00000803) + BigEndian(4) + BigEndian(2) + BigEndian(2);
  for (int i = 0; i < 16; ++i) images.push_back(static_cast<char>(i * 17));
  std::string labels = BigEndian(0x00000801) + BigEndian(4);
  for (char y : {0, 1, 1, 0}) labels.push_back(y);
  ASSERT_TRUE(WriteFile(dir / "img", images).ok());
  ASSERT_TRUE(WriteFile(dir / "lab", labels).ok());
  const SamplePool pool = LoadIdx(dir / "img", dir / "lab", 2).value();
  EXPECT_EQ(pool.size(), 4u);
  EXPECT_EQ(pool.dim(), 4);
  EXPECT_EQ(pool.features(0, 0), 0.0);
  EXPECT_EQ(pool.features(3, 3), 1.0);
  EXPECT_EQ(pool.labels, (std::vector<int>{0, 1, 1, 0}));
}

TEST(LoadIdxTest, BadMagicAndTruncationAreReported) {
  const fs::path dir = TempDir("idx_bad");
  std::string labels = BigEndian(0x00000801) + BigEndian(2) + std::string(2, '\0');
  ASSERT_TRUE(WriteFile(dir / "lab", labels).ok());
  ASSERT_TRUE(WriteFile(dir / "img", BigEndian(0x00000802) + BigEndian(2) + BigEndian(1) +
                                         BigEndian(1) + std::string(2, '\0'))
                  .ok());
  EXPECT_FALSE(LoadIdx(dir / "img", dir / "lab", 2).ok());
  ASSERT_TRUE(WriteFile(dir / "img", BigEndian(0x00000803) + BigEndian(2) + BigEndian(1) +
                                         BigEndian(1) + std::string(1, '\0'))
                  .ok());
  const auto truncated = LoadIdx(dir / "img", dir / "lab", 2);
  ASSERT_FALSE(truncated.ok());
  EXPECT_NE(truncated.status().message().find("offset"), std::string::npos);
}

TEST(PoolFilesTest, SaveLoadRoundTrip) {
  const fs::path dir = TempDir("pool");
  const SamplePool pool = Generate(Blobs(3.0, 0.1)).value();
  ASSERT_TRUE(SavePool(pool, dir, {{"kind", "gaussian-blobs"}}).ok());
  const SamplePool back = LoadPool(dir).value();
  EXPECT_EQ(back.labels, pool.labels);
  EXPECT_EQ(back.true_labels, pool.true_labels);
  EXPECT_EQ(back.sample_ids, pool.sample_ids);
  EXPECT_EQ(back.features, pool.features.cast<float>().cast<double>());
}

TEST(PoolFilesTest, CorruptedFileFailsItsHash) {
  const fs::path dir = TempDir("pool_corrupt");
  ASSERT_TRUE(SavePool(Generate(Blobs(3.0, 0.0)).value(), dir, {}).ok());
  std::string labels = ReadFile(dir / kPoolLabelsFile).value();
  labels[0] ^= 1;
  ASSERT_TRUE(WriteFile(dir / kPoolLabelsFile, labels).ok());
  EXPECT_EQ(LoadPool(dir).status().code(), absl::StatusCode::kDataLoss);
}

TEST(BuildPoolTest, FileBackedPoolIsTruncatedAndNoised) {
  const fs::path dir = TempDir("build");
  std::string csv = "id,label,f0\n";
  for (int i = 0; i < 30; ++i) csv += std::to_string(i) + "," + std::to_string(i % 3) + ",0.5\n";
  ASSERT_TRUE(WriteFile(dir / "p.csv", csv).ok());
  DatasetSpec spec;
  spec.kind = DatasetKind::kCsvFile;
  spec.path = (dir / "p.csv").string();
  spec.n_classes = 3;
  spec.n_samples = 20;
  spec.dim = 1;
  spec.label_noise_rate = 0.25;
  const SamplePool pool = BuildPool(spec).value();
  EXPECT_EQ(pool.size(), 20u);
  int flipped = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) flipped += pool.labels[i] != pool.true_labels[i];
  EXPECT_EQ(flipped, 5);
  spec.dim = 2;
  EXPECT_FALSE(BuildPool(spec).ok());
  spec.dim = 1;
  spec.n_samples = 40;
  EXPECT_FALSE(BuildPool(spec).ok());
}

}  // namespace
}  // namespace miadyn::data
