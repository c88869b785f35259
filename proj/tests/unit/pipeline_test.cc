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
#include <filesystem>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "miadyn/pipeline/artifacts.hpp"
#include "miadyn/pipeline/config.hpp"
#include "miadyn/pipeline/manifest.hpp"
#include "miadyn/pipeline/stages.hpp"
#include "miadyn/report/svg.hpp"
#include "miadyn/util/io.hpp"

namespace miadyn::pipeline {
namespace {

namespace fs = std::filesystem;

const fs::path kMinimalConfig = fs::path(MIADYN_SOURCE_DIR) / "configs" / "minimal.json";

fs::path FreshDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("miadyn_pipeline_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::size_t Count(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string::npos;
       pos = haystack.find(needle, pos + 1)) {
    ++n;
  }
  return n;
}

TEST(ConfigTest, JsonRoundTrip) {
  const PipelineConfig cfg = LoadConfig(kMinimalConfig).value();
  EXPECT_EQ(cfg.dataset.n_samples, 200);
  EXPECT_EQ(cfg.n_shadow, 8);
  EXPECT_EQ(ConfigFromJson(ToJson(cfg)).value(), cfg);
}

TEST(ConfigTest, RejectsUnknownKeysAndBadValues) {
  Json j = ToJson(LoadConfig(kMinimalConfig).value());
  Json unknown = j;
  unknown["dataset"]["bogus"] = 1;
  const auto u = ConfigFromJson(unknown);
  ASSERT_FALSE(u.ok());
  EXPECT_NE(u.status().message().find("bogus"), std::string::npos);
  Json bad = j;
  bad["optimizer"]["lr"] = -1.0;
  EXPECT_FALSE(ConfigFromJson(bad).ok());
  Json wrong_type = j;
  wrong_type["training"]["epochs"] = "sixty";
  EXPECT_FALSE(ConfigFromJson(wrong_type).ok());
  EXPECT_FALSE(ParseConfig("{not json").ok());
}

TEST(ConfigTest, HashesIgnoreOutputDirAndTrackSections) {
  PipelineConfig a = LoadConfig(kMinimalConfig).value();
  PipelineConfig b = a;
  b.output_dir = "elsewhere";
  EXPECT_EQ(ConfigHash(a), ConfigHash(b));
  b.attack.lira.threshold = 1.0;
  EXPECT_NE(ConfigHash(a), ConfigHash(b));
  EXPECT_NE(SectionKey(a, {"/attack"}), SectionKey(b, {"/attack"}));
  EXPECT_EQ(SectionKey(a, {"/seed", "/dataset"}), SectionKey(b, {"/seed", "/dataset"}));
}

TEST(ArtifactsTest, MembershipRoundTrip) {
  const data::MembershipPlan plan = data::PlanMembership(30, 6, 4).value();
  EXPECT_EQ(DecodeMembership(EncodeMembership(plan, 4)).value(), plan);
  EXPECT_FALSE(DecodeMembership("{}").ok());
}

VulnerabilityField SmallField() {
  std::vector<Trajectory> trajs;
  for (SampleId z = 0; z < 4; ++z) {
    std::vector<VulnerabilityState> states = {VulnerabilityState::Create(0.1 * z, 0.2).value(),
                                              VulnerabilityState::Create(0.0, 0.25 * z).value()};
    trajs.push_back(Trajectory::Create(z, {0, 5}, states).value());
  }
  return {{0, 5}, trajs};
}

TEST(ArtifactsTest, StatesRoundTrip) {
  const VulnerabilityField field = SmallField();
  const VulnerabilityField back = DecodeStates(EncodeStates(field)).value();
  EXPECT_EQ(back.epochs, field.epochs);
  ASSERT_EQ(back.trajectories.size(), 4u);
  for (std::size_t z = 0; z < 4; ++z) {
    EXPECT_EQ(back.trajectories[z].states(), field.trajectories[z].states());
  }
}

TEST(ArtifactsTest, HardnessCsvRoundTripKeepsNever) {
  hardness::HardnessProfile p;
  p.n_checkpoints = 5;
  p.grad_norm = {0.5, 1.0 / 3.0};
  p.iteration_learned = {2, std::nullopt};
  p.influence = {1e-7, 0.25};
  p.aleatoric = {0.1, 0.2};
  p.epistemic = {0.0, 0.3};
  const std::string csv = HardnessCsv(p);
  EXPECT_NE(csv.find(kNeverLearned), std::string::npos);
  const hardness::HardnessProfile back = ParseHardnessCsv(csv, 5).value();
  EXPECT_EQ(back.grad_norm, p.grad_norm);
  EXPECT_EQ(back.iteration_learned, p.iteration_learned);
  EXPECT_EQ(back.influence, p.influence);
  EXPECT_EQ(back.epistemic, p.epistemic);
  EXPECT_FALSE(ParseHardnessCsv("sample,x\n", 5).ok());
}

TEST(ArtifactsTest, FormattingIsExactAndFlagsMissingValues) {
  EXPECT_EQ(std::stod(FormatReal(0.1)), 0.1);
  EXPECT_EQ(FormatOptional(std::nullopt), "undefined");
}

TEST(ManifestTest, EncodeDecodeRoundTrip) {
  RunManifest m;
  m.config_hash = "abc";
  StageRecord r;
  r.status = StageStatus::kCompleted;
  r.config_key = "k";
  r.inputs = {{"data/x", "h1"}};
  r.outputs = {{"y", "h2"}};
  r.wall_seconds = 1.5;
  r.warnings = {"w"};
  m.stages["train"] = r;
  StageRecord failed;
  failed.error = "boom";
  m.stages["attack"] = failed;
  const std::string text = EncodeManifest(m);
  const RunManifest back = DecodeManifest(text).value();
  EXPECT_EQ(EncodeManifest(back), text);
  EXPECT_TRUE(back.Completed("train"));
  EXPECT_FALSE(back.Completed("attack"));
  EXPECT_EQ(back.Find("attack")->error, "boom");
}

std::string WithoutWallTime(RunManifest m) {
  for (auto& [name, record] : m.stages) record.wall_seconds = 0.0;
  return EncodeManifest(m);
}

class PipelineRunTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    cfg_ = new PipelineConfig(LoadConfig(kMinimalConfig).value());
    dir_ = new fs::path(FreshDir("run"));
    manifest_ = new RunManifest(RunPipeline(*cfg_, *dir_).value());
  }
  static void TearDownTestSuite() {
    delete cfg_;
    delete dir_;
    delete manifest_;
  }
  static PipelineConfig* cfg_;
  static fs::path* dir_;
  static RunManifest* manifest_;
};

PipelineConfig* PipelineRunTest::cfg_ = nullptr;
fs::path* PipelineRunTest::dir_ = nullptr;
RunManifest* PipelineRunTest::manifest_ = nullptr;

TEST_F(PipelineRunTest, EmitsAndVerifiesEveryDeclaredFile) {
  for (std::string_view stage : kStageOrder) EXPECT_TRUE(manifest_->Completed(stage)) << stage;
  EXPECT_TRUE(VerifyManifest(*dir_, *manifest_).ok());
  for (const char* f : {files::kMembership, files::kScoresJsonl, files::kStates, files::kMetrics,
                        files::kTransitions, files::kExposure, files::kClusters, files::kTravel,
                        files::kHardness, files::kCorrelations}) {
    EXPECT_TRUE(fs::exists(*dir_ / f)) << f;
  }
  for (const char* svg : {"plane_initial.svg", "plane_mid.svg", "plane_final.svg", "exposure.svg",
                          "entropy.svg", "transition_11_31.svg", "loss_final.svg"}) {
    EXPECT_TRUE(fs::exists(*dir_ / files::kReportDir / svg)) << svg;
  }
}

TEST_F(PipelineRunTest, RerunSkipsEveryStage) {
  std::vector<std::string> log;
  RunOptions options;
  options.log = [&](const std::string& line) { log.push_back(line); };
  const RunManifest again = RunPipeline(*cfg_, *dir_, options).value();
  ASSERT_EQ(log.size(), kStageOrder.size());
  for (const std::string& line : log) EXPECT_NE(line.find("skipped"), std::string::npos) << line;
  EXPECT_EQ(WithoutWallTime(again), WithoutWallTime(*manifest_));
}

TEST_F(PipelineRunTest, SecondDirectoryIsByteIdentical) {
  const fs::path other = FreshDir("run_again");
  const RunManifest m = RunPipeline(*cfg_, other).value();
  EXPECT_EQ(WithoutWallTime(m), WithoutWallTime(*manifest_));
  for (const char* f : {files::kMetrics, files::kCorrelations, "report/plane_final.svg",
                        "report/exposure.svg"}) {
    EXPECT_EQ(ReadFile(other / f).value(), ReadFile(*dir_ / f).value()) << f;
  }
}

TEST_F(PipelineRunTest, CorruptedScoresAreRefusedByAttack) {
  const fs::path copy = FreshDir("corrupt");
  fs::copy(*dir_, copy, fs::copy_options::recursive);
  std::string scores = ReadFile(copy / files::kScoresJsonl).value();
  scores[scores.size() / 2] = scores[scores.size() / 2] == '1' ? '2' : '1';
  ASSERT_TRUE(WriteFile(copy / files::kScoresJsonl, scores).ok());
  const auto run = RunPipeline(*cfg_, copy, {}, "attack");
  ASSERT_FALSE(run.ok());
  EXPECT_EQ(run.status().code(), absl::StatusCode::kDataLoss);
  EXPECT_NE(run.status().message().find("hash mismatch"), std::string::npos);
  EXPECT_NE(run.status().message().find("scores.jsonl"), std::string::npos);
}

TEST(StageRunnerTest, MissingProducerIsAPreconditionFailure) {
  const PipelineConfig cfg = LoadConfig(kMinimalConfig).value();
  const auto run = RunPipeline(cfg, FreshDir("missing"), {}, "dynamics");
  ASSERT_FALSE(run.ok());
  EXPECT_EQ(run.status().code(), absl::StatusCode::kFailedPrecondition);
  EXPECT_FALSE(RunPipeline(cfg, FreshDir("unknown"), {}, "nonsense").ok());
}

TEST(StageRunnerTest, FailedStageIsRecorded) {
  PipelineConfig cfg = LoadConfig(kMinimalConfig).value();
  cfg.dataset.kind = data::DatasetKind::kCsvFile;
  cfg.dataset.path = "/nonexistent/pool.csv";
  const fs::path dir = FreshDir("failed");
  EXPECT_FALSE(RunPipeline(cfg, dir, {}, "gen-data").ok());
  const RunManifest m = LoadManifest(dir).value();
  ASSERT_NE(m.Find("gen-data"), nullptr);
  EXPECT_EQ(m.Find("gen-data")->status, StageStatus::kFailed);
  EXPECT_FALSE(m.Find("gen-data")->error.empty());
}

std::vector<VulnerabilityState> ThreeStates() {
  return {VulnerabilityState::Create(0.1, 0.2).value(), VulnerabilityState::Create(0.5, 0.5).value(),
          VulnerabilityState::Create(0.0, 0.9).value()};
}

TEST(SvgTest, PlaneHasMarkersDiagonalAndIsDeterministic) {
  const std::vector<VulnerabilityState> states = ThreeStates();
  const std::string svg = report::RenderPlane(states);
  EXPECT_NE(svg.find("<svg xmlns="), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_EQ(Count(svg, "class=\"marker\""), 3u);
  EXPECT_EQ(Count(svg, "class=\"diagonal\""), 1u);
  EXPECT_EQ(Count(svg, "class=\"overlay\""), 0u);
  EXPECT_NE(svg.find(">FPR<"), std::string::npos);
  EXPECT_NE(svg.find(">TPR<"), std::string::npos);
  EXPECT_EQ(report::RenderPlane(states), svg);
  report::PlaneOptions options;
  options.overlays = {states};
  options.marginals = false;
  const std::string overlaid = report::RenderPlane(states, options);
  EXPECT_EQ(Count(overlaid, "class=\"overlay\""), 1u);
  EXPECT_EQ(Count(overlaid, "class=\"marginal\""), 0u);
}

TEST(SvgTest, CurvesDrawOnePolylinePerSeries) {
  const std::vector<report::Series> constant = {{"flat", {0, 5, 10}, {0.4, 0.4, 0.4}}};
  const report::Rendered one = report::RenderCurves(constant, report::CurveKind::kExposure);
  EXPECT_TRUE(one.warnings.empty());
  const std::size_t start = one.svg.find("points=\"") + 8;
  const std::string points = one.svg.substr(start, one.svg.find('"', start) - start);
  // Every vertex shares the y coordinate.
  std::vector<std::string> ys;
  for (std::size_t pos = points.find(','); pos != std::string::npos; pos = points.find(',', pos + 1)) {
    ys.push_back(points.substr(pos + 1, points.find(' ', pos) - pos - 1));
  }
  ASSERT_EQ(ys.size(), 3u);
  EXPECT_EQ(ys[0], ys[1]);
  EXPECT_EQ(ys[1], ys[2]);

  const std::vector<report::Series> two = {{"sgd", {0, 5}, {0.1, 0.2}}, {"sam", {0, 5}, {0.05, 0.1}}};
  const report::Rendered both = report::RenderCurves(two, report::CurveKind::kTransition);
  EXPECT_EQ(Count(both.svg, "class=\"series\""), 2u);
  EXPECT_NE(both.svg.find(">sgd<"), std::string::npos);
  EXPECT_NE(both.svg.find(">sam<"), std::string::npos);
}

TEST(SvgTest, OutOfRangeValuesAreClippedWithAWarning) {
  const std::vector<report::Series> s = {{"cov", {0, 1, 2}, {0.5, 1.5, -0.2}}};
  const report::Rendered r = report::RenderCurves(s, report::CurveKind::kExposure);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("2 value(s)"), std::string::npos);
}

TEST(SvgTest, MissingValuesBreakTheLine) {
  const std::vector<report::Series> s = {{"a", {0, 1, 2, 3}, {0.1, std::nullopt, 0.2, 0.3}}};
  const report::Rendered r = report::RenderCurves(s, report::CurveKind::kTransition);
  EXPECT_EQ(Count(r.svg, "class=\"series\""), 2u);
}

TEST(SvgTest, HistogramsRenderEachGroup) {
  const std::vector<report::HistogramGroup> groups = {{"high", {0.1, 0.2, 0.3}}, {"low", {1.0, 2.0}}};
  const std::string svg = report::RenderHistograms(groups, {});
  EXPECT_NE(svg.find(">high<"), std::string::npos);
  EXPECT_NE(svg.find(">low<"), std::string::npos);
  EXPECT_EQ(report::RenderHistograms(groups, {}), svg);
}

}  // namespace
}  // namespace miadyn::pipeline
