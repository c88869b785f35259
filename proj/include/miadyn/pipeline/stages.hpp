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
// The pipeline stages and the runner that sequences, skips and records them.
//
// A stage is skipped when its manifest record is complete, was produced under
// the same config fields and the same input hashes, and its outputs still
// hash-verify. Before a stage runs, every input is checked against the hash
// its producer recorded.

#ifndef MIADYN_PIPELINE_STAGES_HPP_
#define MIADYN_PIPELINE_STAGES_HPP_

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "json.hpp"
#include "miadyn/attack/field.hpp"
#include "miadyn/attack/shokri.hpp"
#include "miadyn/data/loaders.hpp"
#include "miadyn/data/membership.hpp"
#include "miadyn/dynamics/exposure.hpp"
#include "miadyn/dynamics/summary.hpp"
#include "miadyn/hardness/correlation.hpp"
#include "miadyn/hardness/profile.hpp"
#include "miadyn/pipeline/artifacts.hpp"
#include "miadyn/pipeline/config.hpp"
#include "miadyn/pipeline/manifest.hpp"
#include "miadyn/report/svg.hpp"
#include "miadyn/train/population.hpp"
#include "miadyn/train/posteriors.hpp"
#include "miadyn/train/score_log.hpp"
#include "miadyn/util/io.hpp"
#include "miadyn/util/status.hpp"

namespace miadyn::pipeline {

namespace files {
inline constexpr const char* kDataDir = "data";
inline constexpr const char* kMembership = "data/membership.json";
inline constexpr const char* kScoresJsonl = "scores.jsonl";
inline constexpr const char* kScoresBin = "scores.bin";
inline constexpr const char* kRunsDir = "runs";
inline constexpr const char* kStates = "states.jsonl";
inline constexpr const char* kMetrics = "metrics.json";
inline constexpr const char* kTransitions = "transitions.csv";
inline constexpr const char* kExposure = "exposure.csv";
inline constexpr const char* kClusters = "clusters.csv";
inline constexpr const char* kTravel = "travel.csv";
inline constexpr const char* kHardness = "hardness.csv";
inline constexpr const char* kHardnessMeta = "hardness.meta.json";
inline constexpr const char* kCorrelations = "correlations.csv";
inline constexpr const char* kReportDir = "report";
}  // namespace files

struct StageOutput {
  std::vector<std::string> files;  // relative to the run directory
  std::vector<std::string> warnings;
};

using StageBody =
    std::function<absl::StatusOr<StageOutput>(const PipelineConfig&, const std::filesystem::path&)>;

// Files taken from one producer: exact paths, or every path under a prefix
// ending in '/'.
struct InputSpec {
  std::string producer;
  std::vector<std::string> patterns;
};

struct StageDef {
  std::string name;
  std::string config_key;
  std::vector<InputSpec> inputs;
  StageBody body;
};

enum class StageAction { kRan, kSkipped };

struct RunOptions {
  bool force = false;
  std::function<void(const std::string&)> log;
};

namespace internal {

inline std::string Rel(const std::filesystem::path& p) { return p.generic_string(); }

inline bool Matches(const std::string& path, const std::string& pattern) {
  return pattern.ends_with('/') ? path.starts_with(pattern) : path == pattern;
}

inline absl::StatusOr<data::MembershipPlan> LoadPlan(const std::filesystem::path& out) {
  MIADYN_ASSIGN_OR_RETURN(std::string text, ReadFile(out / files::kMembership));
  return DecodeMembership(text);
}

inline absl::StatusOr<train::ScoreLog> LoadScores(const std::filesystem::path& out) {
  MIADYN_ASSIGN_OR_RETURN(std::string text, ReadFile(out / files::kScoresJsonl));
  return train::ParseJsonLines(text);
}

inline absl::StatusOr<VulnerabilityField> LoadStates(const std::filesystem::path& out) {
  MIADYN_ASSIGN_OR_RETURN(std::string text, ReadFile(out / files::kStates));
  return DecodeStates(text);
}

inline absl::StatusOr<std::vector<train::TrainRun>> LoadCheckpoints(
    const PipelineConfig& cfg, const std::filesystem::path& out, const data::MembershipPlan& plan) {
  return LoadRuns(out / files::kRunsDir, plan, train::CheckpointEpochs(TrainingConfigOf(cfg)));
}

inline absl::Status Emit(const std::filesystem::path& out, const std::string& rel,
                         std::string_view content, StageOutput& result) {
  MIADYN_RETURN_IF_ERROR(WriteFile(out / rel, content));
  result.files.push_back(rel);
  return absl::OkStatus();
}

}  // namespace internal

inline absl::StatusOr<StageOutput> GenDataStage(const PipelineConfig& cfg,
                                                const std::filesystem::path& out) {
  MIADYN_ASSIGN_OR_RETURN(data::SamplePool pool, data::BuildPool(cfg.dataset));
  MIADYN_RETURN_IF_ERROR(data::SavePool(pool, out / files::kDataDir, ToJson(cfg)["dataset"]));
  StageOutput result;
  for (const char* f : {data::kPoolMetaFile, data::kPoolFeaturesFile, data::kPoolLabelsFile,
                        data::kPoolTrueLabelsFile, data::kPoolIdsFile}) {
    result.files.push_back(internal::Rel(std::filesystem::path(files::kDataDir) / f));
  }
  MIADYN_ASSIGN_OR_RETURN(data::MembershipPlan plan,
                          data::PlanMembership(static_cast<int>(pool.size()), cfg.n_shadow, cfg.seed));
  MIADYN_RETURN_IF_ERROR(
      internal::Emit(out, files::kMembership, EncodeMembership(plan, cfg.seed), result));
  return result;
}

inline absl::StatusOr<StageOutput> TrainStage(const PipelineConfig& cfg,
                                              const std::filesystem::path& out) {
  MIADYN_ASSIGN_OR_RETURN(data::SamplePool pool, data::LoadPool(out / files::kDataDir));
  MIADYN_ASSIGN_OR_RETURN(data::MembershipPlan plan, internal::LoadPlan(out));
  MIADYN_ASSIGN_OR_RETURN(train::Population pop,
                          train::TrainPopulation(pool, plan, TrainingConfigOf(cfg)));
  StageOutput result;
  MIADYN_RETURN_IF_ERROR(
      internal::Emit(out, files::kScoresJsonl, train::ToJsonLines(pop.scores), result));
  MIADYN_RETURN_IF_ERROR(
      internal::Emit(out, files::kScoresBin, train::ToColumnar(pop.scores), result));
  MIADYN_ASSIGN_OR_RETURN(std::vector<std::filesystem::path> ckpts,
                          SaveRuns(pop.runs, out, files::kRunsDir));
  for (const auto& p : ckpts) result.files.push_back(internal::Rel(p));
  return result;
}

inline absl::StatusOr<StageOutput> AttackStage(const PipelineConfig& cfg,
                                               const std::filesystem::path& out) {
  MIADYN_ASSIGN_OR_RETURN(data::MembershipPlan plan, internal::LoadPlan(out));
  VulnerabilityField field;
  if (cfg.attack.method == AttackMethod::kLira) {
    MIADYN_ASSIGN_OR_RETURN(train::ScoreLog log, internal::LoadScores(out));
    MIADYN_ASSIGN_OR_RETURN(field, attack::LiraVulnerabilityField(log, plan, cfg.attack.lira));
  } else {
    MIADYN_ASSIGN_OR_RETURN(data::SamplePool pool, data::LoadPool(out / files::kDataDir));
    MIADYN_ASSIGN_OR_RETURN(std::vector<train::TrainRun> runs,
                            internal::LoadCheckpoints(cfg, out, plan));
    MIADYN_ASSIGN_OR_RETURN(train::PosteriorCube post, train::ComputePosteriors(runs, pool));
    MIADYN_ASSIGN_OR_RETURN(field,
                            attack::ShokriVulnerabilityField(post, pool, plan, cfg.attack.shokri));
  }
  StageOutput result;
  MIADYN_RETURN_IF_ERROR(internal::Emit(out, files::kStates, EncodeStates(field), result));
  return result;
}

inline absl::StatusOr<DynamicsReport> AnalyzeField(const VulnerabilityField& field,
                                                   const DynamicsSection& d) {
  DynamicsReport r;
  dynamics::SummaryOptions so;
  so.entropy_resolution = d.entropy_resolution;
  so.dbscan = d.dbscan;
  so.vulnerable_threshold = d.theta_vuln;
  MIADYN_ASSIGN_OR_RETURN(r.summary, dynamics::Summarize(field, so));
  dynamics::ExposureOptions eo;
  eo.vulnerable_threshold = d.theta_vuln;
  eo.budget_rule = d.budget_rule;
  eo.budget_fraction = d.budget_fraction;
  MIADYN_ASSIGN_OR_RETURN(r.exposure, dynamics::ComputeExposureCurve(field.trajectories, eo));
  MIADYN_ASSIGN_OR_RETURN(r.strata,
                          dynamics::TravelStratification(field.trajectories, d.travel_quantile));
  r.travel_quantile = d.travel_quantile;
  for (const auto& t : field.trajectories) r.path_lengths.push_back(PathLength(t));
  return r;
}

inline absl::StatusOr<StageOutput> DynamicsStage(const PipelineConfig& cfg,
                                                 const std::filesystem::path& out) {
  MIADYN_ASSIGN_OR_RETURN(VulnerabilityField field, internal::LoadStates(out));
  MIADYN_ASSIGN_OR_RETURN(DynamicsReport r, AnalyzeField(field, cfg.dynamics));
  StageOutput result;
  MIADYN_RETURN_IF_ERROR(internal::Emit(out, files::kMetrics, MetricsJson(r), result));
  MIADYN_RETURN_IF_ERROR(
      internal::Emit(out, files::kTransitions, TransitionsCsv(r.summary), result));
  MIADYN_RETURN_IF_ERROR(
      internal::Emit(out, files::kExposure, ExposureCsv(r.exposure, field.epochs), result));
  MIADYN_RETURN_IF_ERROR(internal::Emit(out, files::kClusters, ClustersCsv(r.summary), result));
  MIADYN_RETURN_IF_ERROR(internal::Emit(out, files::kTravel, TravelCsv(r), result));
  if (!r.exposure.defined) {
    result.warnings.push_back(absl::StrCat("no sample ends with advantage above ",
                                           FormatReal(cfg.dynamics.theta_vuln),
                                           "; exposure curve is undefined"));
  }
  return result;
}

// Index of a recorded epoch, or -1 for the final checkpoint.
inline int UncertaintyCheckpoint(const PipelineConfig& cfg) {
  if (cfg.hardness.uncertainty_epoch < 0) return -1;
  const std::vector<int> epochs = train::CheckpointEpochs(TrainingConfigOf(cfg));
  const auto it = std::find(epochs.begin(), epochs.end(), cfg.hardness.uncertainty_epoch);
  return static_cast<int>(it - epochs.begin());
}

inline absl::StatusOr<StageOutput> HardnessStage(const PipelineConfig& cfg,
                                                 const std::filesystem::path& out) {
  MIADYN_ASSIGN_OR_RETURN(data::SamplePool pool, data::LoadPool(out / files::kDataDir));
  MIADYN_ASSIGN_OR_RETURN(data::MembershipPlan plan, internal::LoadPlan(out));
  MIADYN_ASSIGN_OR_RETURN(train::ScoreLog log, internal::LoadScores(out));
  MIADYN_ASSIGN_OR_RETURN(attack::ScoreCube cube, attack::BuildScoreCube(log, plan));
  MIADYN_ASSIGN_OR_RETURN(std::vector<train::TrainRun> runs,
                          internal::LoadCheckpoints(cfg, out, plan));
  MIADYN_ASSIGN_OR_RETURN(train::PosteriorCube post, train::ComputePosteriors(runs, pool));
  hardness::HardnessOptions options;
  options.influence = cfg.hardness.influence;
  options.uncertainty_checkpoint = UncertaintyCheckpoint(cfg);
  MIADYN_ASSIGN_OR_RETURN(hardness::HardnessProfile profile,
                          hardness::ComputeHardness(pool, plan, runs, cube, post, options));

  nlohmann::ordered_json meta;
  meta["n_checkpoints"] = profile.n_checkpoints;
  meta["checkpoint_epochs"] = cube.epochs;
  meta["grad_norm"] = "mean l2 norm over in-models and all checkpoints";
  meta["iteration_learned"] = {
      {"history", "correct on a strict majority of in-models"},
      {"never", kNeverLearned},
      {"never_rank_in_correlations", profile.n_checkpoints}};
  meta["influence"] = {{"kind", "self-influence, mean over in-models at the final checkpoint"},
                       {"scope", hardness::InfluenceScopeName(cfg.hardness.influence.scope)},
                       {"damping", cfg.hardness.influence.damping}};
  meta["uncertainty"] = {{"ensemble", "out-models"}, {"epoch", profile.uncertainty_epoch}};
  StageOutput result;
  MIADYN_RETURN_IF_ERROR(internal::Emit(out, files::kHardness, HardnessCsv(profile), result));
  MIADYN_RETURN_IF_ERROR(internal::Emit(out, files::kHardnessMeta, meta.dump(2) + "\n", result));
  return result;
}

inline absl::StatusOr<std::vector<hardness::CorrelationCell>> Correlate(
    const hardness::HardnessProfile& profile, const VulnerabilityField& field, double theta_vuln) {
  const std::size_t m = field.trajectories.size();
  if (profile.grad_norm.size() != m) {
    return absl::InvalidArgumentError(absl::StrCat("hardness covers ", profile.grad_norm.size(),
                                                   " samples, states cover ", m));
  }
  std::vector<double> learned(m), alpha(m), v_alpha(m);
  for (std::size_t z = 0; z < m; ++z) {
    learned[z] = hardness::IterationLearnedValue(profile.iteration_learned[z], profile.n_checkpoints);
    alpha[z] = Advantage(field.trajectories[z].back());
    MIADYN_ASSIGN_OR_RETURN(v_alpha[z], hardness::EncodingRate(field.trajectories[z]));
  }
  const std::vector<hardness::NamedSeries> metrics = {
      {"grad_norm", profile.grad_norm},   {"iteration_learned", learned},
      {"influence", profile.influence},   {"aleatoric", profile.aleatoric},
      {"epistemic", profile.epistemic}};
  const std::vector<hardness::NamedSeries> targets = {{"alpha", alpha}, {"v_alpha", v_alpha}};
  return hardness::CorrelationTable(metrics, targets, alpha, theta_vuln);
}

inline absl::StatusOr<StageOutput> CorrelateStage(const PipelineConfig& cfg,
                                                  const std::filesystem::path& out) {
  MIADYN_ASSIGN_OR_RETURN(VulnerabilityField field, internal::LoadStates(out));
  MIADYN_ASSIGN_OR_RETURN(std::string text, ReadFile(out / files::kHardness));
  MIADYN_ASSIGN_OR_RETURN(hardness::HardnessProfile profile,
                          ParseHardnessCsv(text, static_cast<int>(field.epochs.size())));
  MIADYN_ASSIGN_OR_RETURN(std::vector<hardness::CorrelationCell> cells,
                          Correlate(profile, field, cfg.dynamics.theta_vuln));
  StageOutput result;
  MIADYN_RETURN_IF_ERROR(internal::Emit(out, files::kCorrelations, CorrelationsCsv(cells), result));
  for (const auto& c : cells) {
    if (!c.r) {
      result.warnings.push_back(absl::StrCat("correlation ", c.metric, " / ", c.target, " / ",
                                             c.subset, " is undefined (n=", c.n, ")"));
    }
  }
  return result;
}

inline absl::StatusOr<StageOutput> ReportStage(const PipelineConfig& cfg,
                                               const std::filesystem::path& out) {
  MIADYN_ASSIGN_OR_RETURN(VulnerabilityField field, internal::LoadStates(out));
  MIADYN_ASSIGN_OR_RETURN(std::string metrics_text, ReadFile(out / files::kMetrics));
  const auto metrics = nlohmann::json::parse(metrics_text, nullptr, false);
  if (metrics.is_discarded()) return absl::DataLossError("metrics.json is not JSON");
  MIADYN_ASSIGN_OR_RETURN(data::MembershipPlan plan, internal::LoadPlan(out));
  MIADYN_ASSIGN_OR_RETURN(train::ScoreLog log, internal::LoadScores(out));
  MIADYN_ASSIGN_OR_RETURN(attack::ScoreCube cube, attack::BuildScoreCube(log, plan));

  StageOutput result;
  const std::filesystem::path dir = files::kReportDir;
  const std::size_t last = field.epochs.size() - 1;
  const std::vector<std::pair<const char*, std::size_t>> moments = {
      {"initial", 0}, {"mid", last / 2}, {"final", last}};

  std::vector<SampleId> high, low;
  try {
    high = metrics.at("travel").at("high").get<std::vector<SampleId>>();
    low = metrics.at("travel").at("low").get<std::vector<SampleId>>();
  } catch (const nlohmann::json::exception& e) {
    return absl::DataLossError(absl::StrCat("metrics.json: ", e.what()));
  }

  for (const auto& [tag, k] : moments) {
    report::PlaneOptions po;
    po.title = absl::StrCat("Vulnerability plane, epoch ", field.epochs[k]);
    po.marginals = cfg.report.marginals;
    if (k == last) {
      const std::size_t n = std::min<std::size_t>(high.size(), static_cast<std::size_t>(cfg.report.overlay_count));
      for (std::size_t i = 0; i < n; ++i) po.overlays.push_back(field.trajectories[high[i]].states());
    }
    const auto states = field.StatesAt(k);
    MIADYN_RETURN_IF_ERROR(internal::Emit(out, internal::Rel(dir / absl::StrCat("plane_", tag, ".svg")),
                                          report::RenderPlane(states, po), result));
  }

  std::vector<double> xs(field.epochs.begin(), field.epochs.end());
  auto emit_curve = [&](const std::string& name, std::vector<report::Series> series,
                        report::CurveKind kind, report::CurveOptions options) -> absl::Status {
    report::Rendered r = report::RenderCurves(series, kind, options);
    for (auto& w : r.warnings) result.warnings.push_back(std::move(w));
    return internal::Emit(out, internal::Rel(dir / name), r.svg, result);
  };

  {
    report::Series coverage{"coverage", xs, {}};
    report::Series chance{"chance |V|/M", xs, {}};
    const bool defined = metrics.at("exposure").at("defined").get<bool>();
    const auto values = metrics.at("exposure").at("coverage").get<std::vector<double>>();
    const double base = static_cast<double>(metrics.at("exposure").at("vulnerable_set_size").get<std::size_t>()) /
                        static_cast<double>(field.trajectories.size());
    for (std::size_t k = 0; k < xs.size(); ++k) {
      coverage.y.push_back(defined ? std::optional<double>(values[k]) : std::nullopt);
      chance.y.push_back(base);
    }
    MIADYN_RETURN_IF_ERROR(emit_curve("exposure.svg", {coverage, chance}, report::CurveKind::kExposure,
                                      {"Vulnerable samples identified", "epoch", "coverage", {}, {}}));
  }
  {
    report::Series entropy{"entropy", xs, {}};
    for (double h : metrics.at("entropy_series").get<std::vector<double>>()) entropy.y.push_back(h);
    MIADYN_RETURN_IF_ERROR(emit_curve("entropy.svg", {entropy}, report::CurveKind::kEntropy,
                                      {"Spatial entropy", "epoch", "nats", {}, {}}));
  }
  {
    report::Series a{"S_11 to S_31", {}, {}};
    const auto& series = metrics.at("robust_to_vulnerable");
    for (std::size_t k = 0; k < series.size(); ++k) {
      a.x.push_back(xs[k]);
      a.y.push_back(series[k].is_null() ? std::nullopt : std::optional<double>(series[k].get<double>()));
    }
    MIADYN_RETURN_IF_ERROR(emit_curve("transition_11_31.svg", {a}, report::CurveKind::kTransition,
                                      {"Robust to vulnerable transitions", "epoch from",
                                       "probability", {}, {}}));
  }

  // Training loss of each stratum: per sample, the mean over its in-models.
  auto mean_in_loss = [&](std::size_t k, SampleId z) {
    double s = 0.0;
    int n = 0;
    for (int i = 0; i < cube.n_models; ++i) {
      if (!cube.member[static_cast<std::size_t>(i) * cube.n_samples + z]) continue;
      s += static_cast<double>(cube.loss[cube.Index(k, i, static_cast<int>(z))]);
      ++n;
    }
    return s / n;
  };
  for (const auto& [tag, k] : moments) {
    std::vector<report::HistogramGroup> groups = {{"high travel", {}}, {"low travel", {}}};
    for (SampleId z : high) groups[0].values.push_back(mean_in_loss(k, z));
    for (SampleId z : low) groups[1].values.push_back(mean_in_loss(k, z));
    report::HistogramOptions ho;
    ho.title = absl::StrCat("Training loss by travel stratum, epoch ", field.epochs[k]);
    ho.x_label = "loss";
    MIADYN_RETURN_IF_ERROR(internal::Emit(out, internal::Rel(dir / absl::StrCat("loss_", tag, ".svg")),
                                          report::RenderHistograms(groups, ho), result));
  }
  return result;
}

// Stage table for a config, in execution order.
inline std::vector<StageDef> StageTable(const PipelineConfig& cfg) {
  const bool lira = cfg.attack.method == AttackMethod::kLira;
  std::vector<StageDef> defs;
  defs.push_back({"gen-data", SectionKey(cfg, {"/seed", "/dataset", "/training/n_shadow"}), {},
                  GenDataStage});
  defs.push_back({"train", SectionKey(cfg, {"/seed", "/model", "/optimizer", "/training"}),
                  {{"gen-data", {"data/"}}}, TrainStage});
  defs.push_back({"attack", SectionKey(cfg, {"/attack"}),
                  lira ? std::vector<InputSpec>{{"gen-data", {files::kMembership}},
                                                {"train", {files::kScoresJsonl}}}
                       : std::vector<InputSpec>{{"gen-data", {"data/"}}, {"train", {"runs/"}}},
                  AttackStage});
  defs.push_back({"dynamics", SectionKey(cfg, {"/dynamics"}), {{"attack", {files::kStates}}},
                  DynamicsStage});
  defs.push_back({"hardness", SectionKey(cfg, {"/hardness"}),
                  {{"gen-data", {"data/"}}, {"train", {files::kScoresJsonl, "runs/"}}},
                  HardnessStage});
  defs.push_back({"correlate", SectionKey(cfg, {"/dynamics/theta_vuln"}),
                  {{"attack", {files::kStates}}, {"hardness", {files::kHardness}}},
                  CorrelateStage});
  defs.push_back({"report", SectionKey(cfg, {"/report"}),
                  {{"gen-data", {files::kMembership}},
                   {"train", {files::kScoresJsonl}},
                   {"attack", {files::kStates}},
                   {"dynamics", {files::kMetrics}}},
                  ReportStage});
  return defs;
}

// Runs one stage against the manifest in `out`, updating and saving it.
inline absl::StatusOr<StageAction> RunStage(const StageDef& def, const std::vector<StageDef>& table,
                                            const PipelineConfig& cfg,
                                            const std::filesystem::path& out,
                                            RunManifest& manifest, const RunOptions& options) {
  auto fail = [&](absl::Status status) -> absl::Status {
    return absl::Status(status.code(), absl::StrCat(def.name, ": ", status.message()));
  };

  // Expected inputs: the producers' recorded hashes.
  FileHashes inputs;
  for (const auto& spec : def.inputs) {
    const StageRecord* producer = manifest.Find(spec.producer);
    if (producer == nullptr || producer->status != StageStatus::kCompleted) {
      return fail(absl::FailedPreconditionError(
          absl::StrCat("needs stage '", spec.producer, "' to complete first")));
    }
    const auto it = std::find_if(table.begin(), table.end(),
                                 [&](const StageDef& d) { return d.name == spec.producer; });
    if (it != table.end() && producer->config_key != it->config_key) {
      return fail(absl::FailedPreconditionError(absl::StrCat(
          "stage '", spec.producer, "' was run with a different config; rerun it first")));
    }
    for (const auto& [path, hash] : producer->outputs) {
      for (const auto& pattern : spec.patterns) {
        if (internal::Matches(path, pattern)) inputs[path] = hash;
      }
    }
  }

  const StageRecord* prior = manifest.Find(def.name);
  if (!options.force && prior != nullptr && prior->status == StageStatus::kCompleted &&
      prior->config_key == def.config_key && prior->inputs == inputs &&
      !FirstMismatch(out, prior->inputs) && !FirstMismatch(out, prior->outputs)) {
    if (options.log) options.log(absl::StrCat(def.name, ": up to date, skipped"));
    return StageAction::kSkipped;
  }

  if (auto bad = FirstMismatch(out, inputs)) {
    return fail(absl::DataLossError(absl::StrCat(
        "hash mismatch: ", *bad, " does not match the hash recorded by its producer")));
  }

  if (options.log) options.log(absl::StrCat(def.name, ": running"));
  const auto start = std::chrono::steady_clock::now();
  absl::StatusOr<StageOutput> produced = def.body(cfg, out);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  StageRecord record;
  record.config_key = def.config_key;
  record.inputs = inputs;
  record.wall_seconds = wall;
  if (!produced.ok()) {
    record.status = StageStatus::kFailed;
    record.error = std::string(produced.status().message());
    manifest.stages[def.name] = record;
    MIADYN_RETURN_IF_ERROR(SaveManifest(out, manifest));
    return fail(produced.status());
  }
  auto hashes = HashFiles(out, produced->files);
  if (!hashes.ok()) return fail(hashes.status());
  record.status = StageStatus::kCompleted;
  record.outputs = std::move(hashes).value();
  record.warnings = produced->warnings;
  manifest.stages[def.name] = std::move(record);
  MIADYN_RETURN_IF_ERROR(SaveManifest(out, manifest));
  if (options.log) {
    options.log(absl::StrCat(def.name, ": done in ", wall, " s"));
    for (const auto& w : produced->warnings) options.log(absl::StrCat(def.name, ": warning: ", w));
  }
  return StageAction::kRan;
}

// Runs the named stage, or every stage in order when `only` is empty.
inline absl::StatusOr<RunManifest> RunPipeline(const PipelineConfig& cfg,
                                               const std::filesystem::path& out,
                                               const RunOptions& options = {},
                                               std::string_view only = "") {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) {
    return absl::PermissionDeniedError(absl::StrCat("cannot create ", out.string(), ": ", ec.message()));
  }
  MIADYN_ASSIGN_OR_RETURN(RunManifest manifest, LoadManifest(out));
  manifest.tool_version = MIADYN_VERSION;
  manifest.config_hash = ConfigHash(cfg);
  const std::vector<StageDef> table = StageTable(cfg);
  bool found = only.empty();
  for (const auto& def : table) {
    if (!only.empty() && def.name != only) continue;
    found = true;
    MIADYN_ASSIGN_OR_RETURN(StageAction action, RunStage(def, table, cfg, out, manifest, options));
    (void)action;
  }
  if (!found) return absl::InvalidArgumentError(absl::StrCat("unknown stage '", std::string(only), "'"));
  return manifest;
}

}  // namespace miadyn::pipeline

#endif  // MIADYN_PIPELINE_STAGES_HPP_
