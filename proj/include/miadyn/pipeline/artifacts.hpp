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
// Text encodings of the pipeline's intermediate and final tables. Reals are
// written with 17 significant digits so every value reads back bit-exact.

#ifndef MIADYN_PIPELINE_ARTIFACTS_HPP_
#define MIADYN_PIPELINE_ARTIFACTS_HPP_

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "absl/strings/string_view.h"
#include "json.hpp"
#include "miadyn/core/field.hpp"
#include "miadyn/core/plane.hpp"
#include "miadyn/data/membership.hpp"
#include "miadyn/dynamics/exposure.hpp"
#include "miadyn/dynamics/summary.hpp"
#include "miadyn/hardness/correlation.hpp"
#include "miadyn/hardness/profile.hpp"
#include "miadyn/train/population.hpp"
#include "miadyn/util/io.hpp"
#include "miadyn/util/status.hpp"

namespace miadyn::pipeline {

inline std::string FormatReal(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string FormatOptional(const std::optional<double>& v) {
  return v ? FormatReal(*v) : "undefined";
}

namespace internal {

inline std::vector<absl::string_view> Lines(std::string_view text) {
  std::vector<absl::string_view> lines;
  for (absl::string_view line :
       absl::StrSplit(absl::string_view(text.data(), text.size()), '\n')) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

inline absl::StatusOr<double> ParseReal(absl::string_view field, std::string_view what,
                                        std::size_t line) {
  double v = 0.0;
  if (!absl::SimpleAtod(field, &v)) {
    return absl::InvalidArgumentError(
        absl::StrCat(std::string(what), " line ", line, ": '", field, "' is not a number"));
  }
  return v;
}

}  // namespace internal

// membership.json: one '0'/'1' string per model, sample order.
inline std::string EncodeMembership(const data::MembershipPlan& plan, std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["n_models"] = plan.n_models();
  j["n_samples"] = plan.n_samples();
  j["seed"] = seed;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (int i = 0; i < plan.n_models(); ++i) {
    std::string row(static_cast<std::size_t>(plan.n_samples()), '0');
    for (int z = 0; z < plan.n_samples(); ++z) {
      if (plan.member(i, z)) row[static_cast<std::size_t>(z)] = '1';
    }
    rows.push_back(row);
  }
  j["bits"] = rows;
  return j.dump(1) + "\n";
}

inline absl::StatusOr<data::MembershipPlan> DecodeMembership(std::string_view text) {
  auto j = nlohmann::json::parse(text.begin(), text.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) return absl::InvalidArgumentError("membership plan is not JSON");
  if (!j.contains("n_models") || !j.contains("n_samples") || !j.contains("bits") ||
      !j["bits"].is_array()) {
    return absl::InvalidArgumentError("membership plan lacks n_models, n_samples or bits");
  }
  const int n = j["n_models"].get<int>();
  const int m = j["n_samples"].get<int>();
  if (n <= 0 || m <= 0 || j["bits"].size() != static_cast<std::size_t>(n)) {
    return absl::InvalidArgumentError("membership plan shape is inconsistent");
  }
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(n) * m);
  for (int i = 0; i < n; ++i) {
    const auto& row = j["bits"][static_cast<std::size_t>(i)];
    if (!row.is_string() || row.get<std::string>().size() != static_cast<std::size_t>(m)) {
      return absl::InvalidArgumentError(absl::StrCat("membership row ", i, " has the wrong length"));
    }
    const std::string s = row.get<std::string>();
    for (int z = 0; z < m; ++z) {
      const char c = s[static_cast<std::size_t>(z)];
      if (c != '0' && c != '1') {
        return absl::InvalidArgumentError(absl::StrCat("membership row ", i, " has a non-bit at ", z));
      }
      bits[static_cast<std::size_t>(i) * m + z] = c == '1' ? 1 : 0;
    }
  }
  return data::MembershipPlan(n, m, std::move(bits));
}

// states.jsonl: one record per (epoch, sample), epoch-major.
inline std::string EncodeStates(const VulnerabilityField& field) {
  std::string out;
  for (std::size_t k = 0; k < field.epochs.size(); ++k) {
    for (const auto& t : field.trajectories) {
      const auto& s = t.state(k);
      absl::StrAppend(&out, "{\"epoch\":", field.epochs[k], ",\"sample\":", t.sample_id(),
                      ",\"fpr\":", FormatReal(s.fpr), ",\"tpr\":", FormatReal(s.tpr),
                      ",\"adv\":", FormatReal(Advantage(s)), "}\n");
    }
  }
  return out;
}

inline absl::StatusOr<VulnerabilityField> DecodeStates(std::string_view text) {
  std::vector<int> epochs;
  std::vector<std::vector<VulnerabilityState>> table;
  std::size_t line_no = 0;
  for (absl::string_view line : internal::Lines(text)) {
    ++line_no;
    auto j = nlohmann::json::parse(line.begin(), line.end(), nullptr, false);
    if (j.is_discarded() || !j.is_object() || j.size() != 5 || !j.contains("epoch") ||
        !j.contains("sample") || !j.contains("fpr") || !j.contains("tpr") || !j.contains("adv")) {
      return absl::InvalidArgumentError(absl::StrCat("states line ", line_no, " is malformed"));
    }
    const int epoch = j["epoch"].get<int>();
    const auto sample = j["sample"].get<std::size_t>();
    if (epochs.empty() || epochs.back() != epoch) {
      if (!epochs.empty() && epoch <= epochs.back()) {
        return absl::InvalidArgumentError(absl::StrCat("states line ", line_no, ": epochs out of order"));
      }
      epochs.push_back(epoch);
      table.emplace_back();
    }
    if (sample != table.back().size()) {
      return absl::InvalidArgumentError(absl::StrCat("states line ", line_no, ": expected sample ",
                                                     table.back().size(), ", got ", sample));
    }
    auto state = VulnerabilityState::Create(j["fpr"].get<double>(), j["tpr"].get<double>());
    if (!state.ok()) {
      return absl::InvalidArgumentError(absl::StrCat("states line ", line_no, ": ", state.status().message()));
    }
    table.back().push_back(*state);
  }
  if (table.empty()) return absl::InvalidArgumentError("states file is empty");
  return AssembleField(std::move(epochs), table);
}

// Checkpoints under runs/run_<id>/ckpt_<epoch>.params. Returns relative paths.
inline absl::StatusOr<std::vector<std::filesystem::path>> SaveRuns(
    const std::vector<train::TrainRun>& runs, const std::filesystem::path& root,
    const std::filesystem::path& runs_rel) {
  std::vector<std::filesystem::path> written;
  for (const auto& run : runs) {
    for (std::size_t k = 0; k < run.checkpoints.size(); ++k) {
      const auto rel = train::CheckpointPath(runs_rel, run.model_id, run.checkpoint_epochs[k]);
      MIADYN_RETURN_IF_ERROR(WriteFile(root / rel, train::EncodeParams(run.checkpoints[k])));
      written.push_back(rel);
    }
  }
  return written;
}

inline absl::StatusOr<std::vector<train::TrainRun>> LoadRuns(const std::filesystem::path& runs_dir,
                                                             const data::MembershipPlan& plan,
                                                             const std::vector<int>& epochs) {
  std::vector<train::TrainRun> runs;
  for (int i = 0; i < plan.n_models(); ++i) {
    train::TrainRun run;
    run.model_id = i;
    run.checkpoint_epochs = epochs;
    run.membership.resize(static_cast<std::size_t>(plan.n_samples()));
    for (int z = 0; z < plan.n_samples(); ++z) run.membership[static_cast<std::size_t>(z)] = plan.member(i, z) ? 1 : 0;
    for (int e : epochs) {
      const auto path = train::CheckpointPath(runs_dir, i, e);
      MIADYN_ASSIGN_OR_RETURN(std::string bytes, ReadFile(path));
      auto params = train::DecodeParams(bytes);
      if (!params.ok()) {
        return absl::Status(params.status().code(),
                            absl::StrCat(path.string(), ": ", params.status().message()));
      }
      run.checkpoints.push_back(std::move(params).value());
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

inline std::string CellName(std::size_t index, const PlaneGrid& grid) {
  const GridCell c = grid.CellAt(index);
  return absl::StrCat("S_", c.tpr_band, c.fpr_band);
}

inline nlohmann::ordered_json OptionalJson(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

struct DynamicsReport {
  dynamics::PopulationSummary summary;
  dynamics::ExposureCurve exposure;
  dynamics::TravelStrata strata;
  std::vector<double> path_lengths;
  double travel_quantile = 0.0;
};

inline std::string MetricsJson(const DynamicsReport& r) {
  const auto& s = r.summary;
  nlohmann::ordered_json j;
  j["epochs"] = s.epochs;
  nlohmann::ordered_json com = nlohmann::ordered_json::array();
  for (const auto& p : s.com_series) com.push_back({p.x, p.y});
  j["com_series"] = com;
  j["com_displacement"] = s.com_displacement;
  j["mean_encoding_speed"] = s.mean_speed;
  j["mean_encoding_speed_vulnerable"] = OptionalJson(s.mean_speed_vulnerable);
  j["directional_angle_rad"] = OptionalJson(s.directional_angle);
  j["entropy_series"] = s.entropy_series;
  j["delta_entropy"] = s.delta_entropy;
  j["cluster_counts"] = s.cluster_counts;
  j["avg_clusters"] = s.avg_clusters;
  j["delta_clusters"] = s.delta_clusters;
  nlohmann::ordered_json series = nlohmann::ordered_json::array();
  for (const auto& p : s.robust_to_vulnerable) series.push_back(OptionalJson(p));
  j["robust_to_vulnerable"] = series;
  j["peak_robust_to_vulnerable"] = OptionalJson(s.peak_robust_to_vulnerable);
  j["final_mean_advantage"] = s.final_mean_advantage;
  j["exposure"] = {{"defined", r.exposure.defined},
                   {"vulnerable_set_size", r.exposure.vulnerable_set_size},
                   {"flag_budget", r.exposure.flag_budget},
                   {"coverage", r.exposure.coverage}};
  j["travel"] = {{"quantile", r.travel_quantile},
                 {"high", r.strata.high},
                 {"low", r.strata.low}};
  return j.dump(2) + "\n";
}

// Every cell pair of every interval, occupied or not.
inline std::string TransitionsCsv(const dynamics::PopulationSummary& s) {
  const PlaneGrid grid = PlaneGrid::Transition();
  std::string out = "epoch_from,from_cell,to_cell,count,prob\n";
  for (const auto& tm : s.transitions) {
    for (std::size_t a = 0; a < static_cast<std::size_t>(tm.cells); ++a) {
      for (std::size_t b = 0; b < static_cast<std::size_t>(tm.cells); ++b) {
        absl::StrAppend(&out, tm.epoch_from, ",", CellName(a, grid), ",", CellName(b, grid), ",",
                        tm.count(a, b), ",", FormatReal(tm.prob(a, b)), "\n");
      }
    }
  }
  return out;
}

inline std::string ExposureCsv(const dynamics::ExposureCurve& curve, const std::vector<int>& epochs) {
  std::string out = "epoch,coverage\n";
  for (std::size_t k = 0; k < epochs.size(); ++k) {
    absl::StrAppend(&out, epochs[k], ",",
                    curve.defined ? FormatReal(curve.coverage[k]) : std::string("undefined"), "\n");
  }
  return out;
}

inline std::string ClustersCsv(const dynamics::PopulationSummary& s) {
  std::string out = "epoch,clusters\n";
  for (std::size_t k = 0; k < s.epochs.size(); ++k) {
    absl::StrAppend(&out, s.epochs[k], ",", s.cluster_counts[k], "\n");
  }
  return out;
}

inline std::string TravelCsv(const DynamicsReport& r) {
  std::vector<const char*> stratum(r.path_lengths.size(), "middle");
  for (SampleId z : r.strata.high) stratum[z] = "high";
  for (SampleId z : r.strata.low) stratum[z] = "low";
  std::string out = "sample,path_length,stratum\n";
  for (std::size_t z = 0; z < r.path_lengths.size(); ++z) {
    absl::StrAppend(&out, z, ",", FormatReal(r.path_lengths[z]), ",", stratum[z], "\n");
  }
  return out;
}

inline constexpr const char* kNeverLearned = "never";

inline std::string HardnessCsv(const hardness::HardnessProfile& p) {
  std::string out = "sample,grad_norm,iteration_learned,influence,aleatoric,epistemic\n";
  for (std::size_t z = 0; z < p.grad_norm.size(); ++z) {
    absl::StrAppend(&out, z, ",", FormatReal(p.grad_norm[z]), ",",
                    p.iteration_learned[z] ? absl::StrCat(*p.iteration_learned[z])
                                           : std::string(kNeverLearned),
                    ",", FormatReal(p.influence[z]), ",", FormatReal(p.aleatoric[z]), ",",
                    FormatReal(p.epistemic[z]), "\n");
  }
  return out;
}

inline absl::StatusOr<hardness::HardnessProfile> ParseHardnessCsv(std::string_view text,
                                                                  int n_checkpoints) {
  hardness::HardnessProfile p;
  p.n_checkpoints = n_checkpoints;
  const auto lines = internal::Lines(text);
  if (lines.empty() || lines[0] != "sample,grad_norm,iteration_learned,influence,aleatoric,epistemic") {
    return absl::InvalidArgumentError("hardness.csv has an unexpected header");
  }
  for (std::size_t n = 1; n < lines.size(); ++n) {
    std::vector<absl::string_view> f = absl::StrSplit(lines[n], ',');
    if (f.size() != 6) {
      return absl::InvalidArgumentError(absl::StrCat("hardness.csv line ", n + 1, " has ", f.size(), " fields"));
    }
    std::size_t sample = 0;
    if (!absl::SimpleAtoi(f[0], &sample) || sample != n - 1) {
      return absl::InvalidArgumentError(absl::StrCat("hardness.csv line ", n + 1, " is out of order"));
    }
    MIADYN_ASSIGN_OR_RETURN(double g, internal::ParseReal(f[1], "hardness.csv", n + 1));
    std::optional<int> learned;
    if (f[2] != kNeverLearned) {
      int v = 0;
      if (!absl::SimpleAtoi(f[2], &v)) {
        return absl::InvalidArgumentError(absl::StrCat("hardness.csv line ", n + 1, ": bad iteration_learned"));
      }
      learned = v;
    }
    MIADYN_ASSIGN_OR_RETURN(double infl, internal::ParseReal(f[3], "hardness.csv", n + 1));
    MIADYN_ASSIGN_OR_RETURN(double ale, internal::ParseReal(f[4], "hardness.csv", n + 1));
    MIADYN_ASSIGN_OR_RETURN(double epi, internal::ParseReal(f[5], "hardness.csv", n + 1));
    p.grad_norm.push_back(g);
    p.iteration_learned.push_back(learned);
    p.influence.push_back(infl);
    p.aleatoric.push_back(ale);
    p.epistemic.push_back(epi);
  }
  return p;
}

inline std::string CorrelationsCsv(const std::vector<hardness::CorrelationCell>& cells) {
  std::string out = "metric,target,subset,r,n\n";
  for (const auto& c : cells) {
    absl::StrAppend(&out, c.metric, ",", c.target, ",", c.subset, ",", FormatOptional(c.r), ",",
                    c.n, "\n");
  }
  return out;
}

}  // namespace miadyn::pipeline

#endif  // MIADYN_PIPELINE_ARTIFACTS_HPP_
