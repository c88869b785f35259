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
// Experiment configuration: one JSON document drives every stage. Missing keys
// take their defaults; unknown keys are rejected with their path.

#ifndef MIADYN_PIPELINE_CONFIG_HPP_
#define MIADYN_PIPELINE_CONFIG_HPP_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <set>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "json.hpp"
#include "miadyn/attack/lira.hpp"
#include "miadyn/attack/shokri.hpp"
#include "miadyn/data/dataset.hpp"
#include "miadyn/dynamics/dbscan.hpp"
#include "miadyn/dynamics/exposure.hpp"
#include "miadyn/hardness/influence.hpp"
#include "miadyn/train/optimizer.hpp"
#include "miadyn/train/population.hpp"
#include "miadyn/util/io.hpp"
#include "miadyn/util/status.hpp"

namespace miadyn::pipeline {

using Json = nlohmann::ordered_json;

enum class AttackMethod { kLira, kShokri };

inline std::string_view AttackMethodName(AttackMethod method) {
  return method == AttackMethod::kLira ? "lira" : "shokri";
}

inline absl::StatusOr<AttackMethod> ParseAttackMethod(std::string_view name) {
  if (name == "lira") return AttackMethod::kLira;
  if (name == "shokri") return AttackMethod::kShokri;
  return absl::InvalidArgumentError(absl::StrCat("unknown attack method '", std::string(name), "'"));
}

struct AttackSection {
  AttackMethod method = AttackMethod::kLira;
  attack::LiraConfig lira;
  attack::ShokriConfig shokri;

  friend bool operator==(const AttackSection&, const AttackSection&) = default;
};

struct DynamicsSection {
  int entropy_resolution = 30;
  dynamics::DbscanParams dbscan;
  double theta_vuln = 0.0;
  dynamics::BudgetRule budget_rule = dynamics::BudgetRule::kVulnerableCount;
  double budget_fraction = 0.1;
  double travel_quantile = 0.1;

  friend bool operator==(const DynamicsSection&, const DynamicsSection&) = default;
};

struct HardnessSection {
  hardness::InfluenceOptions influence;
  int uncertainty_epoch = -1;  // -1 selects the final checkpoint

  friend bool operator==(const HardnessSection&, const HardnessSection&) = default;
};

struct ReportSection {
  int overlay_count = 10;  // highest-travel trajectories drawn on the final plane
  bool marginals = true;

  friend bool operator==(const ReportSection&, const ReportSection&) = default;
};

struct PipelineConfig {
  std::uint64_t seed = 0;  // membership plan and training streams
  data::DatasetSpec dataset;
  std::vector<int> hidden = {64, 64};
  train::OptimizerConfig optimizer;
  int epochs = 60;
  int checkpoint_interval = 5;
  int batch_size = 32;
  int n_shadow = 16;
  AttackSection attack;
  DynamicsSection dynamics;
  HardnessSection hardness;
  ReportSection report;
  std::string output_dir;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

inline train::TrainingConfig TrainingConfigOf(const PipelineConfig& cfg) {
  train::TrainingConfig t;
  t.hidden = cfg.hidden;
  t.optimizer = cfg.optimizer;
  t.epochs = cfg.epochs;
  t.checkpoint_interval = cfg.checkpoint_interval;
  t.batch_size = cfg.batch_size;
  t.master_seed = cfg.seed;
  return t;
}

inline absl::Status Validate(const PipelineConfig& cfg) {
  MIADYN_RETURN_IF_ERROR(data::Validate(cfg.dataset));
  MIADYN_RETURN_IF_ERROR(train::Validate(TrainingConfigOf(cfg)));
  if (cfg.n_shadow < 2 * data::kMinPerSide) {
    return absl::InvalidArgumentError(
        absl::StrCat("training.n_shadow must be at least ", 2 * data::kMinPerSide));
  }
  if (!std::isfinite(cfg.attack.lira.threshold) || !std::isfinite(cfg.attack.shokri.threshold)) {
    return absl::InvalidArgumentError("attack thresholds must be finite");
  }
  if (!(cfg.attack.shokri.ridge >= 0.0) || !(cfg.attack.shokri.tolerance > 0.0) ||
      cfg.attack.shokri.max_iterations <= 0) {
    return absl::InvalidArgumentError("attack.shokri settings are out of range");
  }
  if (cfg.dynamics.entropy_resolution < 2) {
    return absl::InvalidArgumentError("dynamics.entropy_resolution must be at least 2");
  }
  if (!(cfg.dynamics.dbscan.eps > 0.0) || cfg.dynamics.dbscan.min_pts < 1) {
    return absl::InvalidArgumentError("dynamics.dbscan_eps must be positive and min_pts >= 1");
  }
  if (!(cfg.dynamics.budget_fraction > 0.0 && cfg.dynamics.budget_fraction <= 1.0)) {
    return absl::InvalidArgumentError("dynamics.budget_fraction must lie in (0, 1]");
  }
  if (!(cfg.dynamics.travel_quantile > 0.0 && cfg.dynamics.travel_quantile < 0.5)) {
    return absl::InvalidArgumentError("dynamics.travel_quantile must lie in (0, 0.5)");
  }
  const auto& infl = cfg.hardness.influence;
  if (!(infl.damping > 0.0) || infl.cg_max_iterations <= 0 || !(infl.cg_tolerance > 0.0)) {
    return absl::InvalidArgumentError("hardness influence settings are out of range");
  }
  if (cfg.hardness.uncertainty_epoch != -1) {
    const int e = cfg.hardness.uncertainty_epoch;
    if (e < 0 || e > cfg.epochs || e % cfg.checkpoint_interval != 0) {
      return absl::InvalidArgumentError(absl::StrCat(
          "hardness.uncertainty_epoch ", e, " is not a recorded checkpoint"));
    }
  }
  if (cfg.report.overlay_count < 0) {
    return absl::InvalidArgumentError("report.overlay_count must be >= 0");
  }
  return absl::OkStatus();
}

inline Json ToJson(const PipelineConfig& cfg) {
  Json j;
  j["seed"] = cfg.seed;
  j["dataset"] = {{"kind", std::string(data::DatasetKindName(cfg.dataset.kind))},
                  {"n_classes", cfg.dataset.n_classes},
                  {"n_samples", cfg.dataset.n_samples},
                  {"dim", cfg.dataset.dim},
                  {"class_separation", cfg.dataset.class_separation},
                  {"label_noise_rate", cfg.dataset.label_noise_rate},
                  {"seed", cfg.dataset.seed},
                  {"path", cfg.dataset.path},
                  {"labels_path", cfg.dataset.labels_path}};
  j["model"] = {{"hidden", cfg.hidden}};
  j["optimizer"] = {{"kind", std::string(train::OptimizerKindName(cfg.optimizer.kind))},
                    {"lr", cfg.optimizer.lr},
                    {"momentum", cfg.optimizer.momentum},
                    {"weight_decay", cfg.optimizer.weight_decay},
                    {"beta1", cfg.optimizer.beta1},
                    {"beta2", cfg.optimizer.beta2},
                    {"eps", cfg.optimizer.eps},
                    {"rho", cfg.optimizer.rho}};
  j["training"] = {{"epochs", cfg.epochs},
                   {"checkpoint_interval", cfg.checkpoint_interval},
                   {"batch_size", cfg.batch_size},
                   {"n_shadow", cfg.n_shadow}};
  j["attack"] = {{"method", std::string(AttackMethodName(cfg.attack.method))},
                 {"variance", std::string(attack::VarianceModeName(cfg.attack.lira.variance_mode))},
                 {"threshold", cfg.attack.lira.threshold},
                 {"leave_one_out", cfg.attack.lira.leave_one_out},
                 {"shokri",
                  {{"threshold", cfg.attack.shokri.threshold},
                   {"ridge", cfg.attack.shokri.ridge},
                   {"tolerance", cfg.attack.shokri.tolerance},
                   {"max_iterations", cfg.attack.shokri.max_iterations}}}};
  j["dynamics"] = {{"entropy_resolution", cfg.dynamics.entropy_resolution},
                   {"dbscan_eps", cfg.dynamics.dbscan.eps},
                   {"dbscan_min_pts", cfg.dynamics.dbscan.min_pts},
                   {"theta_vuln", cfg.dynamics.theta_vuln},
                   {"budget_rule", std::string(dynamics::BudgetRuleName(cfg.dynamics.budget_rule))},
                   {"budget_fraction", cfg.dynamics.budget_fraction},
                   {"travel_quantile", cfg.dynamics.travel_quantile}};
  const auto& infl = cfg.hardness.influence;
  j["hardness"] = {{"damping", infl.damping},
                   {"influence_scope", std::string(hardness::InfluenceScopeName(infl.scope))},
                   {"cg_max_iterations", infl.cg_max_iterations},
                   {"cg_tolerance", infl.cg_tolerance},
                   {"dense_limit", infl.dense_limit},
                   {"uncertainty_epoch", cfg.hardness.uncertainty_epoch}};
  j["report"] = {{"overlay_count", cfg.report.overlay_count},
                 {"marginals", cfg.report.marginals}};
  j["output_dir"] = cfg.output_dir;
  return j;
}

namespace internal {

// Reads optional typed members of one JSON object and rejects leftovers.
class FieldReader {
 public:
  FieldReader(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {}

  absl::Status CheckObject() const {
    if (!obj_.is_object()) return absl::InvalidArgumentError(absl::StrCat(Where(), " must be an object"));
    return absl::OkStatus();
  }

  template <typename T>
  absl::Status Get(const char* key, T& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return absl::OkStatus();
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) return TypeError(key, "a boolean");
    } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
      if (!it->is_number_unsigned()) return TypeError(key, "a non-negative integer");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) return TypeError(key, "an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) return TypeError(key, "a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) return TypeError(key, "a string");
    } else {
      if (!it->is_array()) return TypeError(key, "an array");
      for (const auto& v : *it) {
        if (!v.is_number_integer()) return TypeError(key, "an array of integers");
      }
    }
    out = it->template get<T>();
    return absl::OkStatus();
  }

  // Parses the string member with parse(), if present.
  template <typename E, typename Parse>
  absl::Status GetEnum(const char* key, E& out, Parse parse) {
    std::string name;
    bool present = obj_.contains(key);
    MIADYN_RETURN_IF_ERROR(Get(key, name));
    if (!present) return absl::OkStatus();
    auto parsed = parse(name);
    if (!parsed.ok()) {
      return absl::InvalidArgumentError(absl::StrCat(Where(), ".", key, ": ", parsed.status().message()));
    }
    out = *parsed;
    return absl::OkStatus();
  }

  const Json* Child(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  absl::Status Finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) {
        return absl::InvalidArgumentError(absl::StrCat("unknown config key ", Where(), ".", it.key()));
      }
    }
    return absl::OkStatus();
  }

 private:
  std::string Where() const { return path_.empty() ? "<root>" : path_; }
  absl::Status TypeError(const char* key, const char* what) const {
    return absl::InvalidArgumentError(absl::StrCat("config key ", Where(), ".", key, " must be ", what));
  }

  const Json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace internal

inline absl::StatusOr<PipelineConfig> ConfigFromJson(const Json& j) {
  using internal::FieldReader;
  PipelineConfig cfg;
  FieldReader root(j, "");
  MIADYN_RETURN_IF_ERROR(root.CheckObject());
  MIADYN_RETURN_IF_ERROR(root.Get("seed", cfg.seed));
  MIADYN_RETURN_IF_ERROR(root.Get("output_dir", cfg.output_dir));

  auto section = [&](const char* key, auto&& body) -> absl::Status {
    const Json* child = root.Child(key);
    if (child == nullptr) return absl::OkStatus();
    FieldReader r(*child, key);
    MIADYN_RETURN_IF_ERROR(r.CheckObject());
    MIADYN_RETURN_IF_ERROR(body(r));
    return r.Finish();
  };

  MIADYN_RETURN_IF_ERROR(section("dataset", [&](FieldReader& r) -> absl::Status {
    auto& d = cfg.dataset;
    MIADYN_RETURN_IF_ERROR(r.GetEnum("kind", d.kind, data::ParseDatasetKind));
    MIADYN_RETURN_IF_ERROR(r.Get("n_classes", d.n_classes));
    MIADYN_RETURN_IF_ERROR(r.Get("n_samples", d.n_samples));
    MIADYN_RETURN_IF_ERROR(r.Get("dim", d.dim));
    MIADYN_RETURN_IF_ERROR(r.Get("class_separation", d.class_separation));
    MIADYN_RETURN_IF_ERROR(r.Get("label_noise_rate", d.label_noise_rate));
    MIADYN_RETURN_IF_ERROR(r.Get("seed", d.seed));
    MIADYN_RETURN_IF_ERROR(r.Get("path", d.path));
    return r.Get("labels_path", d.labels_path);
  }));
  MIADYN_RETURN_IF_ERROR(section("model", [&](FieldReader& r) -> absl::Status {
    return r.Get("hidden", cfg.hidden);
  }));
  MIADYN_RETURN_IF_ERROR(section("optimizer", [&](FieldReader& r) -> absl::Status {
    auto& o = cfg.optimizer;
    MIADYN_RETURN_IF_ERROR(r.GetEnum("kind", o.kind, train::ParseOptimizerKind));
    MIADYN_RETURN_IF_ERROR(r.Get("lr", o.lr));
    MIADYN_RETURN_IF_ERROR(r.Get("momentum", o.momentum));
    MIADYN_RETURN_IF_ERROR(r.Get("weight_decay", o.weight_decay));
    MIADYN_RETURN_IF_ERROR(r.Get("beta1", o.beta1));
    MIADYN_RETURN_IF_ERROR(r.Get("beta2", o.beta2));
    MIADYN_RETURN_IF_ERROR(r.Get("eps", o.eps));
    return r.Get("rho", o.rho);
  }));
  MIADYN_RETURN_IF_ERROR(section("training", [&](FieldReader& r) -> absl::Status {
    MIADYN_RETURN_IF_ERROR(r.Get("epochs", cfg.epochs));
    MIADYN_RETURN_IF_ERROR(r.Get("checkpoint_interval", cfg.checkpoint_interval));
    MIADYN_RETURN_IF_ERROR(r.Get("batch_size", cfg.batch_size));
    return r.Get("n_shadow", cfg.n_shadow);
  }));
  MIADYN_RETURN_IF_ERROR(section("attack", [&](FieldReader& r) -> absl::Status {
    auto& a = cfg.attack;
    MIADYN_RETURN_IF_ERROR(r.GetEnum("method", a.method, ParseAttackMethod));
    MIADYN_RETURN_IF_ERROR(r.GetEnum("variance", a.lira.variance_mode, attack::ParseVarianceMode));
    MIADYN_RETURN_IF_ERROR(r.Get("threshold", a.lira.threshold));
    MIADYN_RETURN_IF_ERROR(r.Get("leave_one_out", a.lira.leave_one_out));
    const Json* shokri = r.Child("shokri");
    if (shokri == nullptr) return absl::OkStatus();
    FieldReader s(*shokri, "attack.shokri");
    MIADYN_RETURN_IF_ERROR(s.CheckObject());
    MIADYN_RETURN_IF_ERROR(s.Get("threshold", a.shokri.threshold));
    MIADYN_RETURN_IF_ERROR(s.Get("ridge", a.shokri.ridge));
    MIADYN_RETURN_IF_ERROR(s.Get("tolerance", a.shokri.tolerance));
    MIADYN_RETURN_IF_ERROR(s.Get("max_iterations", a.shokri.max_iterations));
    return s.Finish();
  }));
  MIADYN_RETURN_IF_ERROR(section("dynamics", [&](FieldReader& r) -> absl::Status {
    auto& d = cfg.dynamics;
    MIADYN_RETURN_IF_ERROR(r.Get("entropy_resolution", d.entropy_resolution));
    MIADYN_RETURN_IF_ERROR(r.Get("dbscan_eps", d.dbscan.eps));
    MIADYN_RETURN_IF_ERROR(r.Get("dbscan_min_pts", d.dbscan.min_pts));
    MIADYN_RETURN_IF_ERROR(r.Get("theta_vuln", d.theta_vuln));
    MIADYN_RETURN_IF_ERROR(r.GetEnum("budget_rule", d.budget_rule, dynamics::ParseBudgetRule));
    MIADYN_RETURN_IF_ERROR(r.Get("budget_fraction", d.budget_fraction));
    return r.Get("travel_quantile", d.travel_quantile);
  }));
  MIADYN_RETURN_IF_ERROR(section("hardness", [&](FieldReader& r) -> absl::Status {
    auto& h = cfg.hardness;
    MIADYN_RETURN_IF_ERROR(r.Get("damping", h.influence.damping));
    MIADYN_RETURN_IF_ERROR(
        r.GetEnum("influence_scope", h.influence.scope, hardness::ParseInfluenceScope));
    MIADYN_RETURN_IF_ERROR(r.Get("cg_max_iterations", h.influence.cg_max_iterations));
    MIADYN_RETURN_IF_ERROR(r.Get("cg_tolerance", h.influence.cg_tolerance));
    MIADYN_RETURN_IF_ERROR(r.Get("dense_limit", h.influence.dense_limit));
    return r.Get("uncertainty_epoch", h.uncertainty_epoch);
  }));
  MIADYN_RETURN_IF_ERROR(section("report", [&](FieldReader& r) -> absl::Status {
    MIADYN_RETURN_IF_ERROR(r.Get("overlay_count", cfg.report.overlay_count));
    return r.Get("marginals", cfg.report.marginals);
  }));
  MIADYN_RETURN_IF_ERROR(root.Finish());
  MIADYN_RETURN_IF_ERROR(Validate(cfg));
  return cfg;
}

inline absl::StatusOr<PipelineConfig> ParseConfig(std::string_view text) {
  Json j = Json::parse(text.begin(), text.end(), nullptr, false);
  if (j.is_discarded()) return absl::InvalidArgumentError("config is not valid JSON");
  return ConfigFromJson(j);
}

inline absl::StatusOr<PipelineConfig> LoadConfig(const std::filesystem::path& path) {
  MIADYN_ASSIGN_OR_RETURN(std::string text, ReadFile(path));
  auto cfg = ParseConfig(text);
  if (!cfg.ok()) {
    return absl::Status(cfg.status().code(),
                        absl::StrCat(path.string(), ": ", cfg.status().message()));
  }
  return cfg;
}

// Hash of the config fields named by JSON pointers, e.g. "/training/n_shadow".
inline std::string SectionKey(const PipelineConfig& cfg, std::initializer_list<const char*> pointers) {
  const Json j = ToJson(cfg);
  Json subset = Json::object();
  for (const char* p : pointers) subset[p] = j.at(Json::json_pointer(p));
  return Sha256Hex(subset.dump());
}

inline std::string ConfigHash(const PipelineConfig& cfg) {
  Json j = ToJson(cfg);
  j.erase("output_dir");
  return Sha256Hex(j.dump());
}

}  // namespace miadyn::pipeline

#endif  // MIADYN_PIPELINE_CONFIG_HPP_
