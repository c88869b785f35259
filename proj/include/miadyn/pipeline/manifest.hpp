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
// Run manifest: per-stage status, the config fields each stage depends on,
// and SHA-256 hashes of every file a stage read or wrote.

#ifndef MIADYN_PIPELINE_MANIFEST_HPP_
#define MIADYN_PIPELINE_MANIFEST_HPP_

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "json.hpp"
#include "miadyn/util/io.hpp"
#include "miadyn/util/status.hpp"

#ifndef MIADYN_VERSION
#define MIADYN_VERSION "0.0.0"
#endif

namespace miadyn::pipeline {

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr std::array<std::string_view, 7> kStageOrder = {
    "gen-data", "train", "attack", "dynamics", "hardness", "correlate", "report"};

enum class StageStatus { kCompleted, kFailed };

inline std::string_view StageStatusName(StageStatus s) {
  return s == StageStatus::kCompleted ? "completed" : "failed";
}

// Paths are relative to the run directory, generic format.
using FileHashes = std::map<std::string, std::string>;

struct StageRecord {
  StageStatus status = StageStatus::kFailed;
  std::string config_key;
  FileHashes inputs;
  FileHashes outputs;
  double wall_seconds = 0.0;
  std::vector<std::string> warnings;
  std::string error;
};

struct RunManifest {
  std::string tool_version = MIADYN_VERSION;
  std::string config_hash;
  std::map<std::string, StageRecord> stages;

  const StageRecord* Find(std::string_view stage) const {
    auto it = stages.find(std::string(stage));
    return it == stages.end() ? nullptr : &it->second;
  }
  bool Completed(std::string_view stage) const {
    const StageRecord* r = Find(stage);
    return r != nullptr && r->status == StageStatus::kCompleted;
  }
};

inline std::string EncodeManifest(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["tool_version"] = m.tool_version;
  j["config_hash"] = m.config_hash;
  nlohmann::ordered_json stages = nlohmann::ordered_json::object();
  for (std::string_view name : kStageOrder) {
    const StageRecord* r = m.Find(name);
    if (r == nullptr) continue;
    nlohmann::ordered_json s;
    s["status"] = StageStatusName(r->status);
    s["config_key"] = r->config_key;
    s["inputs"] = r->inputs;
    s["outputs"] = r->outputs;
    s["wall_seconds"] = r->wall_seconds;
    s["warnings"] = r->warnings;
    if (!r->error.empty()) s["error"] = r->error;
    stages[std::string(name)] = s;
  }
  j["stages"] = stages;
  return j.dump(2) + "\n";
}

inline absl::StatusOr<RunManifest> DecodeManifest(std::string_view text) {
  auto j = nlohmann::json::parse(text.begin(), text.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) return absl::DataLossError("manifest is not JSON");
  RunManifest m;
  try {
    m.tool_version = j.at("tool_version").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& [name, s] : j.at("stages").items()) {
      StageRecord r;
      const std::string status = s.at("status").get<std::string>();
      if (status != "completed" && status != "failed") {
        return absl::DataLossError(absl::StrCat("stage ", name, " has status '", status, "'"));
      }
      r.status = status == "completed" ? StageStatus::kCompleted : StageStatus::kFailed;
      r.config_key = s.at("config_key").get<std::string>();
      r.inputs = s.at("inputs").get<FileHashes>();
      r.outputs = s.at("outputs").get<FileHashes>();
      r.wall_seconds = s.at("wall_seconds").get<double>();
      r.warnings = s.at("warnings").get<std::vector<std::string>>();
      if (s.contains("error")) r.error = s.at("error").get<std::string>();
      m.stages[name] = std::move(r);
    }
  } catch (const nlohmann::json::exception& e) {
    return absl::DataLossError(absl::StrCat("malformed manifest: ", e.what()));
  }
  return m;
}

// A missing manifest is an empty one.
inline absl::StatusOr<RunManifest> LoadManifest(const std::filesystem::path& dir) {
  const auto path = dir / kManifestFile;
  if (!std::filesystem::exists(path)) return RunManifest{};
  MIADYN_ASSIGN_OR_RETURN(std::string text, ReadFile(path));
  return DecodeManifest(text);
}

inline absl::Status SaveManifest(const std::filesystem::path& dir, const RunManifest& m) {
  return WriteFile(dir / kManifestFile, EncodeManifest(m));
}

inline absl::StatusOr<FileHashes> HashFiles(const std::filesystem::path& root,
                                            const std::vector<std::string>& rel_paths) {
  FileHashes out;
  for (const auto& rel : rel_paths) {
    MIADYN_ASSIGN_OR_RETURN(out[rel], FileSha256(root / rel));
  }
  return out;
}

// Current hashes equal the recorded ones; missing files count as a mismatch.
inline std::optional<std::string> FirstMismatch(const std::filesystem::path& root,
                                                const FileHashes& recorded) {
  for (const auto& [rel, hash] : recorded) {
    auto now = FileSha256(root / rel);
    if (!now.ok() || *now != hash) return rel;
  }
  return std::nullopt;
}

// Every completed stage's declared outputs exist and hash-verify.
inline absl::Status VerifyManifest(const std::filesystem::path& root, const RunManifest& m) {
  for (const auto& [name, r] : m.stages) {
    if (r.status != StageStatus::kCompleted) continue;
    if (auto bad = FirstMismatch(root, r.outputs)) {
      return absl::DataLossError(absl::StrCat("stage ", name, ": output ", *bad,
                                              " is missing or does not match its hash"));
    }
  }
  return absl::OkStatus();
}

}  // namespace miadyn::pipeline

#endif  // MIADYN_PIPELINE_MANIFEST_HPP_
