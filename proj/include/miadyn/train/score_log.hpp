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
// Per-(checkpoint, model, sample) black-box observations. This is the only
// data the attacks see from training.

#ifndef MIADYN_TRAIN_SCORE_LOG_HPP_
#define MIADYN_TRAIN_SCORE_LOG_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "json.hpp"
#include "miadyn/util/io.hpp"

namespace miadyn::train {

inline constexpr double kConfidenceClamp = 1e-6;

struct ScoreRecord {
  std::uint32_t epoch = 0;
  std::uint32_t model = 0;
  std::uint32_t sample = 0;  // pool row
  std::uint8_t member = 0;
  float conf = 0.5f;         // target-class probability, clamped
  float loss = 0.0f;         // -log(conf)
  std::uint8_t correct = 0;

  auto Key() const { return std::tie(epoch, model, sample); }
  friend bool operator==(const ScoreRecord&, const ScoreRecord&) = default;
};

// Clamps to [1e-6, 1 - 1e-6] in float precision (the stored value never
// leaves the interval) and derives the loss from the stored confidence.
inline ScoreRecord MakeScoreRecord(std::uint32_t epoch, std::uint32_t model,
                                   std::uint32_t sample, bool member,
                                   double target_prob, bool correct) {
  const double lo = kConfidenceClamp;
  const double hi = 1.0 - kConfidenceClamp;
  float conf = static_cast<float>(std::clamp(target_prob, lo, hi));
  if (static_cast<double>(conf) < lo) conf = std::nextafter(conf, 1.0f);
  if (static_cast<double>(conf) > hi) conf = std::nextafter(conf, 0.0f);
  ScoreRecord r;
  r.epoch = epoch;
  r.model = model;
  r.sample = sample;
  r.member = member ? 1 : 0;
  r.conf = conf;
  r.loss = static_cast<float>(-std::log(static_cast<double>(conf)));
  r.correct = correct ? 1 : 0;
  return r;
}

struct ScoreLog {
  std::vector<ScoreRecord> records;

  // Orders by (epoch, model, sample).
  void CanonicalSort() {
    std::sort(records.begin(), records.end(),
              [](const ScoreRecord& a, const ScoreRecord& b) { return a.Key() < b.Key(); });
  }
  friend bool operator==(const ScoreLog&, const ScoreLog&) = default;
};

// scores.jsonl: one object per line with keys
// epoch, model, sample, member, conf, loss, correct. Floats use 9 significant
// digits, which round-trips float32 exactly.
inline std::string ToJsonLines(const ScoreLog& log) {
  std::string out;
  out.reserve(log.records.size() * 96);
  char line[192];
  for (const ScoreRecord& r : log.records) {
    const int n = std::snprintf(
        line, sizeof(line),
        "{\"epoch\":%u,\"model\":%u,\"sample\":%u,\"member\":%u,\"conf\":%.9g,"
        "\"loss\":%.9g,\"correct\":%u}\n",
        r.epoch, r.model, r.sample, unsigned{r.member}, static_cast<double>(r.conf),
        static_cast<double>(r.loss), unsigned{r.correct});
    out.append(line, static_cast<std::size_t>(n));
  }
  return out;
}

inline absl::StatusOr<ScoreLog> ParseJsonLines(std::string_view text) {
  static constexpr const char* kKeys[] = {"epoch", "model", "sample", "member",
                                          "conf", "loss", "correct"};
  ScoreLog log;
  std::size_t line_no = 0;
  for (absl::string_view line :
       absl::StrSplit(absl::string_view(text.data(), text.size()), '\n')) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json obj = nlohmann::json::parse(line.begin(), line.end(), nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      return absl::DataLossError(absl::StrCat("scores.jsonl:", line_no, ": invalid JSON"));
    }
    if (obj.size() != std::size(kKeys)) {
      return absl::DataLossError(absl::StrCat("scores.jsonl:", line_no,
                                              ": expected exactly 7 keys"));
    }
    for (const char* key : kKeys) {
      if (!obj.contains(key) || !obj[key].is_number()) {
        return absl::DataLossError(absl::StrCat("scores.jsonl:", line_no,
                                                ": missing or non-numeric '", key, "'"));
      }
    }
    ScoreRecord r;
    r.epoch = obj["epoch"].get<std::uint32_t>();
    r.model = obj["model"].get<std::uint32_t>();
    r.sample = obj["sample"].get<std::uint32_t>();
    r.member = obj["member"].get<std::uint8_t>();
    r.conf = static_cast<float>(obj["conf"].get<double>());
    r.loss = static_cast<float>(obj["loss"].get<double>());
    r.correct = obj["correct"].get<std::uint8_t>();
    if (r.member > 1 || r.correct > 1 || !(r.conf > 0.0f && r.conf < 1.0f)) {
      return absl::DataLossError(absl::StrCat("scores.jsonl:", line_no, ": value out of range"));
    }
    log.records.push_back(r);
  }
  return log;
}

inline constexpr char kScoreBinMagic[4] = {'M', 'I', 'A', 'S'};
inline constexpr std::uint32_t kScoreBinVersion = 1;

// scores.bin: magic "MIAS", u32 version, u64 record count, then column blocks
// epoch u32, model u32, sample u32, member u8, conf f32, loss f32, correct u8.
inline std::string ToColumnar(const ScoreLog& log) {
  ByteWriter w;
  w.PutBytes(std::string_view(kScoreBinMagic, 4));
  w.Put(kScoreBinVersion);
  w.Put(static_cast<std::uint64_t>(log.records.size()));
  for (const auto& r : log.records) w.Put(r.epoch);
  for (const auto& r : log.records) w.Put(r.model);
  for (const auto& r : log.records) w.Put(r.sample);
  for (const auto& r : log.records) w.Put(r.member);
  for (const auto& r : log.records) w.Put(r.conf);
  for (const auto& r : log.records) w.Put(r.loss);
  for (const auto& r : log.records) w.Put(r.correct);
  return w.Release();
}

inline absl::StatusOr<ScoreLog> ParseColumnar(std::string_view bytes) {
  ByteReader reader(bytes);
  auto magic = reader.GetBytes(4);
  if (!magic.ok() || *magic != std::string_view(kScoreBinMagic, 4)) {
    return absl::DataLossError("scores.bin: bad magic at offset 0");
  }
  auto version = reader.Get<std::uint32_t>();
  if (!version.ok() || *version != kScoreBinVersion) {
    return absl::DataLossError("scores.bin: unsupported version at offset 4");
  }
  auto count = reader.Get<std::uint64_t>();
  if (!count.ok()) return count.status();
  const std::size_t n = *count;
  const std::size_t expected = 16 + n * (4 + 4 + 4 + 1 + 4 + 4 + 1);
  if (bytes.size() != expected) {
    return absl::DataLossError(absl::StrCat("scores.bin: expected ", expected,
                                            " bytes for ", n, " records, found ",
                                            bytes.size()));
  }
  ScoreLog log;
  log.records.resize(n);
  for (auto& r : log.records) r.epoch = *reader.Get<std::uint32_t>();
  for (auto& r : log.records) r.model = *reader.Get<std::uint32_t>();
  for (auto& r : log.records) r.sample = *reader.Get<std::uint32_t>();
  for (auto& r : log.records) r.member = *reader.Get<std::uint8_t>();
  for (auto& r : log.records) r.conf = *reader.Get<float>();
  for (auto& r : log.records) r.loss = *reader.Get<float>();
  for (auto& r : log.records) r.correct = *reader.Get<std::uint8_t>();
  return log;
}

}  // namespace miadyn::train

#endif  // MIADYN_TRAIN_SCORE_LOG_HPP_
