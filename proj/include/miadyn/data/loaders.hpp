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
// File-backed pools: CSV tables, IDX image/label pairs, and the on-disk pool
// directory (pool.meta.json + features.f32 + labels.u16 + ...).

#ifndef MIADYN_DATA_LOADERS_HPP_
#define MIADYN_DATA_LOADERS_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "json.hpp"
#include "miadyn/data/dataset.hpp"
#include "miadyn/util/io.hpp"
#include "miadyn/util/status.hpp"

namespace miadyn::data {

// CSV with header `id,label,f0,...,f{d-1}`. Labels must lie in
// [0, n_classes). Errors name the 1-based line.
inline absl::StatusOr<SamplePool> LoadCsv(const std::filesystem::path& path,
                                          int n_classes) {
  if (n_classes <= 0) return absl::InvalidArgumentError("n_classes must be positive");
  MIADYN_ASSIGN_OR_RETURN(std::string text, ReadFile(path));
  std::vector<absl::string_view> lines = absl::StrSplit(text, '\n');
  while (!lines.empty() && absl::StripAsciiWhitespace(lines.back()).empty()) {
    lines.pop_back();
  }
  if (lines.empty()) return absl::InvalidArgumentError(absl::StrCat(path.string(), ": empty file"));

  std::vector<absl::string_view> header =
      absl::StrSplit(absl::StripAsciiWhitespace(lines[0]), ',');
  if (header.size() < 3 || header[0] != "id" || header[1] != "label") {
    return absl::InvalidArgumentError(absl::StrCat(
        path.string(), ":1: malformed header, expected id,label,f0,..."));
  }
  const std::size_t dim = header.size() - 2;
  for (std::size_t d = 0; d < dim; ++d) {
    if (absl::StripAsciiWhitespace(header[d + 2]) != absl::StrCat("f", d)) {
      return absl::InvalidArgumentError(absl::StrCat(
          path.string(), ":1: malformed header, column ", d + 3,
          " should be f", d));
    }
  }

  const std::size_t m = lines.size() - 1;
  SamplePool pool;
  pool.n_classes = n_classes;
  pool.features.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(dim));
  pool.labels.resize(m);
  pool.sample_ids.resize(m);
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t line_no = r + 2;
    std::vector<absl::string_view> cells =
        absl::StrSplit(absl::StripAsciiWhitespace(lines[r + 1]), ',');
    if (cells.size() != dim + 2) {
      return absl::InvalidArgumentError(absl::StrCat(
          path.string(), ":", line_no, ": expected ", dim + 2,
          " columns, found ", cells.size()));
    }
    std::uint32_t id = 0;
    int label = 0;
    if (!absl::SimpleAtoi(absl::StripAsciiWhitespace(cells[0]), &id)) {
      return absl::InvalidArgumentError(absl::StrCat(path.string(), ":", line_no, ": bad id"));
    }
    if (!absl::SimpleAtoi(absl::StripAsciiWhitespace(cells[1]), &label) ||
        label < 0 || label >= n_classes) {
      return absl::InvalidArgumentError(absl::StrCat(
          path.string(), ":", line_no, ": label '", cells[1],
          "' outside [0, ", n_classes, ")"));
    }
    pool.sample_ids[r] = id;
    pool.labels[r] = label;
    for (std::size_t d = 0; d < dim; ++d) {
      double v = 0.0;
      if (!absl::SimpleAtod(absl::StripAsciiWhitespace(cells[d + 2]), &v) ||
          !std::isfinite(v)) {
        return absl::InvalidArgumentError(absl::StrCat(
            path.string(), ":", line_no, ": bad feature value in column ", d + 3));
      }
      pool.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(d)) = v;
    }
  }
  pool.true_labels = pool.labels;
  MIADYN_RETURN_IF_ERROR(ValidatePool(pool));
  return pool;
}

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

// IDX image/label pair (u8 pixels), flattened row-major and scaled to [0, 1].
inline absl::StatusOr<SamplePool> LoadIdx(const std::filesystem::path& images_path,
                                          const std::filesystem::path& labels_path,
                                          int n_classes) {
  if (n_classes <= 0) return absl::InvalidArgumentError("n_classes must be positive");
  MIADYN_ASSIGN_OR_RETURN(std::string images, ReadFile(images_path));
  MIADYN_ASSIGN_OR_RETURN(std::string labels, ReadFile(labels_path));

  ByteReader img(images);
  MIADYN_ASSIGN_OR_RETURN(std::uint32_t magic, ReadBigEndianU32(img));
  if (magic != kIdxImageMagic) {
    return absl::InvalidArgumentError(absl::StrCat(
        images_path.string(), ": bad image magic 0x", absl::Hex(magic, absl::kZeroPad8),
        " at offset 0"));
  }
  MIADYN_ASSIGN_OR_RETURN(std::uint32_t n, ReadBigEndianU32(img));
  MIADYN_ASSIGN_OR_RETURN(std::uint32_t rows, ReadBigEndianU32(img));
  MIADYN_ASSIGN_OR_RETURN(std::uint32_t cols, ReadBigEndianU32(img));
  const std::size_t dim = std::size_t{rows} * cols;
  if (dim == 0 || n == 0) return absl::InvalidArgumentError("IDX file with empty dimension");

  ByteReader lab(labels);
  MIADYN_ASSIGN_OR_RETURN(std::uint32_t lmagic, ReadBigEndianU32(lab));
  if (lmagic != kIdxLabelMagic) {
    return absl::InvalidArgumentError(absl::StrCat(
        labels_path.string(), ": bad label magic 0x", absl::Hex(lmagic, absl::kZeroPad8),
        " at offset 0"));
  }
  MIADYN_ASSIGN_OR_RETURN(std::uint32_t ln, ReadBigEndianU32(lab));
  if (ln != n) {
    return absl::InvalidArgumentError(absl::StrCat(
        "IDX count mismatch: ", n, " images vs ", ln, " labels (offset 4)"));
  }

  SamplePool pool;
  pool.n_classes = n_classes;
  pool.features.resize(n, static_cast<Eigen::Index>(dim));
  pool.labels.resize(n);
  pool.sample_ids.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::size_t offset = img.offset();
    auto pixels = img.GetBytes(dim);
    if (!pixels.ok()) {
      return absl::DataLossError(absl::StrCat(images_path.string(),
                                              ": truncated image ", i,
                                              " at offset ", offset));
    }
    for (std::size_t d = 0; d < dim; ++d) {
      pool.features(i, static_cast<Eigen::Index>(d)) =
          static_cast<unsigned char>((*pixels)[d]) / 255.0;
    }
    const std::size_t loffset = lab.offset();
    auto y = lab.Get<std::uint8_t>();
    if (!y.ok()) {
      return absl::DataLossError(absl::StrCat(labels_path.string(),
                                              ": truncated at offset ", loffset));
    }
    if (*y >= n_classes) {
      return absl::InvalidArgumentError(absl::StrCat(
          labels_path.string(), ": label ", int{*y}, " at offset ", loffset,
          " outside [0, ", n_classes, ")"));
    }
    pool.labels[i] = *y;
    pool.sample_ids[i] = i;
  }
  pool.features = pool.features.cast<float>().cast<double>();
  pool.true_labels = pool.labels;
  return pool;
}

// Generates or loads the pool the spec describes. File-backed pools keep
// their first n_samples rows and get the spec's label noise.
inline absl::StatusOr<SamplePool> BuildPool(const DatasetSpec& spec) {
  if (spec.kind != DatasetKind::kCsvFile && spec.kind != DatasetKind::kIdxFile) {
    return Generate(spec);
  }
  MIADYN_RETURN_IF_ERROR(Validate(spec));
  MIADYN_ASSIGN_OR_RETURN(SamplePool pool, spec.kind == DatasetKind::kCsvFile
                                               ? LoadCsv(spec.path, spec.n_classes)
                                               : LoadIdx(spec.path, spec.labels_path, spec.n_classes));
  if (pool.dim() != spec.dim) {
    return absl::InvalidArgumentError(
        absl::StrCat(spec.path, ": file has dim ", pool.dim(), ", config says ", spec.dim));
  }
  const auto m = static_cast<std::size_t>(spec.n_samples);
  if (pool.size() < m) {
    return absl::InvalidArgumentError(absl::StrCat(spec.path, ": file has ", pool.size(),
                                                   " rows, config asks for ", m));
  }
  pool.features.conservativeResize(static_cast<Eigen::Index>(m), pool.features.cols());
  pool.labels.resize(m);
  pool.true_labels.resize(m);
  pool.sample_ids.resize(m);
  pool.labels = pool.true_labels;
  Rng rng = MakeStream(spec.seed, 0, kTagData);
  InjectLabelNoise(pool.labels, spec.n_classes, spec.label_noise_rate, rng);
  return pool;
}

inline constexpr const char* kPoolMetaFile = "pool.meta.json";
inline constexpr const char* kPoolFeaturesFile = "features.f32";
inline constexpr const char* kPoolLabelsFile = "labels.u16";
inline constexpr const char* kPoolTrueLabelsFile = "true_labels.u16";
inline constexpr const char* kPoolIdsFile = "ids.u32";

// Writes the pool directory. `spec_echo` is embedded verbatim in the meta.
inline absl::Status SavePool(const SamplePool& pool,
                             const std::filesystem::path& dir,
                             const nlohmann::json& spec_echo) {
  ByteWriter features, labels, true_labels, ids;
  for (Eigen::Index r = 0; r < pool.features.rows(); ++r) {
    for (Eigen::Index c = 0; c < pool.features.cols(); ++c) {
      features.Put(static_cast<float>(pool.features(r, c)));
    }
  }
  for (std::size_t i = 0; i < pool.size(); ++i) {
    labels.Put(static_cast<std::uint16_t>(pool.labels[i]));
    true_labels.Put(static_cast<std::uint16_t>(pool.true_labels[i]));
    ids.Put(static_cast<std::uint32_t>(pool.sample_ids[i]));
  }
  nlohmann::ordered_json meta;
  meta["spec"] = spec_echo;
  meta["n_samples"] = pool.size();
  meta["dim"] = pool.dim();
  meta["n_classes"] = pool.n_classes;
  meta["hashes"] = {
      {kPoolFeaturesFile, Sha256Hex(features.bytes())},
      {kPoolLabelsFile, Sha256Hex(labels.bytes())},
      {kPoolTrueLabelsFile, Sha256Hex(true_labels.bytes())},
      {kPoolIdsFile, Sha256Hex(ids.bytes())},
  };
  MIADYN_RETURN_IF_ERROR(WriteFile(dir / kPoolFeaturesFile, features.bytes()));
  MIADYN_RETURN_IF_ERROR(WriteFile(dir / kPoolLabelsFile, labels.bytes()));
  MIADYN_RETURN_IF_ERROR(WriteFile(dir / kPoolTrueLabelsFile, true_labels.bytes()));
  MIADYN_RETURN_IF_ERROR(WriteFile(dir / kPoolIdsFile, ids.bytes()));
  return WriteFile(dir / kPoolMetaFile, meta.dump(2) + "\n");
}

inline absl::StatusOr<SamplePool> LoadPool(const std::filesystem::path& dir) {
  MIADYN_ASSIGN_OR_RETURN(std::string meta_text, ReadFile(dir / kPoolMetaFile));
  nlohmann::json meta = nlohmann::json::parse(meta_text, nullptr, false);
  if (meta.is_discarded()) {
    return absl::DataLossError(absl::StrCat((dir / kPoolMetaFile).string(), ": invalid JSON"));
  }
  const std::size_t m = meta.value("n_samples", std::size_t{0});
  const std::size_t dim = meta.value("dim", std::size_t{0});
  SamplePool pool;
  pool.n_classes = meta.value("n_classes", 0);

  auto read_checked = [&](const char* name,
                          std::size_t expected) -> absl::StatusOr<std::string> {
    MIADYN_ASSIGN_OR_RETURN(std::string bytes, ReadFile(dir / name));
    if (bytes.size() != expected) {
      return absl::DataLossError(absl::StrCat(name, ": expected ", expected,
                                              " bytes, found ", bytes.size()));
    }
    const std::string want = meta["hashes"].value(name, "");
    if (Sha256Hex(bytes) != want) {
      return absl::DataLossError(absl::StrCat(name, ": hash mismatch"));
    }
    return bytes;
  };
  MIADYN_ASSIGN_OR_RETURN(std::string fbytes, read_checked(kPoolFeaturesFile, m * dim * 4));
  MIADYN_ASSIGN_OR_RETURN(std::string lbytes, read_checked(kPoolLabelsFile, m * 2));
  MIADYN_ASSIGN_OR_RETURN(std::string tbytes, read_checked(kPoolTrueLabelsFile, m * 2));
  MIADYN_ASSIGN_OR_RETURN(std::string ibytes, read_checked(kPoolIdsFile, m * 4));

  pool.features.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(dim));
  pool.labels.resize(m);
  pool.true_labels.resize(m);
  pool.sample_ids.resize(m);
  ByteReader fr(fbytes), lr(lbytes), tr(tbytes), ir(ibytes);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      pool.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          *fr.Get<float>();
    }
    pool.labels[r] = *lr.Get<std::uint16_t>();
    pool.true_labels[r] = *tr.Get<std::uint16_t>();
    pool.sample_ids[r] = *ir.Get<std::uint32_t>();
  }
  MIADYN_RETURN_IF_ERROR(ValidatePool(pool));
  return pool;
}

}  // namespace miadyn::data

#endif  // MIADYN_DATA_LOADERS_HPP_
