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
// Shadow-population training under the membership game. Model i trains only
// on its member rows and is scored on every pool row at each checkpoint.

#ifndef MIADYN_TRAIN_POPULATION_HPP_
#define MIADYN_TRAIN_POPULATION_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "miadyn/data/dataset.hpp"
#include "miadyn/data/membership.hpp"
#include "miadyn/train/mlp.hpp"
#include "miadyn/train/optimizer.hpp"
#include "miadyn/train/score_log.hpp"
#include "miadyn/util/io.hpp"
#include "miadyn/util/parallel.hpp"
#include "miadyn/util/rng.hpp"
#include "miadyn/util/status.hpp"

namespace miadyn::train {

struct TrainingConfig {
  std::vector<int> hidden = {64, 64};
  OptimizerConfig optimizer;
  int epochs = 60;
  int checkpoint_interval = 5;
  int batch_size = 32;  // 0 = full batch
  std::uint64_t master_seed = 0;

  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

inline absl::Status Validate(const TrainingConfig& cfg) {
  MIADYN_RETURN_IF_ERROR(Validate(cfg.optimizer));
  if (cfg.epochs <= 0 || cfg.checkpoint_interval <= 0) {
    return absl::InvalidArgumentError("epochs and checkpoint_interval must be positive");
  }
  if (cfg.epochs % cfg.checkpoint_interval != 0) {
    return absl::InvalidArgumentError(absl::StrCat(
        "checkpoint_interval (", cfg.checkpoint_interval,
        ") must divide epochs (", cfg.epochs, ")"));
  }
  if (cfg.batch_size < 0) return absl::InvalidArgumentError("batch_size must be >= 0");
  for (int w : cfg.hidden) {
    if (w <= 0) return absl::InvalidArgumentError("hidden widths must be positive");
  }
  return absl::OkStatus();
}

// 0, interval, 2 * interval, ..., epochs.
inline std::vector<int> CheckpointEpochs(const TrainingConfig& cfg) {
  std::vector<int> out;
  for (int e = 0; e <= cfg.epochs; e += cfg.checkpoint_interval) out.push_back(e);
  return out;
}

inline std::vector<int> LayerWidths(const TrainingConfig& cfg, int input_dim,
                                    int n_classes) {
  std::vector<int> widths = {input_dim};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(n_classes);
  return widths;
}

struct TrainRun {
  int model_id = 0;
  std::vector<std::uint8_t> membership;  // one bit per pool row
  std::vector<int> checkpoint_epochs;
  std::vector<ModelParams> checkpoints;  // float-rounded snapshots
  std::uint64_t rng_seed = 0;
};

struct Population {
  std::vector<TrainRun> runs;
  ScoreLog scores;
};

// Snapshot rounded to float32 so persisted checkpoints reproduce it exactly.
inline ModelParams Snapshot(const ModelParams& live) {
  ModelParams copy = live;
  copy.values() = live.values().cast<float>().cast<double>();
  return copy;
}

inline Eigen::MatrixXd GatherRows(const Eigen::MatrixXd& x, std::span<const int> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  }
  return out;
}

// Appends one record per pool row for the snapshot at `epoch`.
inline absl::Status ScoreCheckpoint(const ModelParams& snapshot,
                                    const data::SamplePool& pool,
                                    const data::MembershipPlan& plan, int model_id,
                                    int epoch, std::span<ScoreRecord> out) {
  MIADYN_ASSIGN_OR_RETURN(Eigen::MatrixXd probs, PredictBatch(snapshot, pool.features));
  for (std::size_t z = 0; z < pool.size(); ++z) {
    const auto row = static_cast<Eigen::Index>(z);
    Eigen::Index argmax = 0;
    probs.row(row).maxCoeff(&argmax);
    const int y = pool.labels[z];
    out[z] = MakeScoreRecord(static_cast<std::uint32_t>(epoch),
                             static_cast<std::uint32_t>(model_id),
                             static_cast<std::uint32_t>(z),
                             plan.member(model_id, static_cast<int>(z)),
                             probs(row, y), argmax == y);
  }
  return absl::OkStatus();
}

// Trains model `model_id` on its member rows. Its RNG stream depends only on
// (master_seed, model_id). `scores` receives checkpoints x M records.
inline absl::StatusOr<TrainRun> TrainSingleRun(const data::SamplePool& pool,
                                               const data::MembershipPlan& plan,
                                               int model_id, const TrainingConfig& cfg,
                                               std::span<ScoreRecord> scores) {
  const std::vector<int> epochs = CheckpointEpochs(cfg);
  const std::size_t m = pool.size();
  if (scores.size() != epochs.size() * m) {
    return absl::InvalidArgumentError("score buffer has the wrong size");
  }
  TrainRun run;
  run.model_id = model_id;
  run.rng_seed = StreamSeed(cfg.master_seed, static_cast<std::uint64_t>(model_id), kTagTraining);
  run.checkpoint_epochs = epochs;
  run.membership.resize(m);
  for (std::size_t z = 0; z < m; ++z) {
    run.membership[z] = plan.member(model_id, static_cast<int>(z)) ? 1 : 0;
  }
  Rng rng(run.rng_seed);

  MIADYN_ASSIGN_OR_RETURN(ModelParams params,
                          ModelParams::Create(LayerWidths(cfg, pool.dim(), pool.n_classes)));
  InitializeHeUniform(params, rng);
  OptimizerState state = OptimizerState::Zeros(params.size());

  std::vector<int> train_rows = plan.TrainSet(model_id);
  const std::size_t batch =
      cfg.batch_size == 0 ? train_rows.size()
                          : std::min<std::size_t>(cfg.batch_size, train_rows.size());

  auto record = [&](std::size_t ckpt_index) -> absl::Status {
    run.checkpoints.push_back(Snapshot(params));
    return ScoreCheckpoint(run.checkpoints.back(), pool, plan, model_id,
                           epochs[ckpt_index], scores.subspan(ckpt_index * m, m));
  };
  MIADYN_RETURN_IF_ERROR(record(0));

  std::vector<int> batch_labels;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(train_rows.begin(), train_rows.end(), rng);
    for (std::size_t start = 0; start < train_rows.size(); start += batch) {
      const std::size_t end = std::min(train_rows.size(), start + batch);
      std::span<const int> rows(train_rows.data() + start, end - start);
      const Eigen::MatrixXd x = GatherRows(pool.features, rows);
      batch_labels.clear();
      for (int r : rows) batch_labels.push_back(pool.labels[r]);

      GradientFn gradient = [&](const Eigen::VectorXd& at) -> absl::StatusOr<Eigen::VectorXd> {
        ModelParams probe = params;
        probe.values() = at;
        auto lg = ComputeLossGradient(probe, x, batch_labels);
        if (!lg.ok()) return lg.status();
        return std::move(lg->grad);
      };
      absl::Status step = OptimizerStep(state, params.values(), gradient, cfg.optimizer);
      if (!step.ok()) {
        return absl::InternalError(absl::StrCat("model ", model_id, " diverged at epoch ",
                                                epoch, ": ", step.message()));
      }
    }
    if (epoch % cfg.checkpoint_interval == 0) {
      MIADYN_RETURN_IF_ERROR(record(static_cast<std::size_t>(epoch / cfg.checkpoint_interval)));
    }
  }
  return run;
}

// Trains all N models in parallel. Records are written to fixed slots, so the
// log comes out in canonical (epoch, model, sample) order for any thread
// count.
inline absl::StatusOr<Population> TrainPopulation(const data::SamplePool& pool,
                                                  const data::MembershipPlan& plan,
                                                  const TrainingConfig& cfg) {
  MIADYN_RETURN_IF_ERROR(Validate(cfg));
  if (static_cast<std::size_t>(plan.n_samples()) != pool.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "membership plan covers ", plan.n_samples(), " samples but the pool has ",
        pool.size()));
  }
  const std::vector<int> epochs = CheckpointEpochs(cfg);
  const std::size_t m = pool.size();
  const auto n = static_cast<std::size_t>(plan.n_models());

  // Per-model buffers laid out [checkpoint][sample].
  std::vector<std::vector<ScoreRecord>> per_model(n);
  std::vector<absl::StatusOr<TrainRun>> results(n, absl::UnknownError("not run"));
  ParallelFor(n, [&](std::size_t i) {
    per_model[i].resize(epochs.size() * m);
    results[i] = TrainSingleRun(pool, plan, static_cast<int>(i), cfg, per_model[i]);
  });

  Population pop;
  pop.scores.records.resize(epochs.size() * n * m);
  for (std::size_t i = 0; i < n; ++i) {
    if (!results[i].ok()) return results[i].status();
    pop.runs.push_back(std::move(results[i]).value());
    for (std::size_t k = 0; k < epochs.size(); ++k) {
      std::copy_n(per_model[i].begin() + static_cast<std::ptrdiff_t>(k * m), m,
                  pop.scores.records.begin() + static_cast<std::ptrdiff_t>((k * n + i) * m));
    }
  }
  return pop;
}

// run_<id>/ckpt_<epoch>.params: magic "MIAP", u32 version, u32 width count,
// u32 widths..., u64 value count, f32 values.
inline constexpr char kParamsMagic[4] = {'M', 'I', 'A', 'P'};

inline std::string EncodeParams(const ModelParams& params) {
  ByteWriter w;
  w.PutBytes(std::string_view(kParamsMagic, 4));
  w.Put(std::uint32_t{1});
  w.Put(static_cast<std::uint32_t>(params.widths().size()));
  for (int width : params.widths()) w.Put(static_cast<std::uint32_t>(width));
  w.Put(static_cast<std::uint64_t>(params.size()));
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    w.Put(static_cast<float>(params.values()[i]));
  }
  return w.Release();
}

inline absl::StatusOr<ModelParams> DecodeParams(std::string_view bytes) {
  ByteReader r(bytes);
  auto magic = r.GetBytes(4);
  if (!magic.ok() || *magic != std::string_view(kParamsMagic, 4)) {
    return absl::DataLossError("params: bad magic at offset 0");
  }
  MIADYN_ASSIGN_OR_RETURN(std::uint32_t version, r.Get<std::uint32_t>());
  if (version != 1) return absl::DataLossError("params: unsupported version");
  MIADYN_ASSIGN_OR_RETURN(std::uint32_t n_widths, r.Get<std::uint32_t>());
  if (n_widths < 2 || n_widths > 64) return absl::DataLossError("params: bad width count");
  std::vector<int> widths;
  for (std::uint32_t i = 0; i < n_widths; ++i) {
    MIADYN_ASSIGN_OR_RETURN(std::uint32_t w, r.Get<std::uint32_t>());
    widths.push_back(static_cast<int>(w));
  }
  MIADYN_ASSIGN_OR_RETURN(std::uint64_t count, r.Get<std::uint64_t>());
  MIADYN_ASSIGN_OR_RETURN(ModelParams params, ModelParams::Create(widths));
  if (count != static_cast<std::uint64_t>(params.size())) {
    return absl::DataLossError(absl::StrCat("params: shape header implies ", params.size(),
                                            " values, file declares ", count));
  }
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    MIADYN_ASSIGN_OR_RETURN(float v, r.Get<float>());
    params.values()[i] = v;
  }
  if (!r.AtEnd()) return absl::DataLossError("params: trailing bytes");
  if (!params.AllFinite()) return absl::DataLossError("params: non-finite values");
  return params;
}

inline std::filesystem::path CheckpointPath(const std::filesystem::path& runs_dir,
                                            int model_id, int epoch) {
  return runs_dir / absl::StrCat("run_", model_id) / absl::StrCat("ckpt_", epoch, ".params");
}

}  // namespace miadyn::train

#endif  // MIADYN_TRAIN_POPULATION_HPP_
