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
#ifndef MIADYN_TRAIN_OPTIMIZER_HPP_
#define MIADYN_TRAIN_OPTIMIZER_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>
#include <string_view>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"

namespace miadyn::train {

enum class OptimizerKind { kSgdMomentum, kAdamW, kSamOverSgd };

inline std::string_view OptimizerKindName(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSgdMomentum: return "sgd-momentum";
    case OptimizerKind::kAdamW: return "adamw";
    case OptimizerKind::kSamOverSgd: return "sam-over-sgd";
  }
  return "unknown";
}

inline absl::StatusOr<OptimizerKind> ParseOptimizerKind(std::string_view name) {
  for (auto kind : {OptimizerKind::kSgdMomentum, OptimizerKind::kAdamW,
                    OptimizerKind::kSamOverSgd}) {
    if (OptimizerKindName(kind) == name) return kind;
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown optimizer '", std::string(name), "'"));
}

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdamW;
  double lr = 1e-3;
  double momentum = 0.9;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double rho = 0.05;

  friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

inline absl::Status Validate(const OptimizerConfig& cfg) {
  if (!(cfg.lr > 0.0)) return absl::InvalidArgumentError("lr must be positive");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) {
    return absl::InvalidArgumentError("momentum must lie in [0, 1)");
  }
  if (!(cfg.weight_decay >= 0.0)) {
    return absl::InvalidArgumentError("weight_decay must be non-negative");
  }
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) {
    return absl::InvalidArgumentError("adam betas must lie in [0, 1)");
  }
  if (!(cfg.eps > 0.0)) return absl::InvalidArgumentError("eps must be positive");
  if (cfg.kind == OptimizerKind::kSamOverSgd && !(cfg.rho > 0.0)) {
    return absl::InvalidArgumentError("sam requires rho > 0");
  }
  return absl::OkStatus();
}

// Per-parameter optimizer memory.
struct OptimizerState {
  Eigen::VectorXd first;   // momentum buffer / Adam first moment
  Eigen::VectorXd second;  // Adam second moment
  long long step = 0;

  static OptimizerState Zeros(Eigen::Index n) {
    return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), 0};
  }
};

namespace internal {
inline absl::Status CheckFinite(const Eigen::VectorXd& params) {
  if (!params.allFinite()) return absl::InternalError("non-finite parameter update");
  return absl::OkStatus();
}
inline absl::Status CheckShapes(const OptimizerState& state,
                                const Eigen::VectorXd& params,
                                const Eigen::VectorXd& grad) {
  if (grad.size() != params.size() || state.first.size() != params.size() ||
      state.second.size() != params.size()) {
    return absl::InvalidArgumentError("optimizer shapes do not match");
  }
  return absl::OkStatus();
}
}  // namespace internal

// velocity <- momentum * velocity + grad
// params   <- params - lr * velocity - lr * weight_decay * params
inline absl::Status SgdMomentumStep(OptimizerState& state, Eigen::VectorXd& params,
                                    const Eigen::VectorXd& grad,
                                    const OptimizerConfig& cfg) {
  if (absl::Status s = internal::CheckShapes(state, params, grad); !s.ok()) return s;
  state.first = cfg.momentum * state.first + grad;
  params -= cfg.lr * (state.first + cfg.weight_decay * params);
  ++state.step;
  return internal::CheckFinite(params);
}

// Bias-corrected Adam moments with decoupled weight decay.
inline absl::Status AdamWStep(OptimizerState& state, Eigen::VectorXd& params,
                              const Eigen::VectorXd& grad,
                              const OptimizerConfig& cfg) {
  if (absl::Status s = internal::CheckShapes(state, params, grad); !s.ok()) return s;
  ++state.step;
  state.first = cfg.beta1 * state.first + (1.0 - cfg.beta1) * grad;
  state.second = cfg.beta2 * state.second + (1.0 - cfg.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  const Eigen::ArrayXd m_hat = state.first.array() / c1;
  const Eigen::ArrayXd v_hat = state.second.array() / c2;
  params *= 1.0 - cfg.lr * cfg.weight_decay;
  params.array() -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
  return internal::CheckFinite(params);
}

// Loss gradient oracle for a fixed batch, evaluated at arbitrary parameters.
using GradientFn = std::function<absl::StatusOr<Eigen::VectorXd>(const Eigen::VectorXd&)>;

// Sharpness-aware step over SGD-momentum: perturb by rho * g / |g| and take
// the base step with the gradient found there. A zero gradient skips the
// perturbation.
inline absl::Status SamStep(OptimizerState& state, Eigen::VectorXd& params,
                            const GradientFn& gradient, const OptimizerConfig& cfg) {
  if (!(cfg.rho > 0.0)) return absl::InvalidArgumentError("sam requires rho > 0");
  auto g = gradient(params);
  if (!g.ok()) return g.status();
  const double norm = g->norm();
  if (norm == 0.0) return SgdMomentumStep(state, params, *g, cfg);
  const Eigen::VectorXd perturbed = params + (cfg.rho / norm) * (*g);
  auto g_sharp = gradient(perturbed);
  if (!g_sharp.ok()) return g_sharp.status();
  return SgdMomentumStep(state, params, *g_sharp, cfg);
}

// Dispatches one step. `gradient` is only re-evaluated by SAM.
inline absl::Status OptimizerStep(OptimizerState& state, Eigen::VectorXd& params,
                                  const GradientFn& gradient,
                                  const OptimizerConfig& cfg) {
  if (cfg.kind == OptimizerKind::kSamOverSgd) {
    return SamStep(state, params, gradient, cfg);
  }
  auto g = gradient(params);
  if (!g.ok()) return g.status();
  return cfg.kind == OptimizerKind::kAdamW ? AdamWStep(state, params, *g, cfg)
                                           : SgdMomentumStep(state, params, *g, cfg);
}

}  // namespace miadyn::train

#endif  // MIADYN_TRAIN_OPTIMIZER_HPP_
