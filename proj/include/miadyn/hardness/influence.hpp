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
// Self-influence I(z) = g_z^T (H + lambda I)^{-1} g_z at a trained model, with
// H the Hessian of the mean training loss.
//
// The output-layer scope restricts g_z and H to the last layer's weights and
// biases, where H has a closed form and is positive semidefinite. The full
// scope uses every parameter: a dense solve below dense_limit parameters,
// otherwise conjugate gradient on Hessian-vector products.

#ifndef MIADYN_HARDNESS_INFLUENCE_HPP_
#define MIADYN_HARDNESS_INFLUENCE_HPP_

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "Eigen/Dense"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "miadyn/train/mlp.hpp"
#include "miadyn/util/status.hpp"

namespace miadyn::hardness {

enum class InfluenceScope { kOutputLayer, kFull };

inline std::string_view InfluenceScopeName(InfluenceScope scope) {
  return scope == InfluenceScope::kOutputLayer ? "output-layer" : "full";
}

inline absl::StatusOr<InfluenceScope> ParseInfluenceScope(std::string_view name) {
  if (name == "output-layer") return InfluenceScope::kOutputLayer;
  if (name == "full") return InfluenceScope::kFull;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown influence scope '", std::string(name), "'"));
}

struct InfluenceOptions {
  double damping = 0.01;
  InfluenceScope scope = InfluenceScope::kOutputLayer;
  int cg_max_iterations = 100;
  double cg_tolerance = 1e-6;  // on the relative residual
  int dense_limit = 2000;

  friend bool operator==(const InfluenceOptions&, const InfluenceOptions&) = default;
};

using LinearOperator = std::function<absl::StatusOr<Eigen::VectorXd>(const Eigen::VectorXd&)>;

// Solves A x = b for symmetric positive definite A.
inline absl::StatusOr<Eigen::VectorXd> ConjugateGradient(const LinearOperator& apply,
                                                         const Eigen::VectorXd& b,
                                                         int max_iterations, double tolerance) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
  const double b_norm = b.norm();
  if (b_norm == 0.0) return x;
  Eigen::VectorXd r = b;
  Eigen::VectorXd p = r;
  double rr = r.squaredNorm();
  for (int it = 0; it < max_iterations; ++it) {
    MIADYN_ASSIGN_OR_RETURN(Eigen::VectorXd ap, apply(p));
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) {
      return absl::FailedPreconditionError(absl::StrCat(
          "conjugate gradient met non-positive curvature at iteration ", it,
          " (relative residual ", std::sqrt(rr) / b_norm, ")"));
    }
    const double step = rr / pap;
    x += step * p;
    r -= step * ap;
    const double rr_next = r.squaredNorm();
    if (std::sqrt(rr_next) <= tolerance * b_norm) return x;
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  return absl::DeadlineExceededError(absl::StrCat(
      "conjugate gradient did not converge in ", max_iterations,
      " iterations (relative residual ", std::sqrt(rr) / b_norm, ")"));
}

// Self-influence queries against one trained model.
class SelfInfluence {
 public:
  static absl::StatusOr<SelfInfluence> Create(const train::ModelParams& params,
                                              const Eigen::MatrixXd& train_x,
                                              std::vector<int> train_labels,
                                              const InfluenceOptions& options) {
    if (!(options.damping > 0.0)) return absl::InvalidArgumentError("damping must be positive");
    if (train_x.rows() == 0 || static_cast<std::size_t>(train_x.rows()) != train_labels.size()) {
      return absl::InvalidArgumentError("influence needs a non-empty labelled training set");
    }
    SelfInfluence s(params, train_x, std::move(train_labels), options);
    const int last = params.n_layers() - 1;
    if (options.scope == InfluenceScope::kOutputLayer) {
      s.offset_ = static_cast<Eigen::Index>(params.LayerOffset(last));
      s.length_ = static_cast<Eigen::Index>(params.LayerSize(last));
      MIADYN_ASSIGN_OR_RETURN(Eigen::MatrixXd h, train::OutputLayerHessian(params, s.train_x_));
      s.Factor(std::move(h));
    } else {
      s.offset_ = 0;
      s.length_ = params.size();
      if (params.size() < options.dense_limit) {
        Eigen::MatrixXd h(params.size(), params.size());
        for (Eigen::Index j = 0; j < params.size(); ++j) {
          MIADYN_ASSIGN_OR_RETURN(
              Eigen::VectorXd col,
              train::HessianVectorProduct(params, s.train_x_, s.train_labels_,
                                          Eigen::VectorXd::Unit(params.size(), j)));
          h.col(j) = col;
        }
        // Symmetrize away rounding before factoring.
        s.Factor(0.5 * (h + h.transpose()));
      }
    }
    return s;
  }

  absl::StatusOr<double> Evaluate(const Eigen::VectorXd& x, int label) const {
    MIADYN_ASSIGN_OR_RETURN(Eigen::VectorXd g, train::PerSampleGradient(params_, x, label));
    return EvaluateGradient(g.segment(offset_, length_));
  }

  // g restricted to this solver's scope.
  absl::StatusOr<double> EvaluateGradient(const Eigen::VectorXd& g) const {
    if (g.size() != length_) return absl::InvalidArgumentError("gradient has the wrong length");
    if (dense_) return g.dot(ldlt_.solve(g));
    LinearOperator apply = [this](const Eigen::VectorXd& v) -> absl::StatusOr<Eigen::VectorXd> {
      MIADYN_ASSIGN_OR_RETURN(Eigen::VectorXd hv, train::HessianVectorProduct(
                                                      params_, train_x_, train_labels_, v));
      return Eigen::VectorXd(hv + options_.damping * v);
    };
    MIADYN_ASSIGN_OR_RETURN(Eigen::VectorXd solved,
                            ConjugateGradient(apply, g, options_.cg_max_iterations,
                                              options_.cg_tolerance));
    return g.dot(solved);
  }

  bool dense() const { return dense_; }

 private:
  SelfInfluence(const train::ModelParams& params, const Eigen::MatrixXd& train_x,
                std::vector<int> train_labels, const InfluenceOptions& options)
      : params_(params),
        train_x_(train_x),
        train_labels_(std::move(train_labels)),
        options_(options) {}

  void Factor(Eigen::MatrixXd h) {
    h.diagonal().array() += options_.damping;
    ldlt_.compute(h);
    dense_ = true;
  }

  train::ModelParams params_;
  Eigen::MatrixXd train_x_;
  std::vector<int> train_labels_;
  InfluenceOptions options_;
  Eigen::Index offset_ = 0;
  Eigen::Index length_ = 0;
  bool dense_ = false;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
};

}  // namespace miadyn::hardness

#endif  // MIADYN_HARDNESS_INFLUENCE_HPP_
