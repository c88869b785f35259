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
// Feed-forward ReLU classifier with softmax output. Parameters live in one
// flat vector; layer l stores W_l (out x in, column-major) followed by b_l.

#ifndef MIADYN_TRAIN_MLP_HPP_
#define MIADYN_TRAIN_MLP_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "miadyn/util/rng.hpp"

namespace miadyn::train {

class ModelParams {
 public:
  ModelParams() = default;

  // Zero-initialized parameters for widths (input, hidden..., n_classes).
  static absl::StatusOr<ModelParams> Create(std::vector<int> widths) {
    if (widths.size() < 2) {
      return absl::InvalidArgumentError("need at least input and output widths");
    }
    for (int w : widths) {
      if (w <= 0) {
        return absl::InvalidArgumentError(absl::StrCat(
            "layer widths must be positive: [", absl::StrJoin(widths, ","), "]"));
      }
    }
    ModelParams p;
    p.widths_ = std::move(widths);
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < p.widths_.size(); ++l) {
      p.offsets_.push_back(offset);
      offset += static_cast<std::size_t>(p.widths_[l + 1]) * (p.widths_[l] + 1);
    }
    p.offsets_.push_back(offset);
    p.values_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(offset));
    return p;
  }

  // Same shape, values taken from `values`.
  static absl::StatusOr<ModelParams> FromValues(std::vector<int> widths,
                                                Eigen::VectorXd values) {
    auto p = Create(std::move(widths));
    if (!p.ok()) return p.status();
    if (values.size() != p->values_.size()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "parameter count mismatch: expected ", p->values_.size(), ", got ",
          values.size()));
    }
    p->values_ = std::move(values);
    return p;
  }

  const std::vector<int>& widths() const { return widths_; }
  int n_layers() const { return static_cast<int>(widths_.size()) - 1; }
  int input_dim() const { return widths_.front(); }
  int n_classes() const { return widths_.back(); }
  Eigen::Index size() const { return values_.size(); }

  Eigen::VectorXd& values() { return values_; }
  const Eigen::VectorXd& values() const { return values_; }

  // Offset and length of layer l's block (weights then biases).
  std::size_t LayerOffset(int l) const { return offsets_[l]; }
  std::size_t LayerSize(int l) const { return offsets_[l + 1] - offsets_[l]; }

  Eigen::Map<const Eigen::MatrixXd> Weight(int l) const {
    return {values_.data() + offsets_[l], widths_[l + 1], widths_[l]};
  }
  Eigen::Map<Eigen::MatrixXd> Weight(int l) {
    return {values_.data() + offsets_[l], widths_[l + 1], widths_[l]};
  }
  Eigen::Map<const Eigen::VectorXd> Bias(int l) const {
    return {values_.data() + offsets_[l] +
                static_cast<std::size_t>(widths_[l + 1]) * widths_[l],
            widths_[l + 1]};
  }
  Eigen::Map<Eigen::VectorXd> Bias(int l) {
    return {values_.data() + offsets_[l] +
                static_cast<std::size_t>(widths_[l + 1]) * widths_[l],
            widths_[l + 1]};
  }

  bool AllFinite() const { return values_.allFinite(); }

 private:
  std::vector<int> widths_;
  std::vector<std::size_t> offsets_;
  Eigen::VectorXd values_;
};

// He-uniform weights, zero biases.
inline void InitializeHeUniform(ModelParams& params, Rng& rng) {
  for (int l = 0; l < params.n_layers(); ++l) {
    const double bound = std::sqrt(6.0 / params.widths()[l]);
    std::uniform_real_distribution<double> dist(-bound, bound);
    auto w = params.Weight(l);
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = dist(rng);
    }
    params.Bias(l).setZero();
  }
}

// Column-wise softmax with max subtraction.
inline Eigen::MatrixXd SoftmaxColumns(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double mx = logits.col(j).maxCoeff();
    out.col(j) = (logits.col(j).array() - mx).exp().matrix();
    out.col(j) /= out.col(j).sum();
  }
  return out;
}

// Activations of one forward pass; samples are columns.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> activations;  // a_0 = input ... a_{L-1}
  std::vector<Eigen::MatrixXd> pre;          // z_1 ... z_L
  Eigen::MatrixXd probs;                     // C x B
};

inline ForwardCache ForwardColumns(const ModelParams& params,
                                   const Eigen::MatrixXd& inputs) {
  ForwardCache cache;
  cache.activations.push_back(inputs);
  for (int l = 0; l < params.n_layers(); ++l) {
    Eigen::MatrixXd z = params.Weight(l) * cache.activations.back();
    z.colwise() += params.Bias(l);
    cache.pre.push_back(z);
    if (l + 1 < params.n_layers()) cache.activations.push_back(z.cwiseMax(0.0));
  }
  cache.probs = SoftmaxColumns(cache.pre.back());
  return cache;
}

// Class probabilities for each row of `features` (B x C result).
inline absl::StatusOr<Eigen::MatrixXd> PredictBatch(const ModelParams& params,
                                                    const Eigen::MatrixXd& features) {
  if (features.cols() != params.input_dim()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "feature dim ", features.cols(), " does not match input width ",
        params.input_dim()));
  }
  return Eigen::MatrixXd(ForwardColumns(params, features.transpose()).probs.transpose());
}

inline absl::StatusOr<Eigen::VectorXd> Forward(const ModelParams& params,
                                               const Eigen::VectorXd& x) {
  if (x.size() != params.input_dim()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "feature dim ", x.size(), " does not match input width ",
        params.input_dim()));
  }
  return Eigen::VectorXd(ForwardColumns(params, x).probs.col(0));
}

struct LossGradient {
  double loss = 0.0;      // mean cross-entropy
  Eigen::VectorXd grad;   // d loss / d params, same layout as ModelParams
};

namespace internal {

inline absl::Status CheckBatch(const ModelParams& params,
                               const Eigen::MatrixXd& features,
                               std::span<const int> labels) {
  if (features.cols() != params.input_dim()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "feature dim ", features.cols(), " does not match input width ",
        params.input_dim()));
  }
  if (static_cast<std::size_t>(features.rows()) != labels.size() || labels.empty()) {
    return absl::InvalidArgumentError("batch features and labels disagree in length");
  }
  for (int y : labels) {
    if (y < 0 || y >= params.n_classes()) {
      return absl::InvalidArgumentError(absl::StrCat("label ", y, " out of range"));
    }
  }
  return absl::OkStatus();
}

// dL/dz_L = (p - onehot(y)) / B per column.
inline Eigen::MatrixXd OutputDelta(const Eigen::MatrixXd& probs,
                                   std::span<const int> labels, double scale) {
  Eigen::MatrixXd delta = probs;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    delta(labels[j], static_cast<Eigen::Index>(j)) -= 1.0;
  }
  return delta * scale;
}

}  // namespace internal

// Mean cross-entropy -log p_y over the rows of `features` and its exact
// backpropagated gradient. Non-finite values are reported, not propagated.
inline absl::StatusOr<LossGradient> ComputeLossGradient(const ModelParams& params,
                                                        const Eigen::MatrixXd& features,
                                                        std::span<const int> labels) {
  if (absl::Status s = internal::CheckBatch(params, features, labels); !s.ok()) return s;
  const auto batch = static_cast<double>(labels.size());
  ForwardCache cache = ForwardColumns(params, features.transpose());

  LossGradient out;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    out.loss -= std::log(cache.probs(labels[j], static_cast<Eigen::Index>(j)));
  }
  out.loss /= batch;
  out.grad = Eigen::VectorXd::Zero(params.size());

  Eigen::MatrixXd delta = internal::OutputDelta(cache.probs, labels, 1.0 / batch);
  for (int l = params.n_layers() - 1; l >= 0; --l) {
    const Eigen::MatrixXd& a = cache.activations[l];
    const std::size_t off = params.LayerOffset(l);
    const int rows = params.widths()[l + 1];
    const int cols = params.widths()[l];
    Eigen::Map<Eigen::MatrixXd>(out.grad.data() + off, rows, cols) =
        delta * a.transpose();
    Eigen::Map<Eigen::VectorXd>(out.grad.data() + off +
                                    static_cast<std::size_t>(rows) * cols,
                                rows) = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = params.Weight(l).transpose() * delta;
      delta = back.cwiseProduct(
          (cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  if (!std::isfinite(out.loss) || !out.grad.allFinite()) {
    return absl::InternalError(absl::StrCat(
        "non-finite loss or gradient (loss=", out.loss, ")"));
  }
  return out;
}

// Gradient of -log p_y for a single sample.
inline absl::StatusOr<Eigen::VectorXd> PerSampleGradient(const ModelParams& params,
                                                         const Eigen::VectorXd& x,
                                                         int label) {
  const int labels[] = {label};
  auto lg = ComputeLossGradient(params, x.transpose(), labels);
  if (!lg.ok()) return lg.status();
  return std::move(lg->grad);
}

// Per-sample gradient L2 norms for every row, without materializing the
// gradients: the layer-l block of sample j's gradient is the outer product
// delta_l a_{l-1}^T plus the bias delta_l, so its squared norm is
// |delta_l|^2 (|a_{l-1}|^2 + 1).
inline absl::StatusOr<Eigen::VectorXd> PerSampleGradientNorms(
    const ModelParams& params, const Eigen::MatrixXd& features,
    std::span<const int> labels) {
  if (absl::Status s = internal::CheckBatch(params, features, labels); !s.ok()) return s;
  ForwardCache cache = ForwardColumns(params, features.transpose());
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(labels.size()));
  Eigen::MatrixXd delta = internal::OutputDelta(cache.probs, labels, 1.0);
  for (int l = params.n_layers() - 1; l >= 0; --l) {
    const Eigen::MatrixXd& a = cache.activations[l];
    sq.array() += delta.colwise().squaredNorm().transpose().array() *
                  (a.colwise().squaredNorm().transpose().array() + 1.0);
    if (l > 0) {
      Eigen::MatrixXd back = params.Weight(l).transpose() * delta;
      delta = back.cwiseProduct(
          (cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  if (!sq.allFinite()) return absl::InternalError("non-finite gradient norm");
  return Eigen::VectorXd(sq.cwiseSqrt());
}

// Exact Hessian-vector product of the mean cross-entropy, by forward- and
// reverse-mode R-propagation. ReLU has zero curvature almost everywhere, so
// the result is the true Hessian of the piecewise-smooth loss.
inline absl::StatusOr<Eigen::VectorXd> HessianVectorProduct(
    const ModelParams& params, const Eigen::MatrixXd& features,
    std::span<const int> labels, const Eigen::VectorXd& direction) {
  if (absl::Status s = internal::CheckBatch(params, features, labels); !s.ok()) return s;
  if (direction.size() != params.size()) {
    return absl::InvalidArgumentError("direction has the wrong length");
  }
  auto dir = ModelParams::FromValues(params.widths(), direction);
  if (!dir.ok()) return dir.status();

  const auto batch = static_cast<double>(labels.size());
  const int n_layers = params.n_layers();
  ForwardCache cache = ForwardColumns(params, features.transpose());

  // Forward R pass.
  std::vector<Eigen::MatrixXd> r_act(n_layers);  // R{a_l}, l = 0..L-1
  std::vector<Eigen::MatrixXd> r_pre(n_layers);  // R{z_{l+1}}
  r_act[0] = Eigen::MatrixXd::Zero(cache.activations[0].rows(), cache.activations[0].cols());
  for (int l = 0; l < n_layers; ++l) {
    Eigen::MatrixXd rz = dir->Weight(l) * cache.activations[l] +
                         params.Weight(l) * r_act[l];
    rz.colwise() += dir->Bias(l);
    r_pre[l] = rz;
    if (l + 1 < n_layers) {
      r_act[l + 1] = rz.cwiseProduct((cache.pre[l].array() > 0.0).cast<double>().matrix());
    }
  }
  // R{p} = (diag(p) - p p^T) R{z_L}, per column.
  const Eigen::MatrixXd& p = cache.probs;
  Eigen::MatrixXd r_delta(p.rows(), p.cols());
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    const double dot = p.col(j).dot(r_pre[n_layers - 1].col(j));
    r_delta.col(j) = p.col(j).cwiseProduct(r_pre[n_layers - 1].col(j)) - p.col(j) * dot;
  }
  r_delta /= batch;
  Eigen::MatrixXd delta = internal::OutputDelta(p, labels, 1.0 / batch);

  Eigen::VectorXd hv = Eigen::VectorXd::Zero(params.size());
  for (int l = n_layers - 1; l >= 0; --l) {
    const std::size_t off = params.LayerOffset(l);
    const int rows = params.widths()[l + 1];
    const int cols = params.widths()[l];
    Eigen::Map<Eigen::MatrixXd>(hv.data() + off, rows, cols) =
        r_delta * cache.activations[l].transpose() + delta * r_act[l].transpose();
    Eigen::Map<Eigen::VectorXd>(hv.data() + off + static_cast<std::size_t>(rows) * cols,
                                rows) = r_delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd mask = (cache.pre[l - 1].array() > 0.0).cast<double>().matrix();
      Eigen::MatrixXd next_r = (dir->Weight(l).transpose() * delta +
                                params.Weight(l).transpose() * r_delta)
                                   .cwiseProduct(mask);
      delta = (params.Weight(l).transpose() * delta).cwiseProduct(mask);
      r_delta = std::move(next_r);
    }
  }
  if (!hv.allFinite()) return absl::InternalError("non-finite Hessian-vector product");
  return hv;
}

// Dense Hessian of the mean cross-entropy restricted to the output layer
// (weights then biases, in the flat layout). Per sample it is
// (a~ a~^T) kron (diag(p) - p p^T) with a~ = [a_{L-1}; 1].
inline absl::StatusOr<Eigen::MatrixXd> OutputLayerHessian(const ModelParams& params,
                                                          const Eigen::MatrixXd& features) {
  if (features.cols() != params.input_dim() || features.rows() == 0) {
    return absl::InvalidArgumentError("feature batch does not match the model");
  }
  ForwardCache cache = ForwardColumns(params, features.transpose());
  const int last = params.n_layers() - 1;
  const Eigen::Index c = params.n_classes();
  const Eigen::Index h = params.widths()[last];
  const Eigen::Index dim = (h + 1) * c;
  Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::MatrixXd augmented(h + 1, features.rows());
  augmented.topRows(h) = cache.activations[last];
  augmented.row(h).setOnes();
  for (Eigen::Index j = 0; j < features.rows(); ++j) {
    const Eigen::VectorXd pj = cache.probs.col(j);
    Eigen::MatrixXd s = -pj * pj.transpose();
    s.diagonal() += pj;
    const Eigen::MatrixXd outer = augmented.col(j) * augmented.col(j).transpose();
    for (Eigen::Index a = 0; a <= h; ++a) {
      for (Eigen::Index b = 0; b <= h; ++b) {
        hess.block(a * c, b * c, c, c).noalias() += outer(a, b) * s;
      }
    }
  }
  hess /= static_cast<double>(features.rows());
  return hess;
}

}  // namespace miadyn::train

#endif  // MIADYN_TRAIN_MLP_HPP_
