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
// Shadow-classifier membership attack. For each class, a logistic regression
// maps a model's descending-sorted posterior vector on a sample to a
// membership log-odds. When model i is the target, the classifiers are fit on
// the outputs of the other models only.

#ifndef MIADYN_ATTACK_SHOKRI_HPP_
#define MIADYN_ATTACK_SHOKRI_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "Eigen/Dense"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "miadyn/attack/lira.hpp"
#include "miadyn/core/field.hpp"
#include "miadyn/core/plane.hpp"
#include "miadyn/data/dataset.hpp"
#include "miadyn/data/membership.hpp"
#include "miadyn/train/posteriors.hpp"
#include "miadyn/util/parallel.hpp"
#include "miadyn/util/status.hpp"

namespace miadyn::attack {

struct ShokriConfig {
  double threshold = 0.0;  // membership log-odds cutoff
  double ridge = 1e-4;     // L2 penalty on the weights, not the intercept
  double tolerance = 1e-6;
  int max_iterations = 500;

  friend bool operator==(const ShokriConfig&, const ShokriConfig&) = default;
};

// Binary logistic regression; coef holds the weights followed by the intercept.
struct LogisticModel {
  Eigen::VectorXd coef;

  double Logit(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    const Eigen::Index d = coef.size() - 1;
    return coef.head(d).dot(x) + coef(d);
  }
};

// Newton's method on the mean log-loss plus ridge/2 |w|^2. Stops when the
// step's max-norm falls below the tolerance.
inline absl::StatusOr<LogisticModel> FitLogistic(const Eigen::MatrixXd& x,
                                                 std::span<const std::uint8_t> y,
                                                 const ShokriConfig& cfg) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n == 0 || static_cast<std::size_t>(n) != y.size()) {
    return absl::InvalidArgumentError("logistic fit needs one label per row");
  }
  Eigen::Index positives = 0;
  for (auto v : y) positives += v ? 1 : 0;
  if (positives == 0 || positives == n) {
    return absl::FailedPreconditionError("logistic fit needs both labels present");
  }
  Eigen::MatrixXd design(n, d + 1);
  design.leftCols(d) = x;
  design.col(d).setOnes();
  Eigen::VectorXd target(n);
  for (Eigen::Index r = 0; r < n; ++r) target(r) = y[static_cast<std::size_t>(r)] ? 1.0 : 0.0;

  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(d + 1, cfg.ridge);
  penalty(d) = 0.0;
  LogisticModel model{Eigen::VectorXd::Zero(d + 1)};
  for (int it = 0; it < cfg.max_iterations; ++it) {
    const Eigen::VectorXd z = design * model.coef;
    const Eigen::VectorXd p = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    const Eigen::VectorXd w = p.cwiseProduct((1.0 - p.array()).matrix());
    Eigen::VectorXd grad = design.transpose() * (p - target) / static_cast<double>(n);
    grad += penalty.cwiseProduct(model.coef);
    Eigen::MatrixXd hess = design.transpose() * w.asDiagonal() * design / static_cast<double>(n);
    hess.diagonal() += penalty;
    // Tiny jitter keeps the intercept direction solvable on degenerate inputs.
    hess.diagonal().array() += 1e-12;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    if (!step.allFinite()) return absl::InternalError("logistic Newton step is not finite");
    model.coef -= step;
    if (step.lpNorm<Eigen::Infinity>() < cfg.tolerance) break;
  }
  return model;
}

inline Eigen::VectorXd SortedPosterior(const Eigen::Ref<const Eigen::VectorXd>& p) {
  Eigen::VectorXd s = p;
  std::sort(s.data(), s.data() + s.size(), std::greater<double>());
  return s;
}

// One classifier per class.
struct ShokriAttackModel {
  std::vector<LogisticModel> per_class;
};

// rows: sorted posterior vectors; classes: the sample's label per row.
inline absl::StatusOr<ShokriAttackModel> ShokriTrain(const Eigen::MatrixXd& rows,
                                                     std::span<const int> classes,
                                                     std::span<const std::uint8_t> member,
                                                     int n_classes, const ShokriConfig& cfg) {
  if (static_cast<std::size_t>(rows.rows()) != classes.size() ||
      classes.size() != member.size()) {
    return absl::InvalidArgumentError("attack training inputs differ in length");
  }
  ShokriAttackModel attack;
  for (int c = 0; c < n_classes; ++c) {
    std::vector<Eigen::Index> idx;
    for (std::size_t r = 0; r < classes.size(); ++r) {
      if (classes[r] == c) idx.push_back(static_cast<Eigen::Index>(r));
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(idx.size()), rows.cols());
    std::vector<std::uint8_t> y(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      x.row(static_cast<Eigen::Index>(r)) = rows.row(idx[r]);
      y[r] = member[static_cast<std::size_t>(idx[r])];
    }
    auto fit = FitLogistic(x, y, cfg);
    if (!fit.ok()) {
      return absl::Status(fit.status().code(),
                          absl::StrCat("class ", c, ": ", fit.status().message()));
    }
    attack.per_class.push_back(std::move(fit).value());
  }
  return attack;
}

// States of every sample at checkpoint k. Model i's decisions come from an
// attack trained on models j != i.
inline absl::StatusOr<std::vector<VulnerabilityState>> ShokriStatesAt(
    const train::PosteriorCube& posteriors, std::size_t k, const data::SamplePool& pool,
    const data::MembershipPlan& plan, const ShokriConfig& cfg) {
  const int n = plan.n_models();
  const int m = plan.n_samples();
  const int c = pool.n_classes;
  if (posteriors.n_models != n || static_cast<std::size_t>(m) != pool.size()) {
    return absl::InvalidArgumentError("posteriors do not match the plan");
  }
  std::vector<Eigen::MatrixXd> sorted(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Eigen::MatrixXd& p = posteriors.at(k, i);
    sorted[static_cast<std::size_t>(i)].resize(m, c);
    for (int z = 0; z < m; ++z) {
      sorted[static_cast<std::size_t>(i)].row(z) = SortedPosterior(p.row(z).transpose()).transpose();
    }
  }

  // flags[i * m + z]
  std::vector<std::uint8_t> flags(static_cast<std::size_t>(n) * m, 0);
  std::vector<absl::Status> status(static_cast<std::size_t>(n));
  ParallelFor(static_cast<std::size_t>(n), [&](std::size_t target) {
    const std::size_t rows = static_cast<std::size_t>(n - 1) * m;
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows), c);
    std::vector<int> classes(rows);
    std::vector<std::uint8_t> bits(rows);
    std::size_t r = 0;
    for (int j = 0; j < n; ++j) {
      if (static_cast<std::size_t>(j) == target) continue;
      x.middleRows(static_cast<Eigen::Index>(r), m) = sorted[static_cast<std::size_t>(j)];
      for (int z = 0; z < m; ++z, ++r) {
        classes[r] = pool.labels[static_cast<std::size_t>(z)];
        bits[r] = plan.member(j, z) ? 1 : 0;
      }
    }
    auto attack = ShokriTrain(x, classes, bits, c, cfg);
    if (!attack.ok()) {
      status[target] = absl::Status(attack.status().code(),
                                    absl::StrCat("epoch ", posteriors.epochs[k], ", target model ",
                                                 target, ": ", attack.status().message()));
      return;
    }
    for (int z = 0; z < m; ++z) {
      const auto& clf = attack->per_class[static_cast<std::size_t>(pool.labels[static_cast<std::size_t>(z)])];
      const double logit = clf.Logit(sorted[target].row(z).transpose());
      flags[target * m + static_cast<std::size_t>(z)] = logit > cfg.threshold ? 1 : 0;
    }
  });
  for (const auto& s : status) {
    if (!s.ok()) return s;
  }

  std::vector<VulnerabilityState> states(static_cast<std::size_t>(m));
  std::vector<std::uint8_t> member(static_cast<std::size_t>(n)), flagged(static_cast<std::size_t>(n));
  for (int z = 0; z < m; ++z) {
    for (int i = 0; i < n; ++i) {
      member[static_cast<std::size_t>(i)] = plan.member(i, z) ? 1 : 0;
      flagged[static_cast<std::size_t>(i)] = flags[static_cast<std::size_t>(i) * m + z];
    }
    states[static_cast<std::size_t>(z)] = CountRates(member, flagged);
  }
  return states;
}

inline absl::StatusOr<VulnerabilityField> ShokriVulnerabilityField(
    const train::PosteriorCube& posteriors, const data::SamplePool& pool,
    const data::MembershipPlan& plan, const ShokriConfig& cfg) {
  std::vector<std::vector<VulnerabilityState>> states;
  for (std::size_t k = 0; k < posteriors.epochs.size(); ++k) {
    MIADYN_ASSIGN_OR_RETURN(std::vector<VulnerabilityState> row,
                            ShokriStatesAt(posteriors, k, pool, plan, cfg));
    states.push_back(std::move(row));
  }
  return AssembleField(posteriors.epochs, states);
}

}  // namespace miadyn::attack

#endif  // MIADYN_ATTACK_SHOKRI_HPP_
