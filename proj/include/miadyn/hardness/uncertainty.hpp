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
#ifndef MIADYN_HARDNESS_UNCERTAINTY_HPP_
#define MIADYN_HARDNESS_UNCERTAINTY_HPP_

#include <algorithm>
#include <cmath>

#include "Eigen/Dense"
#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace miadyn::hardness {

// Shannon entropy in nats, with 0 log 0 = 0.
inline double Entropy(const Eigen::Ref<const Eigen::VectorXd>& p) {
  double h = 0.0;
  for (Eigen::Index c = 0; c < p.size(); ++c) {
    if (p(c) > 0.0) h -= p(c) * std::log(p(c));
  }
  return h;
}

struct Uncertainty {
  double total = 0.0;      // entropy of the mean prediction
  double aleatoric = 0.0;  // mean entropy of the members
  double epistemic = 0.0;  // mutual information, total - aleatoric
};

// members: one predictive distribution per row.
inline absl::StatusOr<Uncertainty> DecomposeUncertainty(const Eigen::MatrixXd& members) {
  if (members.rows() < 2) {
    return absl::InvalidArgumentError("uncertainty needs at least 2 ensemble members");
  }
  Uncertainty u;
  const Eigen::VectorXd mean = members.colwise().mean().transpose();
  u.total = Entropy(mean);
  for (Eigen::Index r = 0; r < members.rows(); ++r) {
    u.aleatoric += Entropy(members.row(r).transpose());
  }
  u.aleatoric /= static_cast<double>(members.rows());
  u.epistemic = std::max(0.0, u.total - u.aleatoric);
  return u;
}

}  // namespace miadyn::hardness

#endif  // MIADYN_HARDNESS_UNCERTAINTY_HPP_
