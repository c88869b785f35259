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
#ifndef MIADYN_DATA_MEMBERSHIP_HPP_
#define MIADYN_DATA_MEMBERSHIP_HPP_

#include <cstdint>
#include <random>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "miadyn/util/rng.hpp"

namespace miadyn::data {

// Minimum in-models and out-models per sample.
inline constexpr int kMinPerSide = 2;

// N x M membership bits: bit(i, z) = 1 iff model i trains on sample z.
class MembershipPlan {
 public:
  MembershipPlan() = default;
  MembershipPlan(int n_models, int n_samples, std::vector<std::uint8_t> bits)
      : n_models_(n_models), n_samples_(n_samples), bits_(std::move(bits)) {}

  int n_models() const { return n_models_; }
  int n_samples() const { return n_samples_; }
  bool member(int model, int sample) const {
    return bits_[static_cast<std::size_t>(model) * n_samples_ + sample] != 0;
  }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  int InCount(int sample) const {
    int count = 0;
    for (int i = 0; i < n_models_; ++i) count += member(i, sample) ? 1 : 0;
    return count;
  }

  // Pool rows model `model` trains on, ascending.
  std::vector<int> TrainSet(int model) const {
    std::vector<int> rows;
    for (int z = 0; z < n_samples_; ++z) {
      if (member(model, z)) rows.push_back(z);
    }
    return rows;
  }

  std::vector<int> HoldoutSet(int model) const {
    std::vector<int> rows;
    for (int z = 0; z < n_samples_; ++z) {
      if (!member(model, z)) rows.push_back(z);
    }
    return rows;
  }

  friend bool operator==(const MembershipPlan&, const MembershipPlan&) = default;

 private:
  int n_models_ = 0;
  int n_samples_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Draws every bit from Bernoulli(0.5). A sample whose column has fewer than
// two in-models or two out-models has its whole column redrawn; other
// columns are untouched.
inline absl::StatusOr<MembershipPlan> PlanMembership(int n_samples, int n_models,
                                                     std::uint64_t seed) {
  if (n_models < 2 * kMinPerSide) {
    return absl::InvalidArgumentError(absl::StrCat(
        "need at least ", 2 * kMinPerSide, " models to give every sample ",
        kMinPerSide, " in- and out-models, got ", n_models));
  }
  if (n_samples <= 0) return absl::InvalidArgumentError("pool size must be positive");

  Rng rng = MakeStream(seed, 0, kTagMembership);
  std::bernoulli_distribution coin(0.5);
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(n_models) * n_samples);
  for (int z = 0; z < n_samples; ++z) {
    while (true) {
      int in = 0;
      for (int i = 0; i < n_models; ++i) {
        const bool b = coin(rng);
        bits[static_cast<std::size_t>(i) * n_samples + z] = b ? 1 : 0;
        in += b ? 1 : 0;
      }
      if (in >= kMinPerSide && n_models - in >= kMinPerSide) break;
    }
  }
  return MembershipPlan(n_models, n_samples, std::move(bits));
}

}  // namespace miadyn::data

#endif  // MIADYN_DATA_MEMBERSHIP_HPP_
