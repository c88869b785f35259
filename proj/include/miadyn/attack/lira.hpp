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
// Likelihood-ratio membership attack over a shadow population.
//
// For sample z at one checkpoint, every model i contributes an observation
// phi_i = logit(conf_i(z)). Model i's observation is scored against Gaussians
// fit to the in- and out-observations of the other models (leave-one-out),
// flagged as "member" when the log-likelihood ratio exceeds the threshold, and
// the flags are counted against the true membership bits to give the
// sample's (FPR, TPR) state.

#ifndef MIADYN_ATTACK_LIRA_HPP_
#define MIADYN_ATTACK_LIRA_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "miadyn/core/plane.hpp"

namespace miadyn::attack {

enum class VarianceMode { kGlobal, kPerSample };

inline std::string_view VarianceModeName(VarianceMode mode) {
  return mode == VarianceMode::kGlobal ? "global" : "per-sample";
}

inline absl::StatusOr<VarianceMode> ParseVarianceMode(std::string_view name) {
  if (name == "global") return VarianceMode::kGlobal;
  if (name == "per-sample") return VarianceMode::kPerSample;
  return absl::InvalidArgumentError(absl::StrCat("unknown variance mode '", std::string(name), "'"));
}

struct LiraConfig {
  VarianceMode variance_mode = VarianceMode::kGlobal;
  double threshold = 0.0;  // log-likelihood-ratio cutoff
  bool leave_one_out = true;

  friend bool operator==(const LiraConfig&, const LiraConfig&) = default;
};

inline constexpr double kVarianceFloor = 1e-12;

// phi = log(conf / (1 - conf)). Callers clamp conf away from 0 and 1.
inline double LogitScale(double conf) { return std::log(conf) - std::log1p(-conf); }

struct GaussianFit {
  double mean = 0.0;
  double variance = 1.0;
};

inline double GaussianLogPdf(double x, const GaussianFit& g) {
  const double d = x - g.mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * g.variance) + d * d / g.variance);
}

// Variances shared by every sample at one checkpoint.
struct PooledVariance {
  double in = 1.0;
  double out = 1.0;
};

namespace internal {

inline double Mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Unbiased variance; needs at least two values.
inline double SampleVariance(std::span<const double> xs, double mean) {
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(xs.size() - 1);
}

}  // namespace internal

// log N(target; in) - log N(target; out). In global mode the pooled variances
// must be supplied; per-sample mode fits them from the observations.
inline absl::StatusOr<double> LiraScore(double target_phi,
                                        std::span<const double> in_phis,
                                        std::span<const double> out_phis,
                                        const LiraConfig& cfg,
                                        std::optional<PooledVariance> pooled = std::nullopt) {
  if (in_phis.empty() || out_phis.empty()) {
    return absl::FailedPreconditionError("LiRA needs in- and out-observations");
  }
  GaussianFit in{internal::Mean(in_phis), 0.0};
  GaussianFit out{internal::Mean(out_phis), 0.0};
  if (cfg.variance_mode == VarianceMode::kGlobal) {
    if (!pooled) return absl::FailedPreconditionError("global mode needs pooled variances");
    in.variance = pooled->in;
    out.variance = pooled->out;
  } else {
    if (in_phis.size() < 2 || out_phis.size() < 2) {
      return absl::FailedPreconditionError(
          "per-sample variance needs two observations on each side");
    }
    in.variance = internal::SampleVariance(in_phis, in.mean);
    out.variance = internal::SampleVariance(out_phis, out.mean);
  }
  if (!(in.variance >= kVarianceFloor) || !(out.variance >= kVarianceFloor)) {
    return absl::FailedPreconditionError(absl::StrCat(
        "degenerate variance (in=", in.variance, ", out=", out.variance, ")"));
  }
  return GaussianLogPdf(target_phi, in) - GaussianLogPdf(target_phi, out);
}

// Counts flags against membership: TPR over members, FPR over non-members.
inline VulnerabilityState CountRates(std::span<const std::uint8_t> member,
                                     std::span<const std::uint8_t> flagged) {
  int in = 0, out = 0, tp = 0, fp = 0;
  for (std::size_t i = 0; i < member.size(); ++i) {
    if (member[i]) {
      ++in;
      tp += flagged[i] ? 1 : 0;
    } else {
      ++out;
      fp += flagged[i] ? 1 : 0;
    }
  }
  return VulnerabilityState{out > 0 ? static_cast<double>(fp) / out : 0.0,
                            in > 0 ? static_cast<double>(tp) / in : 0.0};
}

// One model's part in a sample's estimate.
struct ModelDecision {
  bool member = false;
  bool flagged = false;
  double score = 0.0;
};

struct SampleOutcome {
  std::vector<ModelDecision> decisions;  // indexed by model
  VulnerabilityState state;
};

// Scores each model's observation of one sample and counts the decisions.
// Leave-one-out means come from running sums; per-sample variances are refit
// on the remaining observations.
inline absl::StatusOr<SampleOutcome> EstimateState(std::span<const double> phis,
                                                   std::span<const std::uint8_t> member,
                                                   const LiraConfig& cfg,
                                                   std::optional<PooledVariance> pooled) {
  const std::size_t n = phis.size();
  if (member.size() != n) return absl::InvalidArgumentError("phis and bits differ in length");
  double sum_in = 0.0, sum_out = 0.0;
  int n_in = 0, n_out = 0;
  for (std::size_t i = 0; i < n; ++i) {
    (member[i] ? sum_in : sum_out) += phis[i];
    (member[i] ? n_in : n_out) += 1;
  }
  const int loo = cfg.leave_one_out ? 1 : 0;
  if (n_in - loo < 1 || n_out - loo < 1) {
    return absl::FailedPreconditionError(absl::StrCat(
        "sample has ", n_in, " in- and ", n_out, " out-models; too few to score"));
  }

  SampleOutcome outcome;
  outcome.decisions.resize(n);
  std::vector<double> in_rest, out_rest;
  std::vector<std::uint8_t> flagged(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool self_in = loo && member[i];
    const bool self_out = loo && !member[i];
    double score = 0.0;
    if (cfg.variance_mode == VarianceMode::kGlobal) {
      if (!pooled) return absl::FailedPreconditionError("global mode needs pooled variances");
      const GaussianFit in{(sum_in - (self_in ? phis[i] : 0.0)) / (n_in - (self_in ? 1 : 0)),
                           pooled->in};
      const GaussianFit out{(sum_out - (self_out ? phis[i] : 0.0)) / (n_out - (self_out ? 1 : 0)),
                            pooled->out};
      if (!(in.variance >= kVarianceFloor) || !(out.variance >= kVarianceFloor)) {
        return absl::FailedPreconditionError("degenerate pooled variance");
      }
      score = GaussianLogPdf(phis[i], in) - GaussianLogPdf(phis[i], out);
    } else {
      in_rest.clear();
      out_rest.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (loo && j == i) continue;
        (member[j] ? in_rest : out_rest).push_back(phis[j]);
      }
      auto s = LiraScore(phis[i], in_rest, out_rest, cfg);
      if (!s.ok()) return s.status();
      score = *s;
    }
    flagged[i] = score > cfg.threshold ? 1 : 0;
    outcome.decisions[i] = ModelDecision{member[i] != 0, flagged[i] != 0, score};
  }
  outcome.state = CountRates(member, flagged);
  return outcome;
}

// Pooled within-sample variances of the in- and out-observations at one
// checkpoint. `phis` and `member` are [model][sample] row-major.
inline absl::StatusOr<PooledVariance> PooledVariances(std::span<const double> phis,
                                                      std::span<const std::uint8_t> member,
                                                      int n_models, int n_samples) {
  double ss_in = 0.0, ss_out = 0.0;
  long long dof_in = 0, dof_out = 0;
  for (int z = 0; z < n_samples; ++z) {
    double s_in = 0.0, s_out = 0.0;
    int c_in = 0, c_out = 0;
    for (int i = 0; i < n_models; ++i) {
      const std::size_t k = static_cast<std::size_t>(i) * n_samples + z;
      (member[k] ? s_in : s_out) += phis[k];
      (member[k] ? c_in : c_out) += 1;
    }
    const double m_in = c_in > 0 ? s_in / c_in : 0.0;
    const double m_out = c_out > 0 ? s_out / c_out : 0.0;
    for (int i = 0; i < n_models; ++i) {
      const std::size_t k = static_cast<std::size_t>(i) * n_samples + z;
      const double d = phis[k] - (member[k] ? m_in : m_out);
      (member[k] ? ss_in : ss_out) += d * d;
    }
    if (c_in > 0) dof_in += c_in - 1;
    if (c_out > 0) dof_out += c_out - 1;
  }
  if (dof_in < 1 || dof_out < 1) {
    return absl::FailedPreconditionError(
        "global variance needs repeated in- and out-observations");
  }
  PooledVariance v{ss_in / static_cast<double>(dof_in), ss_out / static_cast<double>(dof_out)};
  if (!(v.in >= kVarianceFloor) || !(v.out >= kVarianceFloor)) {
    return absl::FailedPreconditionError(absl::StrCat(
        "degenerate pooled variance (in=", v.in, ", out=", v.out, ")"));
  }
  return v;
}

}  // namespace miadyn::attack

#endif  // MIADYN_ATTACK_LIRA_HPP_
