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
#ifndef MIADYN_HARDNESS_CORRELATION_HPP_
#define MIADYN_HARDNESS_CORRELATION_HPP_

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace miadyn::hardness {

// Two-pass product-moment correlation. Undefined (nullopt) for fewer than 3
// points, mismatched lengths, or a constant input.
inline std::optional<double> Pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 3 || y.size() != n) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

struct CorrelationCell {
  std::string metric;
  std::string target;  // "alpha" or "v_alpha"
  std::string subset;  // "all", "vulnerable", "non_vulnerable"
  std::optional<double> r;
  std::size_t n = 0;
};

struct NamedSeries {
  std::string name;
  std::vector<double> values;
};

// Correlates every metric with every target over all samples and over the
// subsets split by final advantage against theta_vuln.
inline std::vector<CorrelationCell> CorrelationTable(const std::vector<NamedSeries>& metrics,
                                                     const std::vector<NamedSeries>& targets,
                                                     std::span<const double> final_alpha,
                                                     double theta_vuln) {
  struct Subset {
    const char* name;
    std::vector<std::size_t> rows;
  };
  Subset subsets[3] = {{"all", {}}, {"vulnerable", {}}, {"non_vulnerable", {}}};
  for (std::size_t z = 0; z < final_alpha.size(); ++z) {
    subsets[0].rows.push_back(z);
    subsets[final_alpha[z] > theta_vuln ? 1 : 2].rows.push_back(z);
  }
  std::vector<CorrelationCell> table;
  std::vector<double> x, y;
  for (const auto& metric : metrics) {
    for (const auto& target : targets) {
      for (const auto& subset : subsets) {
        x.clear();
        y.clear();
        for (std::size_t z : subset.rows) {
          x.push_back(metric.values[z]);
          y.push_back(target.values[z]);
        }
        table.push_back(CorrelationCell{metric.name, target.name, subset.name, Pearson(x, y),
                                        subset.rows.size()});
      }
    }
  }
  return table;
}

}  // namespace miadyn::hardness

#endif  // MIADYN_HARDNESS_CORRELATION_HPP_
