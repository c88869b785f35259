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
// SVG rendering of vulnerability planes, metric curves and grouped
// histograms. Coordinates are printed with fixed precision, so identical
// input gives identical bytes.

#ifndef MIADYN_REPORT_SVG_HPP_
#define MIADYN_REPORT_SVG_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/strings/str_cat.h"
#include "miadyn/core/plane.hpp"

namespace miadyn::report {

namespace internal {

inline std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  std::string s = buf;
  return s == "-0.00" ? "0.00" : s;
}

inline std::string Escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline constexpr std::string_view kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

inline std::string_view Color(std::size_t i) {
  return kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
}

inline std::string Header(double width, double height) {
  return absl::StrCat("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n",
                      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"", Num(width),
                      "\" height=\"", Num(height), "\" viewBox=\"0 0 ", Num(width), " ",
                      Num(height), "\" font-family=\"sans-serif\" font-size=\"12\">\n",
                      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
}

inline std::string Text(double x, double y, std::string_view text, std::string_view anchor,
                        std::string_view extra = "") {
  return absl::StrCat("<text x=\"", Num(x), "\" y=\"", Num(y), "\" text-anchor=\"",
                      std::string(anchor), "\"", std::string(extra), ">", Escape(text),
                      "</text>\n");
}

inline std::string Line(double x1, double y1, double x2, double y2, std::string_view style) {
  return absl::StrCat("<line x1=\"", Num(x1), "\" y1=\"", Num(y1), "\" x2=\"", Num(x2),
                      "\" y2=\"", Num(y2), "\" ", std::string(style), "/>\n");
}

// Bin counts over [lo, hi]; the top edge falls in the last bin.
inline std::vector<int> Histogram(std::span<const double> values, int bins, double lo, double hi) {
  std::vector<int> counts(static_cast<std::size_t>(bins), 0);
  const double width = hi > lo ? (hi - lo) / bins : 1.0;
  for (double v : values) {
    int b = static_cast<int>(std::floor((v - lo) / width));
    counts[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))] += 1;
  }
  return counts;
}

}  // namespace internal

struct PlaneOptions {
  std::string title;
  std::vector<std::vector<VulnerabilityState>> overlays;  // one polyline each
  bool marginals = true;
  int marginal_bins = 20;
};

// Unit-square FPR/TPR scatter with the non-vulnerable diagonal, optional
// trajectory polylines, and optional marginal histograms along both axes.
inline std::string RenderPlane(std::span<const VulnerabilityState> states,
                               const PlaneOptions& options = {}) {
  using internal::Num;
  constexpr double kSide = 400.0;
  constexpr double kLeft = 60.0;
  constexpr double kStrip = 60.0;
  const double top = options.marginals ? 40.0 + kStrip : 40.0;
  const double width = kLeft + kSide + (options.marginals ? kStrip : 0.0) + 20.0;
  const double height = top + kSide + 50.0;
  auto px = [&](double fpr) { return kLeft + fpr * kSide; };
  auto py = [&](double tpr) { return top + (1.0 - tpr) * kSide; };

  std::string svg = internal::Header(width, height);
  if (!options.title.empty()) svg += internal::Text(width / 2.0, 20.0, options.title, "middle");
  absl::StrAppend(&svg, "<rect x=\"", Num(kLeft), "\" y=\"", Num(top), "\" width=\"", Num(kSide),
                  "\" height=\"", Num(kSide), "\" fill=\"none\" stroke=\"black\"/>\n");
  for (int t = 0; t <= 4; ++t) {
    const double v = t / 4.0;
    svg += internal::Line(px(v), py(0.0), px(v), py(0.0) + 5.0, "stroke=\"black\"");
    svg += internal::Text(px(v), py(0.0) + 18.0, Num(v), "middle");
    svg += internal::Line(px(0.0) - 5.0, py(v), px(0.0), py(v), "stroke=\"black\"");
    svg += internal::Text(px(0.0) - 8.0, py(v) + 4.0, Num(v), "end");
  }
  svg += internal::Text(px(0.5), py(0.0) + 38.0, "FPR", "middle");
  svg += internal::Text(16.0, py(0.5), "TPR", "middle",
                        absl::StrCat(" transform=\"rotate(-90 16.00 ", Num(py(0.5)), ")\""));
  svg += internal::Line(px(0.0), py(0.0), px(1.0), py(1.0),
                        "stroke=\"gray\" stroke-dasharray=\"6 4\" class=\"diagonal\"");

  for (std::size_t i = 0; i < options.overlays.size(); ++i) {
    const auto& path = options.overlays[i];
    if (path.empty()) continue;
    std::string pts;
    for (const auto& s : path) {
      if (!pts.empty()) pts += " ";
      absl::StrAppend(&pts, Num(px(s.fpr)), ",", Num(py(s.tpr)));
    }
    absl::StrAppend(&svg, "<polyline class=\"overlay\" points=\"", pts,
                    "\" fill=\"none\" stroke=\"", std::string(internal::Color(i + 1)),
                    "\" stroke-width=\"1.5\"/>\n");
  }
  for (const auto& s : states) {
    absl::StrAppend(&svg, "<circle class=\"marker\" cx=\"", Num(px(s.fpr)), "\" cy=\"",
                    Num(py(s.tpr)), "\" r=\"2.00\" fill=\"", std::string(internal::Color(0)),
                    "\" fill-opacity=\"0.5\"/>\n");
  }

  if (options.marginals && !states.empty()) {
    const int bins = std::max(1, options.marginal_bins);
    std::vector<double> fprs, tprs;
    for (const auto& s : states) {
      fprs.push_back(s.fpr);
      tprs.push_back(s.tpr);
    }
    const auto hf = internal::Histogram(fprs, bins, 0.0, 1.0);
    const auto ht = internal::Histogram(tprs, bins, 0.0, 1.0);
    const int peak = std::max(*std::max_element(hf.begin(), hf.end()),
                              *std::max_element(ht.begin(), ht.end()));
    const double bin = kSide / bins;
    for (int b = 0; b < bins; ++b) {
      const double hx = (kStrip - 5.0) * hf[static_cast<std::size_t>(b)] / peak;
      absl::StrAppend(&svg, "<rect class=\"marginal\" x=\"", Num(kLeft + b * bin), "\" y=\"",
                      Num(top - 5.0 - hx), "\" width=\"", Num(bin), "\" height=\"", Num(hx),
                      "\" fill=\"gray\"/>\n");
      const double hy = (kStrip - 5.0) * ht[static_cast<std::size_t>(b)] / peak;
      absl::StrAppend(&svg, "<rect class=\"marginal\" x=\"", Num(kLeft + kSide + 5.0), "\" y=\"",
                      Num(top + kSide - (b + 1) * bin), "\" width=\"", Num(hy), "\" height=\"",
                      Num(bin), "\" fill=\"gray\"/>\n");
    }
  }
  svg += "</svg>\n";
  return svg;
}

enum class CurveKind { kExposure, kTransition, kEntropy, kGeneric };

// One labeled polyline. Missing values break the line.
struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<std::optional<double>> y;
};

struct CurveOptions {
  std::string title;
  std::string x_label = "epoch";
  std::string y_label;
  std::optional<double> y_min;  // defaults depend on the kind
  std::optional<double> y_max;
};

struct Rendered {
  std::string svg;
  std::vector<std::string> warnings;
};

// Line chart over an epoch axis. Exposure and transition curves are plotted
// on [0, 1]; other kinds fit the data unless a range is given. Values outside
// the range are clipped and reported.
inline Rendered RenderCurves(std::span<const Series> series, CurveKind kind,
                             const CurveOptions& options = {}) {
  using internal::Num;
  Rendered out;
  double x_lo = 0.0, x_hi = 1.0, d_lo = 0.0, d_hi = 1.0;
  bool seen_x = false, seen_y = false;
  for (const auto& s : series) {
    for (double x : s.x) {
      x_lo = seen_x ? std::min(x_lo, x) : x;
      x_hi = seen_x ? std::max(x_hi, x) : x;
      seen_x = true;
    }
    for (const auto& y : s.y) {
      if (!y) continue;
      d_lo = seen_y ? std::min(d_lo, *y) : *y;
      d_hi = seen_y ? std::max(d_hi, *y) : *y;
      seen_y = true;
    }
  }
  if (x_hi <= x_lo) x_hi = x_lo + 1.0;
  const bool unit = kind == CurveKind::kExposure || kind == CurveKind::kTransition;
  double y_lo = options.y_min.value_or(unit ? 0.0 : std::min(0.0, d_lo));
  double y_hi = options.y_max.value_or(unit ? 1.0 : d_hi);
  if (y_hi <= y_lo) y_hi = y_lo + 1.0;

  constexpr double kLeft = 70.0, kTop = 40.0, kW = 480.0, kH = 300.0, kLegend = 160.0;
  const double width = kLeft + kW + kLegend;
  const double height = kTop + kH + 60.0;
  auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * kW; };
  auto py = [&](double y) { return kTop + (1.0 - (y - y_lo) / (y_hi - y_lo)) * kH; };

  std::string svg = internal::Header(width, height);
  if (!options.title.empty()) svg += internal::Text(kLeft + kW / 2.0, 22.0, options.title, "middle");
  absl::StrAppend(&svg, "<rect x=\"", Num(kLeft), "\" y=\"", Num(kTop), "\" width=\"", Num(kW),
                  "\" height=\"", Num(kH), "\" fill=\"none\" stroke=\"black\"/>\n");
  for (int t = 0; t <= 4; ++t) {
    const double xv = x_lo + (x_hi - x_lo) * t / 4.0;
    const double yv = y_lo + (y_hi - y_lo) * t / 4.0;
    svg += internal::Line(px(xv), kTop + kH, px(xv), kTop + kH + 5.0, "stroke=\"black\"");
    svg += internal::Text(px(xv), kTop + kH + 18.0, Num(xv), "middle");
    svg += internal::Line(kLeft - 5.0, py(yv), kLeft, py(yv), "stroke=\"black\"");
    svg += internal::Text(kLeft - 8.0, py(yv) + 4.0, Num(yv), "end");
  }
  svg += internal::Text(kLeft + kW / 2.0, kTop + kH + 40.0, options.x_label, "middle");
  if (!options.y_label.empty()) {
    svg += internal::Text(18.0, kTop + kH / 2.0, options.y_label, "middle",
                          absl::StrCat(" transform=\"rotate(-90 18.00 ", Num(kTop + kH / 2.0), ")\""));
  }

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const std::string color(internal::Color(i));
    int clipped = 0;
    std::vector<std::string> segments(1);
    const std::size_t n = std::min(s.x.size(), s.y.size());
    for (std::size_t k = 0; k < n; ++k) {
      if (!s.y[k]) {
        if (!segments.back().empty()) segments.emplace_back();
        continue;
      }
      double y = *s.y[k];
      if (y < y_lo || y > y_hi) {
        ++clipped;
        y = std::clamp(y, y_lo, y_hi);
      }
      if (!segments.back().empty()) segments.back() += " ";
      absl::StrAppend(&segments.back(), Num(px(s.x[k])), ",", Num(py(y)));
    }
    for (const auto& seg : segments) {
      if (seg.empty()) continue;
      absl::StrAppend(&svg, "<polyline class=\"series\" points=\"", seg,
                      "\" fill=\"none\" stroke=\"", color, "\" stroke-width=\"2\"/>\n");
    }
    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(i);
    svg += internal::Line(kLeft + kW + 12.0, ly - 4.0, kLeft + kW + 32.0, ly - 4.0,
                          absl::StrCat("stroke=\"", color, "\" stroke-width=\"2\""));
    svg += internal::Text(kLeft + kW + 38.0, ly, s.label, "start", " class=\"legend\"");
    if (clipped > 0) {
      out.warnings.push_back(absl::StrCat(options.title.empty() ? "curve" : options.title, ": ",
                                          clipped, " value(s) of series '", s.label,
                                          "' outside [", Num(y_lo), ", ", Num(y_hi),
                                          "] were clipped"));
    }
  }
  svg += "</svg>\n";
  out.svg = std::move(svg);
  return out;
}

struct HistogramGroup {
  std::string label;
  std::vector<double> values;
};

struct HistogramOptions {
  std::string title;
  std::string x_label;
  int bins = 20;
};

// Side-by-side bars per bin for each group over the pooled value range.
inline std::string RenderHistograms(std::span<const HistogramGroup> groups,
                                    const HistogramOptions& options = {}) {
  using internal::Num;
  const int bins = std::max(1, options.bins);
  double lo = 0.0, hi = 1.0;
  bool seen = false;
  for (const auto& g : groups) {
    for (double v : g.values) {
      lo = seen ? std::min(lo, v) : v;
      hi = seen ? std::max(hi, v) : v;
      seen = true;
    }
  }
  if (hi <= lo) hi = lo + 1.0;
  std::vector<std::vector<int>> counts;
  int peak = 1;
  for (const auto& g : groups) {
    counts.push_back(internal::Histogram(g.values, bins, lo, hi));
    for (int c : counts.back()) peak = std::max(peak, c);
  }

  constexpr double kLeft = 60.0, kTop = 40.0, kW = 480.0, kH = 260.0, kLegend = 160.0;
  const double width = kLeft + kW + kLegend;
  const double height = kTop + kH + 60.0;
  std::string svg = internal::Header(width, height);
  if (!options.title.empty()) svg += internal::Text(kLeft + kW / 2.0, 22.0, options.title, "middle");
  absl::StrAppend(&svg, "<rect x=\"", Num(kLeft), "\" y=\"", Num(kTop), "\" width=\"", Num(kW),
                  "\" height=\"", Num(kH), "\" fill=\"none\" stroke=\"black\"/>\n");
  for (int t = 0; t <= 4; ++t) {
    const double xv = lo + (hi - lo) * t / 4.0;
    const double x = kLeft + kW * t / 4.0;
    svg += internal::Line(x, kTop + kH, x, kTop + kH + 5.0, "stroke=\"black\"");
    svg += internal::Text(x, kTop + kH + 18.0, Num(xv), "middle");
    const double y = kTop + kH * (1.0 - t / 4.0);
    svg += internal::Text(kLeft - 8.0, y + 4.0, absl::StrCat(peak * t / 4), "end");
  }
  if (!options.x_label.empty()) {
    svg += internal::Text(kLeft + kW / 2.0, kTop + kH + 40.0, options.x_label, "middle");
  }
  const double bin_w = kW / bins;
  const double bar_w = groups.empty() ? bin_w : bin_w / static_cast<double>(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const std::string color(internal::Color(g));
    for (int b = 0; b < bins; ++b) {
      const int c = counts[g][static_cast<std::size_t>(b)];
      if (c == 0) continue;
      const double h = kH * c / peak;
      absl::StrAppend(&svg, "<rect class=\"bar\" x=\"", Num(kLeft + b * bin_w + g * bar_w),
                      "\" y=\"", Num(kTop + kH - h), "\" width=\"", Num(bar_w), "\" height=\"",
                      Num(h), "\" fill=\"", color, "\" fill-opacity=\"0.7\"/>\n");
    }
    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(g);
    absl::StrAppend(&svg, "<rect x=\"", Num(kLeft + kW + 12.0), "\" y=\"", Num(ly - 10.0),
                    "\" width=\"12.00\" height=\"12.00\" fill=\"", color, "\"/>\n");
    svg += internal::Text(kLeft + kW + 30.0, ly, groups[g].label, "start", " class=\"legend\"");
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace miadyn::report

#endif  // MIADYN_REPORT_SVG_HPP_
