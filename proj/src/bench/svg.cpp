/*
 * Copyright 2026 The meshsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include <fmt/format.h>

#include "meshsim/bench.hpp"

namespace meshsim::bench {

namespace {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> pts;
};

struct Chart {
  std::string title, xlabel, ylabel;
  bool log_x = false;
  std::vector<Series> series;
};

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      default: o += c;
    }
  }
  return o;
}

std::string render(const Chart& c) {
  constexpr double W = 640, H = 420, L = 70, R = 170, T = 40, B = 55;
  double x0 = INFINITY, x1 = -INFINITY, y1 = 0;
  auto fx = [&](double x) { return c.log_x ? std::log2(x) : x; };
  for (const auto& s : c.series) {
    for (auto [x, y] : s.pts) {
      x0 = std::min(x0, fx(x));
      x1 = std::max(x1, fx(x));
      y1 = std::max(y1, y);
    }
  }
  if (!(x1 > x0)) x1 = x0 + 1;
  if (y1 <= 0) y1 = 1;
  y1 *= 1.08;
  auto px = [&](double x) { return L + (fx(x) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - y / y1 * (H - T - B); };

  std::string o = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
      W, H, (W - R + L) / 2, escape(c.title));
  o += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", L,
                   H - B, W - R);
  o += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", L, T,
                   H - B);
  for (int i = 0; i <= 5; ++i) {
    const double y = y1 * i / 5;
    o += fmt::format(
        "<line x1=\"{0}\" y1=\"{1:.1f}\" x2=\"{2}\" y2=\"{1:.1f}\" stroke=\"#ddd\"/>"
        "<text x=\"{3}\" y=\"{4:.1f}\" text-anchor=\"end\">{5:.3g}</text>\n",
        L, py(y), W - R, L - 6, py(y) + 4, y);
  }
  for (int i = 0; i <= 6; ++i) {
    const double xv = x0 + (x1 - x0) * i / 6;
    const double label = c.log_x ? std::exp2(xv) : xv;
    o += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{:.4g}</text>\n",
                     L + (xv - x0) / (x1 - x0) * (W - L - R), H - B + 18, label);
  }
  o += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", (W - R + L) / 2,
                   H - 12, escape(c.xlabel));
  o += fmt::format(
      "<text x=\"16\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0})\">{1}</text>\n",
      (H - B + T) / 2, escape(c.ylabel));
  for (std::size_t k = 0; k < c.series.size(); ++k) {
    const auto& s = c.series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    std::string pts;
    for (auto [x, y] : s.pts) pts += fmt::format("{:.1f},{:.1f} ", px(x), py(y));
    o += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n",
                     color, pts);
    for (auto [x, y] : s.pts) {
      o += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"2.5\" fill=\"{}\"/>\n", px(x), py(y),
                       color);
    }
    const double ly = T + 16 + 18.0 * static_cast<double>(k);
    o += fmt::format(
        "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"2\"/>"
        "<text x=\"{4}\" y=\"{5}\">{6}</text>\n",
        W - R + 12, ly, W - R + 32, color, W - R + 38, ly + 4, escape(s.name));
  }
  return o + "</svg>\n";
}

/// Groups rows by the string key and collects sorted (x, y) points.
std::vector<Series> group(const ExperimentResult& r, const std::function<std::string(std::size_t)>& key,
                          const char* x, const std::function<std::optional<double>(std::size_t)>& y) {
  std::map<std::string, Series> by;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto xv = r.num(i, x);
    const auto yv = y(i);
    if (!xv || !yv) continue;
    const std::string k = key(i);
    if (!by.count(k)) {
      order.push_back(k);
      by[k].name = k;
    }
    by[k].pts.emplace_back(*xv, *yv);
  }
  std::vector<Series> out;
  for (const auto& k : order) {
    auto s = by[k];
    std::sort(s.pts.begin(), s.pts.end());
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

std::optional<std::string> to_svg(const ExperimentResult& r) {
  Chart c;
  auto col = [&](const char* name) { return [&r, name](std::size_t i) { return r.num(i, name); }; };
  if (r.experiment == "bandwidth") {
    c = {"Bandwidth between adjacent cores", "message size (bytes)", "bandwidth (GB/s)", true, {}};
    c.series = group(r, [&](std::size_t i) { return r.str(i, "method"); }, "size_bytes",
                     col("bandwidth_gb_per_s"));
  } else if (r.experiment == "latency") {
    c = {"Latency vs distance, 80-byte direct write", "distance (hops)",
         "time per 4-byte transfer (ns)", false, {}};
    c.series = group(r, [](std::size_t) { return std::string("direct_write"); }, "distance_hops",
                     col("time_per_transfer_ns"));
  } else if (r.experiment == "elink") {
    c = {"Off-chip write share per core", "core index (row-major)", "utilization (fraction)", false,
         {}};
    double width = 1;
    for (std::size_t i = 0; i < r.rows.size(); ++i) width = std::max(width, r.num(i, "core_col").value_or(0) + 1);
    ExperimentResult idx = r;
    idx.columns.push_back("core_index");
    for (std::size_t i = 0; i < idx.rows.size(); ++i) {
      const auto row = r.num(i, "core_row"), cc = r.num(i, "core_col");
      idx.rows[i].push_back(row && cc ? Cell{*row * width + *cc} : Cell{});
    }
    c.series = group(idx, [&](std::size_t i) { return r.str(i, "writers") + " writers"; },
                     "core_index", [&](std::size_t i) { return r.num(i, "utilization_fraction"); });
  } else if (r.experiment == "matmul") {
    c = {"Cannon throughput by block size", "block size per core", "GFLOPS", false, {}};
    c.series = group(
        r,
        [&](std::size_t i) { return r.str(i, "series") + " " + r.str(i, "cores") + " cores"; },
        "block", [&](std::size_t i) -> std::optional<double> {
          const std::string s = r.str(i, "series");
          if (s != "single" && s != "onchip") return std::nullopt;
          return r.num(i, "gflops");
        });
  } else if (r.experiment == "weak_scaling") {
    c = {"Weak scaling", "cores", "time relative to one core", true, {}};
    std::map<std::string, double> base;
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
      if (r.num(i, "cores") == 1.0) base[r.str(i, "series")] = *r.num(i, "time_s");
    }
    c.series = group(r, [&](std::size_t i) { return r.str(i, "series"); }, "cores",
                     [&](std::size_t i) -> std::optional<double> {
                       const auto t = r.num(i, "time_s");
                       const auto b = base.find(r.str(i, "series"));
                       if (!t || b == base.end()) return std::nullopt;
                       return *t / b->second;
                     });
  } else if (r.experiment == "strong_scaling") {
    c = {"Strong scaling", "cores", "speedup", true, {}};
    c.series = group(
        r,
        [&](std::size_t i) {
          return r.str(i, "series") + " " + r.str(i, "grid_rows") + "x" + r.str(i, "grid_cols");
        },
        "cores", col("speedup"));
  } else {
    return std::nullopt;
  }
  if (c.series.empty()) return std::nullopt;
  return render(c);
}

}  // namespace meshsim::bench
