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
#include <numeric>

#include <fmt/format.h>

#include "meshsim/bench.hpp"
#include "meshsim/errors.hpp"

namespace meshsim::bench {

namespace {

using Eval = std::function<std::optional<double>(const ExperimentResult&)>;

struct Entry {
  ReferenceEntry ref;
  Eval eval;
};

Tolerance rel(double w) { return {Tolerance::Kind::Relative, w, 0.0}; }
Tolerance abs_tol(double w) { return {Tolerance::Kind::Absolute, w, 0.0}; }
Tolerance range(double lo, double hi) { return {Tolerance::Kind::Range, lo, hi}; }
Tolerance at_least(double lo) { return {Tolerance::Kind::AtLeast, lo, 0.0}; }
Tolerance at_most(double hi) { return {Tolerance::Kind::AtMost, hi, 0.0}; }
const Tolerance kHolds = range(1.0, 1.0);

Eval value_at(const char* series, std::initializer_list<std::pair<const char*, double>> conds,
              const char* col) {
  std::vector<std::pair<const char*, double>> c(conds);
  return [series, c, col](const ExperimentResult& r) -> std::optional<double> {
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
      if (series && r.str(i, "series") != series) continue;
      if (std::all_of(c.begin(), c.end(), [&](const auto& k) {
            const auto v = r.num(i, k.first);
            return v && *v == k.second;
          })) {
        if (auto v = r.num(i, col)) return v;
      }
    }
    return std::nullopt;
  };
}

/// (x, y) points of `series` sorted by x.
std::vector<std::pair<double, double>> curve(const ExperimentResult& r, const char* series_col,
                                             const char* series, const char* x, const char* y) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    if (series && r.str(i, series_col) != series) continue;
    const auto xv = r.num(i, x), yv = r.num(i, y);
    if (xv && yv) pts.emplace_back(*xv, *yv);
  }
  std::sort(pts.begin(), pts.end());
  return pts;
}

bool non_decreasing(const std::vector<std::pair<double, double>>& pts) {
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].second < pts[i - 1].second) return false;
  }
  return true;
}

std::optional<double> flag(bool v) { return v ? 1.0 : 0.0; }

// ---- bandwidth

std::optional<double> dma_plateau(const ExperimentResult& r) {
  const auto pts = curve(r, "method", "dma", "size_bytes", "bandwidth_gb_per_s");
  if (pts.empty() || pts.back().first < 16384) return std::nullopt;
  return pts.back().second;
}

std::optional<double> crossover(const ExperimentResult& r) {
  const auto dma = curve(r, "method", "dma", "size_bytes", "time_ns");
  const auto dw = curve(r, "method", "direct_write", "size_bytes", "time_ns");
  std::map<double, double> diff;  // dma minus direct, at sizes both curves have
  for (const auto& [s, t] : dma) diff[s] = t;
  std::map<double, double> both;
  for (const auto& [s, t] : dw) {
    if (diff.count(s)) both[s] = diff[s] - t;
  }
  if (both.size() < 2) return std::nullopt;
  auto prev = both.begin();
  if (prev->second < 0) return prev->first;
  for (auto it = std::next(both.begin()); it != both.end(); prev = it++) {
    if (it->second < 0) {
      // Both times are affine in size between samples, so interpolate linearly.
      const double d0 = prev->second, d1 = it->second;
      return prev->first + d0 / (d0 - d1) * (it->first - prev->first);
    }
  }
  return std::nullopt;
}

Eval monotone(const char* method) {
  return [method](const ExperimentResult& r) -> std::optional<double> {
    const auto bw = curve(r, "method", method, "size_bytes", "bandwidth_gb_per_s");
    const auto t = curve(r, "method", method, "size_bytes", "time_ns");
    if (bw.size() < 2) return std::nullopt;
    return flag(non_decreasing(bw) && non_decreasing(t));
  };
}

// ---- eLink

std::vector<std::size_t> writer_rows(const ExperimentResult& r, int writers) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    if (r.num(i, "writers") == static_cast<double>(writers)) out.push_back(i);
  }
  return out;
}

Eval four_writer(std::function<std::optional<double>(const std::map<std::pair<int, int>, double>&)> f) {
  return [f](const ExperimentResult& r) -> std::optional<double> {
    std::map<std::pair<int, int>, double> u;
    for (std::size_t i : writer_rows(r, 4)) {
      u[{static_cast<int>(*r.num(i, "core_row")), static_cast<int>(*r.num(i, "core_col"))}] =
          *r.num(i, "utilization_fraction");
    }
    if (u.size() != 4) return std::nullopt;
    return f(u);
  };
}

std::optional<double> zero_cores(const ExperimentResult& r) {
  const auto rows = writer_rows(r, 64);
  if (rows.empty()) return std::nullopt;
  return static_cast<double>(std::count_if(rows.begin(), rows.end(), [&](std::size_t i) {
    return r.num(i, "completed_iterations") == 0.0;
  }));
}

// ---- kernels

Eval all_exact() {
  return [](const ExperimentResult& r) -> std::optional<double> {
    bool any = false, ok = true;
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
      if (auto v = r.num(i, "exact")) {
        any = true;
        ok = ok && *v == 1.0;
      }
    }
    return any ? flag(ok) : std::nullopt;
  };
}

// ---- scaling

std::optional<double> weak_monotone(const ExperimentResult& r, const char* series) {
  const auto pts = curve(r, "series", series, "cores", "time_s");
  if (pts.size() < 2) return std::nullopt;
  return flag(non_decreasing(pts));
}

std::optional<double> weak_ratio(const ExperimentResult& r) {
  const auto t64 = value_at("stencil", {{"cores", 64}}, "time_s")(r);
  const auto t8 = value_at("stencil", {{"cores", 8}}, "time_s")(r);
  if (!t64 || !t8) return std::nullopt;
  return *t64 / *t8;
}

/// Stencil strong-scaling times keyed by grid area, then by core count.
std::map<double, std::map<double, double>> strong_times(const ExperimentResult& r) {
  std::map<double, std::map<double, double>> out;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    if (r.str(i, "series") != "stencil") continue;
    const auto gr = r.num(i, "grid_rows"), gc = r.num(i, "grid_cols"), c = r.num(i, "cores"),
               t = r.num(i, "time_s");
    if (gr && gc && c && t) out[*gr * *gc][*c] = *t;
  }
  return out;
}

std::optional<double> strong_doubling(const ExperimentResult& r) {
  const auto times = strong_times(r);
  if (times.empty()) return std::nullopt;
  const auto& largest = times.rbegin()->second;
  std::optional<double> worst;
  for (const auto& [c, t] : largest) {
    auto next = largest.find(2 * c);
    if (next == largest.end()) continue;
    const double s = t / next->second;
    worst = worst ? std::min(*worst, s) : s;
  }
  return worst;
}

std::optional<double> strong_size_monotone(const ExperimentResult& r) {
  const auto times = strong_times(r);
  if (times.size() < 2) return std::nullopt;
  std::map<double, double> last;  // core count -> speedup at the previous size
  bool ok = true;
  for (const auto& [area, by_cores] : times) {
    auto one = by_cores.find(1.0);
    if (one == by_cores.end()) continue;
    for (const auto& [c, t] : by_cores) {
      const double s = one->second / t;
      if (last.count(c) && s < last[c]) ok = false;
      last[c] = s;
    }
  }
  return flag(ok);
}

std::vector<Entry> build_table() {
  std::vector<Entry> t;
  auto add = [&](std::string id, const char* exp, std::string desc, std::string prov, double value,
                 std::string unit, Tolerance tol, bool mandatory, Eval eval) {
    t.push_back({{std::move(id), exp, std::move(desc), std::move(prov), value, std::move(unit), tol,
                  mandatory},
                 std::move(eval)});
  };

  // Amortized time per 4-byte store of an 80-byte direct write from (0,0).
  struct Pair {
    int r, c;
    double ns;
  };
  static constexpr Pair kTable[] = {{0, 1, 11.12}, {1, 0, 11.12}, {0, 2, 11.14}, {1, 1, 11.14},
                                    {1, 2, 11.19}, {3, 0, 11.19}, {0, 4, 11.38}, {1, 3, 11.38},
                                    {3, 3, 11.62}, {4, 4, 11.86}, {7, 7, 12.57}};
  for (const Pair& p : kTable) {
    add(fmt::format("latency.to_{}_{}", p.r, p.c), "latency",
        fmt::format("80-byte direct write (0,0)->({},{}), {} hops, per 4-byte transfer", p.r, p.c,
                    p.r + p.c),
        "latency-vs-distance table", p.ns, "ns", rel(0.05), true,
        value_at(nullptr, {{"dst_row", p.r}, {"dst_col", p.c}}, "time_per_transfer_ns"));
  }
  add("latency.spread", "latency", "per-transfer latency at 14 hops minus at 1 hop",
      "latency-vs-distance table, first and last rows", 12.57 - 11.12, "ns", rel(0.10), true,
      [](const ExperimentResult& r) -> std::optional<double> {
        const auto far = value_at(nullptr, {{"dst_row", 7}, {"dst_col", 7}}, "time_per_transfer_ns")(r);
        const auto near = value_at(nullptr, {{"dst_row", 0}, {"dst_col", 1}}, "time_per_transfer_ns")(r);
        if (!far || !near) return std::nullopt;
        return *far - *near;
      });

  add("bandwidth.dma_plateau", "bandwidth", "DMA bandwidth at the largest message, adjacent cores",
      "quoted large-message DMA rate", 2.0, "GB/s", rel(0.05), true, dma_plateau);
  add("bandwidth.crossover", "bandwidth", "message size above which DMA beats direct writes",
      "crossover read off the small-message latency figure", 500.0, "bytes", range(256, 1024), true,
      crossover);
  add("bandwidth.monotone_dma", "bandwidth", "DMA time and bandwidth non-decreasing in size",
      "bandwidth figure shape", 1.0, "bool", kHolds, true, monotone("dma"));
  add("bandwidth.monotone_direct", "bandwidth",
      "direct-write time and bandwidth non-decreasing in size", "bandwidth figure shape", 1.0,
      "bool", kHolds, true, monotone("direct_write"));

  add("elink.single_writer", "elink", "sustained off-chip write throughput, one writer",
      "quoted maximum off-chip write rate", 150.0, "MB/s", rel(0.05), true,
      value_at(nullptr, {{"writers", 1}}, "throughput_mb_per_s"));
  add("elink.four.strict_order", "elink", "4 writers have pairwise distinct utilizations",
      "4-writer utilization table", 1.0, "bool", kHolds, true,
      four_writer([](const auto& u) -> std::optional<double> {
        std::vector<double> v;
        for (const auto& [c, x] : u) v.push_back(x);
        std::sort(v.begin(), v.end());
        return flag(std::adjacent_find(v.begin(), v.end()) == v.end());
      }));
  add("elink.four.sum", "elink", "sum of the 4 writers' utilizations",
      "4-writer utilization table", 0.99, "fraction", at_least(0.98), true,
      four_writer([](const auto& u) -> std::optional<double> {
        double s = 0;
        for (const auto& [c, x] : u) s += x;
        return s;
      }));
  static constexpr Pair kFour[] = {{0, 0, 0.41}, {0, 1, 0.33}, {1, 0, 0.17}, {1, 1, 0.08}};
  for (const Pair& p : kFour) {
    add(fmt::format("elink.four.core_{}_{}", p.r, p.c), "elink",
        fmt::format("4-writer utilization of ({},{})", p.r, p.c), "4-writer utilization table",
        p.ns, "fraction", abs_tol(0.05), false,
        value_at(nullptr, {{"writers", 4}, {"core_row", p.r}, {"core_col", p.c}},
                 "utilization_fraction"));
  }
  add("elink.four.row0_above_row1", "elink", "both row-0 writers above both row-1 writers",
      "4-writer utilization table", 1.0, "bool", kHolds, false,
      four_writer([](const auto& u) -> std::optional<double> {
        return flag(std::min(u.at({0, 0}), u.at({0, 1})) > std::max(u.at({1, 0}), u.at({1, 1})));
      }));
  for (int row = 0; row < 4; ++row) {
    add(fmt::format("elink.sixtyfour.core_{}_7", row), "elink",
        fmt::format("64-writer utilization of exit-column core ({},7)", row),
        "64-writer utilization table", 0.187, "fraction", abs_tol(0.02), true,
        value_at(nullptr, {{"writers", 64}, {"core_row", row}, {"core_col", 7}},
                 "utilization_fraction"));
  }
  add("elink.sixtyfour.starved", "elink", "cores with zero completed blocks in 2 s, 64 writers",
      "64-writer utilization table", 24.0, "cores", at_least(20), true, zero_cores);

  add("stencil.single_core", "stencil", "80x20 block on one core",
      "single-core stencil band", 1.055, "GFLOPS", range(0.97, 1.14), true,
      value_at(nullptr, {{"cores", 1}, {"block_rows", 80}, {"block_cols", 20}}, "gflops"));
  add("stencil.no_comm", "stencil", "80x20 per core, 64 cores, no halo exchange",
      "quoted 64-core stencil results", 72.83, "GFLOPS", rel(0.10), true,
      value_at("nocomm", {{"cores", 64}, {"block_rows", 80}, {"block_cols", 20}}, "gflops"));
  add("stencil.comm", "stencil", "80x20 per core, 64 cores, with halo exchange",
      "quoted 64-core stencil results", 63.6, "GFLOPS", rel(0.15), true,
      value_at("comm", {{"cores", 64}, {"block_rows", 80}, {"block_cols", 20}}, "gflops"));
  add("stencil.exact", "stencil", "distributed result equals the reference bit for bit",
      "functional requirement", 1.0, "bool", kHolds, true, all_exact());

  static constexpr Pair kSingle[] = {{8, 0, 0.85}, {16, 0, 1.07}, {20, 0, 1.11}, {24, 0, 1.12},
                                     {32, 0, 1.15}};
  for (const Pair& p : kSingle) {
    add(fmt::format("matmul.single.{}", p.r), "matmul",
        fmt::format("{0}x{0} block product on one core", p.r), "single-core matmul table", p.ns,
        "GFLOPS", rel(0.05), true, value_at("single", {{"size", p.r}}, "gflops"));
  }
  struct Cannon {
    int p, block;
    double gflops;
  };
  static constexpr Cannon kCannon[] = {
      {2, 8, 1.25},   {2, 16, 3.12},  {2, 20, 3.58},  {2, 24, 3.84},  {2, 32, 4.06},
      {4, 8, 5.07},   {4, 16, 12.76}, {4, 20, 14.36}, {4, 24, 15.43}, {4, 32, 16.27},
      {8, 8, 20.30},  {8, 16, 51.41}, {8, 20, 57.62}, {8, 24, 62.17}, {8, 32, 65.32}};
  for (const Cannon& c : kCannon) {
    add(fmt::format("matmul.cannon.{}x{}.{}", c.p, c.p, c.block), "matmul",
        fmt::format("Cannon on {0}x{0} cores, {1}x{1} per core", c.p, c.block),
        fmt::format("on-chip Cannon table, {0}x{0} column", c.p), c.gflops, "GFLOPS", rel(0.10),
        c.p == 8, value_at("onchip", {{"cores", c.p * c.p}, {"block", c.block}}, "gflops"));
  }
  struct Paged {
    int n;
    double gflops, transfer;
    bool mandatory;
  };
  static constexpr Paged kPaged[] = {
      {512, 8.32, 0.872, true}, {1024, 8.52, 0.869, false}, {1536, 6.34, 0.891, false}};
  for (const Paged& p : kPaged) {
    add(fmt::format("matmul.offchip.{}", p.n), "matmul",
        fmt::format("{0}x{0} product paged through shared memory, 64 cores", p.n),
        "off-chip matmul table", p.gflops, "GFLOPS", rel(0.10), p.mandatory,
        value_at("offchip", {{"cores", 64}, {"size", p.n}}, "gflops"));
    add(fmt::format("matmul.offchip.{}.transfer_share", p.n), "matmul",
        fmt::format("share of time in shared-memory transfers, {0}x{0}", p.n),
        "off-chip matmul table", p.transfer, "fraction", abs_tol(0.03), p.mandatory,
        value_at("offchip", {{"cores", 64}, {"size", p.n}}, "transfer_fraction"));
  }
  add("matmul.ratio", "matmul", "transfer time per unit of compute time for one block pair",
      "published compute:transfer estimate", 6.5, "ratio", range(6.0, 7.5), true,
      value_at("ratio", {}, "transfer_per_compute"));
  add("matmul.exact", "matmul", "every product equals the reference bit for bit",
      "functional requirement", 1.0, "bool", kHolds, true, all_exact());

  add("weak.stencil.monotone", "weak_scaling", "stencil time non-decreasing in core count",
      "weak-scaling figure shape", 1.0, "bool", kHolds, true,
      [](const ExperimentResult& r) { return weak_monotone(r, "stencil"); });
  add("weak.stencil.ratio_64_8", "weak_scaling", "stencil time on 64 cores over time on 8",
      "weak-scaling figure shape", 1.0, "ratio", at_most(1.10), true, weak_ratio);
  add("weak.matmul.monotone", "weak_scaling", "Cannon time non-decreasing in core count",
      "weak-scaling figure shape", 1.0, "bool", kHolds, false,
      [](const ExperimentResult& r) { return weak_monotone(r, "matmul"); });
  add("strong.stencil.doubling", "strong_scaling",
      "smallest speedup per core doubling at the largest grid", "strong-scaling figure shape", 2.0,
      "ratio", at_least(1.9), true, strong_doubling);
  add("strong.stencil.size_monotone", "strong_scaling",
      "speedup at each core count non-decreasing in grid size", "strong-scaling figure shape", 1.0,
      "bool", kHolds, true, strong_size_monotone);
  return t;
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> t = build_table();
  return t;
}

std::string fmt_value(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e9) return fmt::format("{:.0f}", v);
  return fmt::format("{:.4g}", v);
}

}  // namespace

bool Tolerance::accepts(double m, double ref) const {
  if (!std::isfinite(m)) return false;
  switch (kind) {
    case Kind::Relative: return std::abs(m - ref) <= a * std::abs(ref) * (1 + 1e-12);
    case Kind::Absolute: return std::abs(m - ref) <= a * (1 + 1e-12);
    case Kind::Range: return m >= a && m <= b;
    case Kind::AtLeast: return m >= a;
    case Kind::AtMost: return m <= a;
  }
  return false;
}

std::string Tolerance::describe() const {
  switch (kind) {
    case Kind::Relative: return fmt::format("+-{}%", fmt_value(a * 100));
    case Kind::Absolute: return fmt::format("+-{}", fmt_value(a));
    case Kind::Range:
      return a == b ? std::string("must hold") : fmt::format("[{}, {}]", fmt_value(a), fmt_value(b));
    case Kind::AtLeast: return fmt::format(">= {}", fmt_value(a));
    case Kind::AtMost: return fmt::format("<= {}", fmt_value(a));
  }
  return "";
}

const std::vector<ReferenceEntry>& reference_table() {
  static const std::vector<ReferenceEntry> refs = [] {
    std::vector<ReferenceEntry> v;
    for (const Entry& e : entries()) v.push_back(e.ref);
    return v;
  }();
  return refs;
}

const ReferenceEntry& reference(std::string_view id) {
  for (const ReferenceEntry& r : reference_table()) {
    if (r.id == id) return r;
  }
  throw UsageError("no reference entry " + std::string(id));
}

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "FAIL";
    case Verdict::Skipped: return "skipped";
  }
  return "";
}

std::vector<CheckOutcome> evaluate(const std::vector<ExperimentResult>& results) {
  std::vector<CheckOutcome> out;
  const auto& table = reference_table();
  for (std::size_t k = 0; k < table.size(); ++k) {
    CheckOutcome c;
    c.ref = &table[k];
    for (const ExperimentResult& r : results) {
      if (r.experiment != c.ref->experiment) continue;
      if ((c.measured = entries()[k].eval(r))) break;
    }
    if (c.measured) {
      c.verdict = c.ref->tolerance.accepts(*c.measured, c.ref->value) ? Verdict::Pass : Verdict::Fail;
    }
    out.push_back(c);
  }
  return out;
}

Report make_report(const std::vector<ExperimentResult>& results) { return {evaluate(results)}; }

bool Report::mandatory_ok() const {
  return std::none_of(checks.begin(), checks.end(), [](const CheckOutcome& c) {
    return c.ref->mandatory && c.verdict == Verdict::Fail;
  });
}

int Report::count(Verdict v) const {
  return static_cast<int>(
      std::count_if(checks.begin(), checks.end(), [v](const CheckOutcome& c) { return c.verdict == v; }));
}

std::string Report::to_text() const {
  std::size_t w = 2;
  for (const auto& c : checks) w = std::max(w, c.ref->id.size());
  std::string out = fmt::format("{:<8} {:<{}} {:>12} {:>12} {:<12} {:<9} {}\n", "verdict", "check",
                                w, "measured", "reference", "tolerance", "mandatory", "source");
  for (const auto& c : checks) {
    out += fmt::format("{:<8} {:<{}} {:>12} {:>12} {:<12} {:<9} {}\n", verdict_name(c.verdict),
                       c.ref->id, w, c.measured ? fmt_value(*c.measured) : "-",
                       fmt_value(c.ref->value), c.ref->tolerance.describe(),
                       c.ref->mandatory ? "yes" : "no", c.ref->provenance);
  }
  int mand_fail = 0;
  for (const auto& c : checks) mand_fail += c.ref->mandatory && c.verdict == Verdict::Fail;
  out += fmt::format("\n{} passed, {} failed ({} mandatory), {} skipped\n", count(Verdict::Pass),
                     count(Verdict::Fail), mand_fail, count(Verdict::Skipped));
  return out;
}

std::string Report::to_csv() const {
  ExperimentResult t;
  t.columns = {"check",  "experiment", "verdict",   "mandatory", "measured",
               "reference", "unit",   "tolerance", "description", "provenance"};
  for (const auto& c : checks) {
    t.rows.push_back({c.ref->id, c.ref->experiment, std::string(verdict_name(c.verdict)),
                      std::int64_t{c.ref->mandatory}, c.measured ? Cell{*c.measured} : Cell{},
                      c.ref->value, c.ref->unit, c.ref->tolerance.describe(),
                      c.ref->description, c.ref->provenance});
  }
  return bench::to_csv(t);
}

}  // namespace meshsim::bench
