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
#include <future>
#include <numeric>
#include <random>
#include <string>

#include "meshsim/bench.hpp"
#include "meshsim/dma.hpp"
#include "meshsim/elink.hpp"
#include "meshsim/errors.hpp"
#include "meshsim/matmul.hpp"
#include "meshsim/mesh.hpp"
#include "meshsim/runtime.hpp"
#include "meshsim/stencil.hpp"

namespace meshsim::bench {

namespace {

constexpr Kind kKinds[] = {Kind::Bandwidth, Kind::Latency,     Kind::ELink,        Kind::Stencil,
                           Kind::Matmul,    Kind::WeakScaling, Kind::StrongScaling};
constexpr std::string_view kNames[] = {"bandwidth", "latency",      "elink",         "stencil",
                                       "matmul",    "weak_scaling", "strong_scaling"};

// ---------------------------------------------------------------- transfers

constexpr std::uint32_t kSendBuffer = 0x2000;
constexpr std::uint32_t kRecvBuffer = 0x4000;
constexpr std::uint64_t kChunk = 4096;  // largest piece that is sent from one buffer

Task direct_sender(Ctx& ctx, Coord dst, std::uint64_t chunk, std::uint64_t reps, double* out) {
  const std::vector<std::uint8_t> buf(chunk, 0x5A);
  const double t0 = ctx.now();
  for (std::uint64_t i = 0; i < reps; ++i) co_await ctx.write(ctx.global(dst, kRecvBuffer), buf);
  *out = std::max(ctx.now(), ctx.last_write_visible()) - t0;
}

Task dma_sender(Ctx& ctx, Coord dst, std::uint64_t chunk, std::uint64_t reps, double* out) {
  // Longer messages replay the same source buffer: one 2D descriptor with zero strides.
  const int word = chunk % 8 == 0 ? 8 : 4;
  const DmaDescriptor d =
      DmaDescriptor::copy_2d(ctx.global(kSendBuffer), ctx.global(dst, kRecvBuffer),
                             static_cast<std::uint32_t>(reps), chunk, 0, 0, word);
  const double t0 = ctx.now();
  co_await ctx.dma_start(d);
  *out = ctx.now() - t0;
}

/// Simulated cycles to move `bytes` from (0,0) to `dst`.
double simulate_transfer(const MeshConfig& cfg, TransferMethod m, Coord dst, std::uint64_t bytes) {
  Simulator sim(cfg);
  const std::uint64_t chunk = std::gcd(bytes, kChunk);
  const std::uint64_t reps = bytes / chunk;
  double cycles = 0.0;
  host_run(sim, Workgroup{{0, 0}, 1, 1}, [&](Ctx& ctx) {
    return m == TransferMethod::Dma ? dma_sender(ctx, dst, chunk, reps, &cycles)
                                    : direct_sender(ctx, dst, chunk, reps, &cycles);
  });
  return cycles;
}

std::vector<std::uint64_t> bandwidth_sizes() {
  std::vector<std::uint64_t> s;
  for (std::uint64_t b = 4; b <= 65536; b *= 2) s.push_back(b);
  for (std::uint64_t b = 12; b <= 49152; b *= 2) s.push_back(b);
  std::sort(s.begin(), s.end());
  return s;
}

ExperimentResult run_bandwidth(const ExperimentSpec& spec, const MeshConfig& cfg) {
  ExperimentResult r;
  r.columns = {"experiment", "method", "size_bytes", "time_ns", "bandwidth_gb_per_s"};
  const std::vector<std::uint64_t> sizes =
      spec.size ? std::vector<std::uint64_t>{static_cast<std::uint64_t>(*spec.size)}
                : bandwidth_sizes();
  for (TransferMethod m : {TransferMethod::Dma, TransferMethod::DirectWrite}) {
    for (std::uint64_t b : sizes) {
      const double ns = cfg.cycles_to_ns(simulate_transfer(cfg, m, {0, 1}, b));
      r.rows.push_back({"bandwidth", m == TransferMethod::Dma ? "dma" : "direct_write",
                        static_cast<std::int64_t>(b), ns, static_cast<double>(b) / ns});
    }
  }
  return r;
}

ExperimentResult run_latency(const ExperimentSpec&, const MeshConfig& cfg) {
  static constexpr Coord kPairs[] = {{0, 1}, {1, 0}, {0, 2}, {1, 1}, {1, 2}, {3, 0},
                                     {0, 4}, {1, 3}, {3, 3}, {4, 4}, {7, 7}};
  constexpr std::uint64_t kBytes = 80;
  ExperimentResult r;
  r.columns = {"experiment",    "src_row",       "src_col", "dst_row",
               "dst_col",       "distance_hops", "message_bytes", "time_ns",
               "time_per_transfer_ns"};
  for (const Coord& d : kPairs) {
    if (d.row >= cfg.rows || d.col >= cfg.cols) continue;
    const double ns = cfg.cycles_to_ns(simulate_transfer(cfg, TransferMethod::DirectWrite, d, kBytes));
    r.rows.push_back({"latency", std::int64_t{0}, std::int64_t{0}, std::int64_t{d.row},
                      std::int64_t{d.col}, std::int64_t{manhattan_distance({0, 0}, d)},
                      static_cast<std::int64_t>(kBytes), ns, ns / (kBytes / 4)});
  }
  return r;
}

// ---------------------------------------------------------------- eLink

constexpr std::uint64_t kELinkBlock = 2048;
constexpr double kELinkSeconds = 2.0;

std::vector<Coord> writer_set(int n, const MeshConfig& cfg) {
  std::vector<Coord> w;
  if (n == 4 && cfg.rows >= 2 && cfg.cols >= 2) return {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  for (int i = 0; i < n; ++i) w.push_back({i / cfg.cols, i % cfg.cols});
  return w;
}

ExperimentResult run_elink(const ExperimentSpec& spec, const MeshConfig& cfg) {
  ExperimentResult r;
  r.columns = {"experiment",  "writers",          "core_row", "core_col", "completed_iterations",
               "bytes",       "utilization_fraction", "throughput_mb_per_s"};
  std::vector<int> counts = spec.writers ? std::vector<int>{*spec.writers}
                                         : std::vector<int>{1, 4, cfg.rows * cfg.cols};
  for (int n : counts) {
    for (const UtilizationRecord& u :
         contention_experiment(cfg, writer_set(n, cfg), kELinkBlock, kELinkSeconds)) {
      r.rows.push_back({"elink", std::int64_t{n}, std::int64_t{u.core.row}, std::int64_t{u.core.col},
                        static_cast<std::int64_t>(u.completed_iterations),
                        static_cast<std::int64_t>(u.bytes), u.utilization,
                        static_cast<double>(u.bytes) / kELinkSeconds / 1e6});
    }
  }
  return r;
}

// ---------------------------------------------------------------- stencil

constexpr int kDefaultIterations = 20;

struct StencilRun {
  std::string series;
  int wg_rows, wg_cols, rows, cols;
  bool communicate;
};

std::vector<Cell> stencil_row(const char* experiment, const StencilRun& s, int iters,
                              const MeshConfig& cfg, std::ostream* log, bool check) {
  std::mt19937_64 rng(0x5EED0000u + static_cast<unsigned>(s.rows * 131 + s.cols));
  const Grid g = random_integer_grid(s.rows, s.cols, -8, 8, rng);
  StencilOptions opt;
  opt.wg_rows = s.wg_rows;
  opt.wg_cols = s.wg_cols;
  opt.communicate = s.communicate;
  opt.log = log;
  const StencilWeights w{};
  const StencilResult res = stencil_distributed(g, w, iters, opt, cfg);
  Cell exact;
  if (check && s.communicate) {
    exact = std::int64_t{res.grid == stencil_reference(g, w, iters, s.wg_rows, s.wg_cols,
                                                       cfg.stencil.stripe_width)};
  }
  return {experiment,
          s.series,
          std::int64_t{s.wg_rows * s.wg_cols},
          std::int64_t{s.wg_rows},
          std::int64_t{s.wg_cols},
          std::int64_t{s.rows},
          std::int64_t{s.cols},
          std::int64_t{s.rows / s.wg_rows},
          std::int64_t{s.cols / s.wg_cols},
          std::int64_t{iters},
          res.seconds,
          res.gflops,
          exact};
}

const std::vector<std::string> kStencilColumns = {
    "experiment", "series",     "cores",      "wg_rows",    "wg_cols", "grid_rows", "grid_cols",
    "block_rows", "block_cols", "iterations", "time_s",     "gflops",  "exact"};

ExperimentResult run_stencil(const ExperimentSpec& spec, const MeshConfig& cfg) {
  ExperimentResult r;
  r.columns = kStencilColumns;
  const int iters = spec.iterations.value_or(kDefaultIterations);
  std::vector<StencilRun> runs;
  if (spec.custom()) {
    const int wr = spec.wg_rows.value_or(1), wc = spec.wg_cols.value_or(1);
    const int rows = spec.size ? *spec.size : *spec.rows, cols = spec.size ? *spec.size : *spec.cols;
    runs = {{"nocomm", wr, wc, rows, cols, false}, {"comm", wr, wc, rows, cols, true}};
  } else {
    // 80x20 per core: alone, and on the full mesh with and without halo exchange.
    runs = {{"single", 1, 1, 80, 20, true},
            {"nocomm", cfg.rows, cfg.cols, 80 * cfg.rows, 20 * cfg.cols, false},
            {"comm", cfg.rows, cfg.cols, 80 * cfg.rows, 20 * cfg.cols, true}};
  }
  for (const StencilRun& s : runs) {
    r.rows.push_back(stencil_row("stencil", s, iters, cfg, spec.event_log, true));
  }
  return r;
}

// ---------------------------------------------------------------- matmul

const std::vector<std::string> kMatmulColumns = {
    "experiment", "series",          "cores",          "size",      "block",
    "time_s",     "gflops",          "compute_fraction", "transfer_fraction", "exact",
    "transfer_s", "compute_s",       "transfer_per_compute"};

std::pair<MatrixF, MatrixF> integer_operands(int n) {
  std::mt19937_64 rng(0xC0FFEEu + static_cast<unsigned>(n));
  return {random_integer_matrix(n, n, -4, 4, rng), random_integer_matrix(n, n, -4, 4, rng)};
}

std::vector<Cell> onchip_row(const std::string& series, int p, int block, const MeshConfig& cfg,
                             std::ostream* log) {
  const int n = p * block;
  const auto [a, b] = integer_operands(n);
  const MatmulResult res = cannon_multicore(a, b, p, cfg, log);
  const double span = res.cycles > 0 ? res.cycles : 1.0;
  return {"matmul",
          series,
          std::int64_t{p * p},
          std::int64_t{n},
          std::int64_t{block},
          res.seconds,
          res.gflops,
          res.compute_cycles / span,
          res.transfer_cycles / span,
          std::int64_t{res.c == matmul_reference(a, b)},
          {},
          {},
          {}};
}

std::vector<Cell> offchip_row(int p, int n, const MeshConfig& cfg, std::ostream* log) {
  const int block = cfg.matmul.max_block;
  const auto [a, b] = integer_operands(n);
  const OffchipResult res = offchip_matmul(a, b, p, block, cfg, log);
  return {"matmul",
          "offchip",
          std::int64_t{p * p},
          std::int64_t{n},
          std::int64_t{block},
          res.seconds,
          res.gflops,
          res.compute_share,
          res.transfer_share,
          std::int64_t{res.c == matmul_reference(a, b)},
          {},
          {},
          {}};
}

ExperimentResult run_matmul(const ExperimentSpec& spec, const MeshConfig& cfg) {
  ExperimentResult r;
  r.columns = kMatmulColumns;
  const int side = std::min(cfg.rows, cfg.cols);
  if (spec.custom()) {
    const int p = spec.wg_rows.value_or(side);
    const int n = *spec.size;
    const int block = n / p;
    if (block <= cfg.matmul.max_block) {
      r.rows.push_back(onchip_row(p == 1 ? "single" : "onchip", p, block, cfg, spec.event_log));
    } else {
      r.rows.push_back(offchip_row(p, n, cfg, spec.event_log));
    }
    return r;
  }
  static constexpr int kBlocks[] = {8, 16, 20, 24, 32};
  for (int b : kBlocks) r.rows.push_back(onchip_row("single", 1, b, cfg, nullptr));
  for (int p = 2; p <= side; p *= 2) {
    for (int b : kBlocks) r.rows.push_back(onchip_row("onchip", p, b, cfg, nullptr));
  }
  const int big = side * cfg.matmul.max_block * 2;  // 512 on the 8x8 mesh
  r.rows.push_back(offchip_row(side, big, cfg, nullptr));
  if (spec.large) {
    r.rows.push_back(offchip_row(side, 2 * big, cfg, nullptr));
    r.rows.push_back(offchip_row(side, 3 * big, cfg, nullptr));
  }
  const OffchipRatio ratio = offchip_analytic_ratio(side, cfg.matmul.max_block, cfg);
  r.rows.push_back({"matmul", "ratio", std::int64_t{side * side}, std::int64_t{big},
                    std::int64_t{cfg.matmul.max_block}, {}, {}, {}, {}, {}, ratio.transfer_s,
                    ratio.compute_s, ratio.ratio()});
  return r;
}

// ---------------------------------------------------------------- scaling

const std::vector<std::string> kScalingColumns = {
    "experiment", "series", "cores", "wg_rows", "wg_cols", "grid_rows", "grid_cols",
    "time_s",     "gflops", "speedup"};

ExperimentResult run_weak(const ExperimentSpec& spec, const MeshConfig& cfg) {
  ExperimentResult r;
  r.columns = kScalingColumns;
  const int iters = spec.iterations.value_or(kDefaultIterations);
  constexpr int kBlock = 60;
  // Core counts double by alternating column and row doubling.
  std::vector<std::pair<int, int>> shapes{{1, 1}};
  while (true) {
    auto [wr, wc] = shapes.back();
    if (wc <= wr && wc * 2 <= cfg.cols) {
      wc *= 2;
    } else if (wr * 2 <= cfg.rows) {
      wr *= 2;
    } else {
      break;
    }
    shapes.push_back({wr, wc});
  }
  for (auto [wr, wc] : shapes) {
    const StencilRun s{"stencil", wr, wc, kBlock * wr, kBlock * wc, true};
    const std::vector<Cell> row = stencil_row("weak_scaling", s, iters, cfg, nullptr, false);
    r.rows.push_back({"weak_scaling", "stencil", std::int64_t{wr * wc}, std::int64_t{wr},
                      std::int64_t{wc}, std::int64_t{s.rows}, std::int64_t{s.cols}, row[10],
                      row[11], {}});
  }
  // Cannon with full 32x32 blocks per core.
  for (int p = 1; p <= std::min(cfg.rows, cfg.cols); p *= 2) {
    const std::vector<Cell> row = onchip_row("matmul", p, cfg.matmul.max_block, cfg, nullptr);
    r.rows.push_back({"weak_scaling", "matmul", std::int64_t{p * p}, std::int64_t{p},
                      std::int64_t{p}, row[3], row[3], row[5], row[6], {}});
  }
  return r;
}

ExperimentResult run_strong(const ExperimentSpec& spec, const MeshConfig& cfg) {
  ExperimentResult r;
  r.columns = kScalingColumns;
  const int iters = spec.iterations.value_or(kDefaultIterations);
  // The largest grid still fits on one core; 1 -> 2 -> 4 cores split rows, then columns.
  static constexpr std::pair<int, int> kGrids[] = {{20, 40}, {40, 40}, {80, 40}, {160, 40}};
  static constexpr std::pair<int, int> kShapes[] = {{1, 1}, {2, 1}, {2, 2}};
  for (auto [rows, cols] : kGrids) {
    double t1 = 0.0;
    for (auto [wr, wc] : kShapes) {
      const StencilRun s{"stencil", wr, wc, rows, cols, true};
      const std::vector<Cell> row = stencil_row("strong_scaling", s, iters, cfg, nullptr, false);
      const double t = std::get<double>(row[10]);
      if (wr * wc == 1) t1 = t;
      r.rows.push_back({"strong_scaling", "stencil", std::int64_t{wr * wc}, std::int64_t{wr},
                        std::int64_t{wc}, std::int64_t{rows}, std::int64_t{cols}, t, row[11],
                        t1 / t});
    }
  }
  // Cannon on a fixed 64x64 product; speedup relative to the 2x2 run.
  constexpr int kN = 64;
  double t2 = 0.0;
  for (int p = 2; p <= std::min(cfg.rows, cfg.cols); p *= 2) {
    if (kN % p || kN / p > cfg.matmul.max_block) continue;
    const std::vector<Cell> row = onchip_row("matmul", p, kN / p, cfg, nullptr);
    const double t = std::get<double>(row[5]);
    if (t2 == 0.0) t2 = t;
    r.rows.push_back({"strong_scaling", "matmul", std::int64_t{p * p}, std::int64_t{p},
                      std::int64_t{p}, std::int64_t{kN}, std::int64_t{kN}, t, row[6], t2 / t});
  }
  return r;
}

}  // namespace

std::string_view kind_name(Kind k) { return kNames[static_cast<int>(k)]; }

Kind parse_kind(std::string_view name) {
  for (Kind k : kKinds) {
    if (kind_name(k) == name) return k;
  }
  throw UsageError("unknown experiment '" + std::string(name) + "'");
}

const std::vector<Kind>& all_kinds() {
  static const std::vector<Kind> kinds(std::begin(kKinds), std::end(kKinds));
  return kinds;
}

void ExperimentSpec::validate(const MeshConfig& cfg) const {
  auto reject = [&](bool bad, const std::string& what) {
    if (bad) throw UsageError(std::string(kind_name(kind)) + ": " + what);
  };
  const bool has_dims = rows || cols;
  reject(size && has_dims, "give either --size or --rows/--cols, not both");
  reject(rows.has_value() != cols.has_value(), "--rows and --cols go together");
  reject(wg_rows.has_value() != wg_cols.has_value(), "--cores needs RxC");
  reject(iterations && *iterations < 0, "--iters must be >= 0");
  if (wg_rows) {
    reject(*wg_rows < 1 || *wg_cols < 1 || *wg_rows > cfg.rows || *wg_cols > cfg.cols,
           "--cores does not fit the " + std::to_string(cfg.rows) + "x" +
               std::to_string(cfg.cols) + " mesh");
  }
  switch (kind) {
    case Kind::Bandwidth:
      reject(wg_rows || has_dims || writers || iterations, "only --size applies");
      reject(size && (*size < 4 || *size % 4 || *size > (1 << 20)),
             "--size must be a multiple of 4 in [4, 1048576]");
      break;
    case Kind::Latency:
      reject(custom() || iterations, "takes no parameters");
      break;
    case Kind::ELink:
      reject(wg_rows || size || has_dims || iterations, "only --writers applies");
      reject(writers && (*writers < 1 || *writers > cfg.rows * cfg.cols),
             "--writers must be in [1, " + std::to_string(cfg.rows * cfg.cols) + "]");
      break;
    case Kind::Stencil: {
      reject(writers.has_value(), "--writers does not apply");
      if (!custom()) break;
      reject(!size && !has_dims, "--size or --rows/--cols is required with --cores");
      const int r = size ? *size : *rows, c = size ? *size : *cols;
      const int wr = wg_rows.value_or(1), wc = wg_cols.value_or(1);
      reject(r < 1 || c < 1, "grid must be at least 1x1");
      reject(r % wr || c % wc, "grid does not divide over the workgroup");
      try {
        (void)stencil_block_layout(r / wr, c / wc);
      } catch (const LayoutError& e) {
        reject(true, e.what());
      }
      break;
    }
    case Kind::Matmul: {
      reject(writers || has_dims || iterations, "only --size and --cores apply");
      if (!custom()) break;
      reject(!size, "--size is required");
      const int p = wg_rows.value_or(std::min(cfg.rows, cfg.cols));
      reject(wg_rows && *wg_rows != *wg_cols, "Cannon needs a square workgroup");
      reject(*size < 1 || *size % p, "--size must be a positive multiple of the workgroup side");
      const int block = *size / p;
      reject(block > cfg.matmul.max_block && *size % (p * cfg.matmul.max_block),
             "blocks above " + std::to_string(cfg.matmul.max_block) +
                 " need --size to be a multiple of side*" + std::to_string(cfg.matmul.max_block));
      break;
    }
    case Kind::WeakScaling:
    case Kind::StrongScaling:
      reject(custom(), "only --iters applies");
      break;
  }
}

nlohmann::json ExperimentSpec::to_json() const {
  nlohmann::json j;
  j["kind"] = kind_name(kind);
  auto put = [&](const char* k, const std::optional<int>& v) {
    if (v) j[k] = *v;
  };
  put("wg_rows", wg_rows);
  put("wg_cols", wg_cols);
  put("size", size);
  put("rows", rows);
  put("cols", cols);
  put("iterations", iterations);
  put("writers", writers);
  if (large) j["large"] = true;
  return j;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const MeshConfig& cfg) {
  spec.validate(cfg);
  ExperimentResult r;
  switch (spec.kind) {
    case Kind::Bandwidth: r = run_bandwidth(spec, cfg); break;
    case Kind::Latency: r = run_latency(spec, cfg); break;
    case Kind::ELink: r = run_elink(spec, cfg); break;
    case Kind::Stencil: r = run_stencil(spec, cfg); break;
    case Kind::Matmul: r = run_matmul(spec, cfg); break;
    case Kind::WeakScaling: r = run_weak(spec, cfg); break;
    case Kind::StrongScaling: r = run_strong(spec, cfg); break;
  }
  r.experiment = kind_name(spec.kind);
  r.spec = spec.to_json();
  return r;
}

std::vector<ExperimentResult> run_suite(const MeshConfig& cfg, bool large) {
  std::vector<std::future<ExperimentResult>> jobs;
  for (Kind k : all_kinds()) {
    ExperimentSpec s;
    s.kind = k;
    s.large = large && k == Kind::Matmul;
    jobs.push_back(std::async(std::launch::async, [s, &cfg] { return run_experiment(s, cfg); }));
  }
  std::vector<ExperimentResult> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

}  // namespace meshsim::bench
