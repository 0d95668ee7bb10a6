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

#include "meshsim/stencil.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

#include "meshsim/bank_layout.hpp"
#include "meshsim/errors.hpp"

namespace meshsim {

void stencil_sweep_block(float* base, int pitch, int rows, int cols, const StencilWeights& w,
                         int stripe_width, float* scratch) {
  for (int c0 = 0; c0 < cols; c0 += stripe_width) {
    const int width = std::min(stripe_width, cols - c0);
    const int sp = width + 2;
    // Buffer the stripe and its two flanking columns before storing anything.
    for (int r = 0; r < rows + 2; ++r) {
      std::memcpy(scratch + r * sp, base + r * pitch + c0, static_cast<size_t>(sp) * sizeof(float));
    }
    for (int r = 1; r <= rows; ++r) {
      const float* up = scratch + (r - 1) * sp;
      const float* mid = scratch + r * sp;
      const float* dn = scratch + (r + 1) * sp;
      float* out = base + r * pitch + c0;
      for (int j = 1; j <= width; ++j) {
        out[j] = stencil_point(w, up[j], mid[j - 1], mid[j], mid[j + 1], dn[j]);
      }
    }
  }
}

Grid stencil_reference(const Grid& g, const StencilWeights& w, int iterations, int wg_rows,
                       int wg_cols, int stripe_width) {
  if (g.rows < 1 || g.cols < 1) throw DomainError("stencil grid needs at least a 1x1 interior");
  if (iterations < 0) throw DomainError("negative iteration count");
  if (wg_rows < 1 || wg_cols < 1 || g.rows % wg_rows || g.cols % wg_cols) {
    throw ConfigError("grid interior does not divide evenly over the workgroup");
  }
  const int br = g.rows / wg_rows, bc = g.cols / wg_cols;
  Grid cur = g;
  MatrixF block(br + 2, bc + 2);
  std::vector<float> scratch(static_cast<size_t>((br + 2) * (stripe_width + 2)));
  for (int it = 0; it < iterations; ++it) {
    Grid next = cur;
    for (int bi = 0; bi < wg_rows; ++bi) {
      for (int bj = 0; bj < wg_cols; ++bj) {
        // Halos come from the previous iteration of the whole grid.
        block = cur.values.block(bi * br, bj * bc, br + 2, bc + 2);
        stencil_sweep_block(block.data(), bc + 2, br, bc, w, stripe_width, scratch.data());
        next.values.block(bi * br + 1, bj * bc + 1, br, bc) = block.block(1, 1, br, bc);
      }
    }
    cur = std::move(next);
  }
  return cur;
}

double stencil_core_time(int rows, int cols, const StencilCostModel& m) {
  if (rows < 1 || cols < 1) throw DomainError("stencil block must be at least 1x1");
  const double stripes = std::ceil(static_cast<double>(cols) / m.stripe_width);
  const double pairs = std::ceil(rows / 2.0);
  return stripes * pairs * (m.fmadds_per_stripe_pair + m.loop_penalty_cycles) +
         stripes * m.stripe_setup_cycles + m.sweep_overhead_cycles;
}

double stencil_flops(int rows, int cols, const StencilCostModel& m) {
  return 5.0 * m.flops_per_fmadd * rows * cols;
}

StencilBlockLayout stencil_block_layout(int rows, int cols) {
  const BankLayout l = layouts::stencil(rows, cols);  // throws when it does not fit
  return {l.at("grid").start + 4, (cols + 2 + 1) & ~1};
}

namespace {

constexpr std::uint32_t kComputedFlags = layouts::kStencilFlags;      // one word per direction
constexpr std::uint32_t kSentFlags = layouts::kStencilFlags + 0x10;

// Directions: north, south, west, east.
constexpr int kDr[4] = {-1, 1, 0, 0};
constexpr int kDc[4] = {0, 0, -1, 1};
constexpr int opposite(int d) { return d ^ 1; }

struct KernelArgs {
  int rows, cols, iterations;
  StencilWeights w;
  StencilBlockLayout layout;
  bool communicate;
  double cost;
  int stripe_width;
};

Task stencil_kernel(Ctx& ctx, KernelArgs a) {
  const StencilBlockLayout& L = a.layout;
  std::vector<float> scratch(static_cast<size_t>((a.rows + 2) * (a.stripe_width + 2)));
  struct Nb {
    Coord c;
    int dir;
  };
  std::vector<Nb> nbs;
  if (a.communicate) {
    for (int d = 0; d < 4; ++d) {
      if (auto n = ctx.neighbor(kDr[d], kDc[d])) nbs.push_back({*n, d});
    }
  }
  const int row_word = (a.cols % 2 == 0) ? 8 : 4;
  std::vector<DmaDescriptor> segs;
  for (const Nb& n : nbs) {
    const Coord self = ctx.coord();
    switch (n.dir) {
      case 0:  // first interior row -> north's bottom halo row
        segs.push_back(DmaDescriptor::copy_2d(ctx.global(self, L.addr(1, 1)),
                                              ctx.global(n.c, L.addr(a.rows + 1, 1)), 1,
                                              static_cast<std::uint64_t>(a.cols) * 4, 0, 0, row_word));
        break;
      case 1:  // last interior row -> south's top halo row
        segs.push_back(DmaDescriptor::copy_2d(ctx.global(self, L.addr(a.rows, 1)),
                                              ctx.global(n.c, L.addr(0, 1)), 1,
                                              static_cast<std::uint64_t>(a.cols) * 4, 0, 0, row_word));
        break;
      case 2:  // first interior column -> west's right halo column
        segs.push_back(DmaDescriptor::copy_2d(ctx.global(self, L.addr(1, 1)),
                                              ctx.global(n.c, L.addr(1, a.cols + 1)),
                                              static_cast<std::uint32_t>(a.rows), 4, L.pitch * 4,
                                              L.pitch * 4, 4));
        break;
      default:  // last interior column -> east's left halo column
        segs.push_back(DmaDescriptor::copy_2d(ctx.global(self, L.addr(1, a.cols)),
                                              ctx.global(n.c, L.addr(1, 0)),
                                              static_cast<std::uint32_t>(a.rows), 4, L.pitch * 4,
                                              L.pitch * 4, 4));
        break;
    }
  }
  const DmaDescriptor chain = segs.empty() ? DmaDescriptor{} : make_chain(segs);

  float* base = ctx.local<float>(L.base);
  for (int it = 0; it < a.iterations; ++it) {
    const auto v = static_cast<std::uint32_t>(it + 1);
    stencil_sweep_block(base, L.pitch, a.rows, a.cols, a.w, a.stripe_width, scratch.data());
    co_await ctx.compute(a.cost);
    if (nbs.empty()) continue;
    // Neighbours may overwrite our halo only once we stopped reading it.
    for (const Nb& n : nbs) {
      co_await ctx.write_value(ctx.global(n.c, kComputedFlags + 4 * opposite(n.dir)), v);
    }
    for (const Nb& n : nbs) {
      co_await ctx.flag_wait(kComputedFlags + 4 * static_cast<std::uint32_t>(n.dir), v,
                             FlagCmp::AtLeast);
    }
    co_await ctx.dma_start(chain);
    for (const Nb& n : nbs) {
      co_await ctx.write_value(ctx.global(n.c, kSentFlags + 4 * opposite(n.dir)), v);
    }
    for (const Nb& n : nbs) {
      co_await ctx.flag_wait(kSentFlags + 4 * static_cast<std::uint32_t>(n.dir), v,
                             FlagCmp::AtLeast);
    }
  }
}

}  // namespace

StencilResult stencil_distributed(const Grid& g, const StencilWeights& w, int iterations,
                                  const StencilOptions& opt, const MeshConfig& cfg) {
  if (iterations < 0) throw DomainError("negative iteration count");
  if (opt.wg_rows < 1 || opt.wg_cols < 1 || g.rows % opt.wg_rows || g.cols % opt.wg_cols) {
    throw ConfigError("grid interior does not divide evenly over the workgroup");
  }
  const int br = g.rows / opt.wg_rows, bc = g.cols / opt.wg_cols;
  const StencilBlockLayout L = stencil_block_layout(br, bc);
  const Workgroup wg{{0, 0}, opt.wg_rows, opt.wg_cols};

  Simulator sim(cfg);
  sim.set_log(opt.log);
  const KernelArgs args{br, bc, iterations, w, L, opt.communicate,
                        stencil_core_time(br, bc, cfg.stencil), cfg.stencil.stripe_width};

  auto load = [&](Simulator& s) {
    for (const Coord& c : wg.members()) {
      const int r0 = (c.row - wg.start.row) * br, c0 = (c.col - wg.start.col) * bc;
      for (int r = 0; r < br + 2; ++r) {
        for (int k = 0; k < bc + 2; ++k) {
          s.memory().store(s.map().global(c, L.addr(r, k)), g.values(r0 + r, c0 + k));
        }
      }
    }
  };
  StencilResult res;
  res.grid = g;
  auto collect = [&](Simulator& s) {
    for (const Coord& c : wg.members()) {
      const int r0 = (c.row - wg.start.row) * br, c0 = (c.col - wg.start.col) * bc;
      for (int r = 1; r <= br; ++r) {
        for (int k = 1; k <= bc; ++k) {
          res.grid.values(r0 + r, c0 + k) = s.memory().load<float>(s.map().global(c, L.addr(r, k)));
        }
      }
    }
  };
  const HostResult hr = host_run(
      sim, wg, [&](Ctx& ctx) { return stencil_kernel(ctx, args); }, load, collect);

  res.cycles = hr.end_cycles;
  res.seconds = cfg.cycles_to_s(hr.end_cycles);
  res.compute_cycles = args.cost * iterations;
  res.events = hr.events;
  const double flops = stencil_flops(br, bc, cfg.stencil) * wg.size() * iterations;
  res.gflops = res.seconds > 0 ? flops / res.seconds / 1e9 : 0.0;
  return res;
}

}  // namespace meshsim
