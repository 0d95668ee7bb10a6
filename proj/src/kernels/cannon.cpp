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
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "meshsim/bank_layout.hpp"
#include "meshsim/elink.hpp"
#include "meshsim/errors.hpp"
#include "meshsim/matmul.hpp"
#include "meshsim/runtime.hpp"

namespace meshsim {

namespace {

// Monotonic per-direction counters; a value v means "round v reached this step".
constexpr std::uint32_t kReadyW = layouts::kMatmulFlags + 0x00;  // west neighbour may send A
constexpr std::uint32_t kReadyN = layouts::kMatmulFlags + 0x04;  // north neighbour may send B
constexpr std::uint32_t kDataE = layouts::kMatmulFlags + 0x08;   // A from east has landed
constexpr std::uint32_t kDataS = layouts::kMatmulFlags + 0x0C;   // B from south has landed
constexpr std::uint32_t kFreeW = layouts::kMatmulFlags + 0x10;   // west's base half-slot is free
constexpr std::uint32_t kFreeN = layouts::kMatmulFlags + 0x14;   // north's base half-slot is free

struct CannonGeom {
  int p = 1, m = 1, n = 1, k = 1;
  bool half = false;
  double cost = 0.0;
  double round_overhead = 0.0;  // loop and pointer bookkeeping of a rotating round
  std::uint32_t a[2] = {0, 0};
  std::uint32_t b[2] = {0, 0};
  std::uint32_t c = 0;
};

CannonGeom make_geom(int p, int m, int n, int k, const MeshConfig& cfg) {
  CannonGeom g;
  g.p = p;
  g.m = m;
  g.n = n;
  g.k = k;
  g.cost = matmul_core_time(m, n, k, cfg.matmul);
  g.round_overhead = p > 1 ? cfg.matmul.round_overhead_cycles : 0.0;
  g.half = (m == 32 && n == 32 && k == 32);
  if (g.half) {
    const BankLayout l = layouts::matmul_half_buffer();
    g.a[0] = l.at("A").start;
    g.b[0] = l.at("B").start;
    g.c = l.at("C").start;
  } else {
    const BankLayout l = layouts::matmul_double_buffer(m, n, k);
    g.a[0] = l.at("A0").start;
    g.a[1] = l.at("A1").start;
    g.b[0] = l.at("B0").start;
    g.b[1] = l.at("B1").start;
    g.c = l.at("C").start;
  }
  return g;
}

struct Torus {
  Coord west, east, north, south;
};

Torus torus(const Ctx& ctx, int p) {
  const Workgroup& wg = ctx.group();
  const int r = ctx.group_row(), c = ctx.group_col();
  return {wg.at(r, (c + p - 1) % p), wg.at(r, (c + 1) % p), wg.at((r + p - 1) % p, c),
          wg.at((r + 1) % p, c)};
}

void multiply_local(Ctx& ctx, const CannonGeom& g, std::uint32_t a_lo, std::uint32_t a_hi,
                    std::uint32_t b_lo, std::uint32_t b_hi) {
  // Blocks are stored as two row halves that need not be adjacent.
  std::vector<const float*> ar(static_cast<size_t>(g.m)), br(static_cast<size_t>(g.n));
  const int ah = (g.m + 1) / 2, bh = (g.n + 1) / 2;
  for (int i = 0; i < g.m; ++i) {
    ar[static_cast<size_t>(i)] = i < ah ? ctx.local<float>(a_lo) + i * g.n
                                        : ctx.local<float>(a_hi) + (i - ah) * g.n;
  }
  for (int q = 0; q < g.n; ++q) {
    br[static_cast<size_t>(q)] = q < bh ? ctx.local<float>(b_lo) + q * g.k
                                        : ctx.local<float>(b_hi) + (q - bh) * g.k;
  }
  matmul_block(ar.data(), br.data(), ctx.local<float>(g.c), g.m, g.n, g.k);
}

DmaDescriptor rotate_chain(const Ctx& ctx, std::uint32_t a_src, Coord a_to, std::uint32_t a_dst,
                           std::uint64_t a_bytes, std::uint32_t b_src, Coord b_to,
                           std::uint32_t b_dst, std::uint64_t b_bytes) {
  return make_chain({DmaDescriptor::copy_1d(ctx.global(a_src), ctx.global(a_to, a_dst), a_bytes),
                     DmaDescriptor::copy_1d(ctx.global(b_src), ctx.global(b_to, b_dst), b_bytes)});
}

DmaDescriptor half_stage_chain(const Ctx& ctx, const Torus& nb, int parity, int stage) {
  std::vector<DmaDescriptor> segs;
  for (const HalfTransfer& x : half_buffer_plan(parity)) {
    if (x.stage != stage) continue;
    const Coord to = x.operand == 'A' ? nb.west : nb.north;
    segs.push_back(DmaDescriptor::copy_1d(ctx.global(x.src), ctx.global(to, x.dst), x.bytes));
  }
  return make_chain(std::move(segs));
}

Task signal(Ctx& ctx, Coord to, std::uint32_t flag, std::uint32_t v) {
  co_await ctx.write_value(ctx.global(to, flag), v);
}

Task wait_both(Ctx& ctx, std::uint32_t f1, std::uint32_t f2, std::uint32_t v) {
  co_await ctx.flag_wait(f1, v, FlagCmp::AtLeast);
  co_await ctx.flag_wait(f2, v, FlagCmp::AtLeast);
}

/// P rounds of compute then rotate, starting from blocks in the initial slots,
/// so every block ends where it started. `epoch` carries the flag counter
/// across repeated invocations on the same cores.
Task cannon_rounds(Ctx& ctx, CannonGeom g, std::uint32_t* epoch) {
  const Torus nb = torus(ctx, g.p);
  const std::uint64_t a_bytes = static_cast<std::uint64_t>(g.m) * g.n * 4;
  const std::uint64_t b_bytes = static_cast<std::uint64_t>(g.n) * g.k * 4;
  for (int t = 0; t < g.p; ++t) {
    const std::uint32_t v = *epoch + static_cast<std::uint32_t>(t) + 1;
    const bool rotate = g.p > 1;
    if (!g.half) {
      const int cur = t % 2, nxt = 1 - cur;
      if (rotate) {
        // Our spare buffers were last read in the previous round.
        co_await signal(ctx, nb.east, kReadyW, v);
        co_await signal(ctx, nb.south, kReadyN, v);
      }
      const std::uint32_t ah = g.a[cur] + static_cast<std::uint32_t>(((g.m + 1) / 2) * g.n * 4);
      const std::uint32_t bh = g.b[cur] + static_cast<std::uint32_t>(((g.n + 1) / 2) * g.k * 4);
      multiply_local(ctx, g, g.a[cur], ah, g.b[cur], bh);
      co_await ctx.compute(g.cost + g.round_overhead);
      if (!rotate) continue;
      co_await wait_both(ctx, kReadyW, kReadyN, v);
      const DmaDescriptor chain = rotate_chain(ctx, g.a[cur], nb.west, g.a[nxt], a_bytes,
                                               g.b[cur], nb.north, g.b[nxt], b_bytes);
      co_await ctx.dma_start(chain);
      co_await signal(ctx, nb.west, kDataE, v);
      co_await signal(ctx, nb.north, kDataS, v);
      co_await wait_both(ctx, kDataE, kDataS, v);
    } else {
      const HalfBufferState s = half_buffer_state(t % 2);
      multiply_local(ctx, g, s.a_lo, s.a_hi, s.b_lo, s.b_hi);
      co_await ctx.compute(g.cost + g.round_overhead);
      if (!rotate) continue;
      // The neighbour's spare slot is its previous round's outgoing half.
      if (t > 0) co_await wait_both(ctx, kReadyW, kReadyN, v - 1);
      const DmaDescriptor first = half_stage_chain(ctx, nb, t % 2, 1);
      const DmaDescriptor second = half_stage_chain(ctx, nb, t % 2, 2);
      co_await ctx.dma_start(first);
      co_await signal(ctx, nb.east, kFreeW, v);
      co_await signal(ctx, nb.south, kFreeN, v);
      co_await wait_both(ctx, kFreeW, kFreeN, v);
      co_await ctx.dma_start(second);
      co_await signal(ctx, nb.west, kDataE, v);
      co_await signal(ctx, nb.north, kDataS, v);
      co_await signal(ctx, nb.east, kReadyW, v);
      co_await signal(ctx, nb.south, kReadyN, v);
      co_await wait_both(ctx, kDataE, kDataS, v);
    }
  }
  *epoch += static_cast<std::uint32_t>(g.p);
}

Task cannon_kernel(Ctx& ctx, CannonGeom g) {
  std::uint32_t epoch = 0;
  co_await cannon_rounds(ctx, g, &epoch);
}

void store_block(Simulator& sim, GlobalAddr at, const MatrixF& block) {
  sim.memory().write(at, {reinterpret_cast<const std::uint8_t*>(block.data()),
                          static_cast<size_t>(block.size()) * sizeof(float)});
}

MatrixF load_block(Simulator& sim, GlobalAddr at, int rows, int cols) {
  MatrixF out(rows, cols);
  sim.memory().read_into(at, {reinterpret_cast<std::uint8_t*>(out.data()),
                              static_cast<size_t>(out.size()) * sizeof(float)});
  return out;
}

void check_workgroup(int p, const MeshConfig& cfg) {
  if (p < 1 || p > cfg.rows || p > cfg.cols) {
    throw ConfigError("Cannon needs a square workgroup of 1.." +
                      std::to_string(std::min(cfg.rows, cfg.cols)) + " cores per side, got " +
                      std::to_string(p));
  }
}

}  // namespace

MatmulResult cannon_multicore(const MatrixF& a, const MatrixF& b, int p, const MeshConfig& cfg,
                              std::ostream* log) {
  check_workgroup(p, cfg);
  if (a.cols() != b.rows()) throw DomainError("matmul dimension mismatch");
  if (a.rows() % p || a.cols() % p || b.cols() % p || a.size() == 0 || b.size() == 0) {
    throw ConfigError("matrix dimensions must be positive multiples of the workgroup side");
  }
  const int m = static_cast<int>(a.rows() / p), n = static_cast<int>(a.cols() / p),
            k = static_cast<int>(b.cols() / p);
  const CannonGeom g = make_geom(p, m, n, k, cfg);
  const Workgroup wg{{0, 0}, p, p};

  Simulator sim(cfg);
  sim.set_log(log);
  MatmulResult res;
  res.c = MatrixF::Zero(a.rows(), b.cols());
  auto load = [&](Simulator& s) {
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < p; ++j) {
        const int sk = (i + j) % p;
        const Coord c = wg.at(i, j);
        store_block(s, s.map().global(c, g.a[0]), a.block(i * m, sk * n, m, n));
        store_block(s, s.map().global(c, g.b[0]), b.block(sk * n, j * k, n, k));
        store_block(s, s.map().global(c, g.c), MatrixF::Zero(m, k));
      }
    }
  };
  auto collect = [&](Simulator& s) {
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < p; ++j) {
        res.c.block(i * m, j * k, m, k) = load_block(s, s.map().global(wg.at(i, j), g.c), m, k);
      }
    }
  };
  const HostResult hr =
      host_run(sim, wg, [&](Ctx& ctx) { return cannon_kernel(ctx, g); }, load, collect);

  res.cycles = hr.end_cycles;
  res.seconds = cfg.cycles_to_s(hr.end_cycles);
  res.compute_cycles = (g.cost + g.round_overhead) * p;
  res.transfer_cycles = hr.end_cycles - res.compute_cycles;
  res.rounds = p;
  res.half_buffer = g.half;
  res.events = hr.events;
  res.gflops = matmul_flops(a.rows(), a.cols(), b.cols()) / res.seconds / 1e9;
  return res;
}

namespace {

struct OffchipArgs {
  CannonGeom g;
  int tiles_i, tiles_j, kbs;
  int n_total, k_total;
  std::uint64_t a_off, b_off, c_off;
};

struct OffchipClock {
  double transfer = 0.0;
  double compute = 0.0;
};

Task offchip_kernel(Ctx& ctx, OffchipArgs a, Barrier* bar, OffchipClock* clock) {
  const CannonGeom& g = a.g;
  const int p = g.p, bs = g.m;
  const int i = ctx.group_row(), j = ctx.group_col(), s = (i + j) % p;
  const int tile = p * bs;
  const bool timed = (i == 0 && j == 0);
  const AddressMap& map = ctx.sim().map();
  const int word = (bs % 2 == 0) ? 8 : 4;
  const std::uint64_t row_bytes = static_cast<std::uint64_t>(bs) * 4;
  auto dram = [&](std::uint64_t base, int row, int col, int ld) {
    return map.shared(base + (static_cast<std::uint64_t>(row) * ld + col) * 4);
  };

  std::uint32_t epoch = 0;
  std::optional<DmaHandle> pending;
  for (int ti = 0; ti < a.tiles_i; ++ti) {
    for (int tj = 0; tj < a.tiles_j; ++tj) {
      for (int kb = 0; kb < a.kbs; ++kb) {
        const double t0 = ctx.now();
        if (kb == 0) {
          if (pending) co_await ctx.dma_wait(*pending);
          pending.reset();
          std::memset(ctx.local<float>(g.c), 0, static_cast<size_t>(bs * bs) * sizeof(float));
        }
        // Page in this core's pre-skewed blocks of the current A row panel and B column panel.
        const auto pa = DmaDescriptor::copy_2d(
            dram(a.a_off, ti * tile + i * bs, kb * tile + s * bs, a.n_total), ctx.global(g.a[0]),
            static_cast<std::uint32_t>(bs), row_bytes, a.n_total * 4LL,
            static_cast<std::int64_t>(row_bytes), word);
        const auto pb = DmaDescriptor::copy_2d(
            dram(a.b_off, kb * tile + s * bs, tj * tile + j * bs, a.k_total), ctx.global(g.b[0]),
            static_cast<std::uint32_t>(bs), row_bytes, a.k_total * 4LL,
            static_cast<std::int64_t>(row_bytes), word);
        const DmaDescriptor page_in = make_chain({pa, pb});
        co_await ctx.dma_start(page_in);
        co_await ctx.barrier_wait(*bar);
        if (timed) clock->transfer += ctx.now() - t0;

        const double t1 = ctx.now();
        co_await cannon_rounds(ctx, g, &epoch);
        if (timed) clock->compute += ctx.now() - t1;
      }
      DmaDescriptor out = DmaDescriptor::copy_2d(
          ctx.global(g.c), dram(a.c_off, ti * tile + i * bs, tj * tile + j * bs, a.k_total),
          static_cast<std::uint32_t>(bs), row_bytes, static_cast<std::int64_t>(row_bytes),
          a.k_total * 4LL, word, 1);
      out.mode = DmaMode::NonBlocking;
      pending = co_await ctx.dma_start(out);
    }
  }
  const double t2 = ctx.now();
  if (pending) co_await ctx.dma_wait(*pending);
  if (timed) clock->transfer += ctx.now() - t2;
}

}  // namespace

OffchipResult offchip_matmul(const MatrixF& a, const MatrixF& b, int p, int block,
                             const MeshConfig& cfg, std::ostream* log) {
  check_workgroup(p, cfg);
  if (block < 1) throw ConfigError("per-core block must be positive");
  if (a.cols() != b.rows()) throw DomainError("matmul dimension mismatch");
  const Eigen::Index tile = static_cast<Eigen::Index>(p) * block;
  if (a.size() == 0 || b.size() == 0 || a.rows() % tile || a.cols() % tile || b.cols() % tile) {
    throw ConfigError("M, N and K must be positive multiples of the on-chip tile " +
                      std::to_string(tile));
  }
  const std::uint64_t a_bytes = static_cast<std::uint64_t>(a.size()) * 4;
  const std::uint64_t b_bytes = static_cast<std::uint64_t>(b.size()) * 4;
  const std::uint64_t c_bytes = static_cast<std::uint64_t>(a.rows() * b.cols()) * 4;
  if (a_bytes + b_bytes + c_bytes > cfg.shared_bytes) {
    throw LayoutError("operands need " + std::to_string(a_bytes + b_bytes + c_bytes) +
                      " bytes of shared memory, only " + std::to_string(cfg.shared_bytes) +
                      " available");
  }
  const OffchipArgs args{make_geom(p, block, block, block, cfg),
                         static_cast<int>(a.rows() / tile),
                         static_cast<int>(b.cols() / tile),
                         static_cast<int>(a.cols() / tile),
                         static_cast<int>(a.cols()),
                         static_cast<int>(b.cols()),
                         0,
                         a_bytes,
                         a_bytes + b_bytes};
  const Workgroup wg{{0, 0}, p, p};
  Simulator sim(cfg);
  sim.set_log(log);
  Barrier bar(wg);
  OffchipClock clock;
  OffchipResult res;
  auto load = [&](Simulator& s) {
    store_block(s, s.map().shared(args.a_off), a);
    store_block(s, s.map().shared(args.b_off), b);
  };
  auto collect = [&](Simulator& s) {
    res.c = load_block(s, s.map().shared(args.c_off), static_cast<int>(a.rows()),
                       static_cast<int>(b.cols()));
  };
  const HostResult hr = host_run(
      sim, wg, [&](Ctx& ctx) { return offchip_kernel(ctx, args, &bar, &clock); }, load, collect);

  res.cycles = hr.end_cycles;
  res.seconds = cfg.cycles_to_s(hr.end_cycles);
  res.compute_cycles = clock.compute;
  res.transfer_cycles = clock.transfer;
  res.rounds = p;
  res.half_buffer = args.g.half;
  res.events = hr.events;
  res.tiles = args.tiles_i * args.tiles_j;
  res.block_pairs = args.kbs;
  res.gflops = matmul_flops(a.rows(), a.cols(), b.cols()) / res.seconds / 1e9;
  const double span = clock.transfer + clock.compute;
  res.transfer_share = span > 0 ? clock.transfer / span : 0.0;
  res.compute_share = span > 0 ? clock.compute / span : 0.0;
  return res;
}

OffchipRatio offchip_analytic_ratio(int p, int block, const MeshConfig& cfg) {
  const int n = p * block;
  const double pair_bytes = 2.0 * n * n * 4;
  const double rate = elink_payload_bytes_per_cycle(cfg.elink) * cfg.clock_hz;
  const MatrixF z = MatrixF::Zero(n, n);
  return {pair_bytes / rate, cannon_multicore(z, z, p, cfg).seconds};
}

}  // namespace meshsim
