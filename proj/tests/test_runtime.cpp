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

#include <doctest.h>

#include <cstring>
#include <map>
#include <random>
#include <sstream>

#include "meshsim/dma.hpp"
#include "meshsim/errors.hpp"
#include "meshsim/runtime.hpp"

using namespace meshsim;

namespace {

// ---- DMA kernels

struct DmaProbe {
  double elapsed = 0;
};

Task dma_once(Ctx& ctx, DmaDescriptor d, DmaProbe* out) {
  const double t0 = ctx.now();
  co_await ctx.dma_start(d);
  out->elapsed = ctx.now() - t0;
}

Task dma_twice(Ctx& ctx, DmaDescriptor d) {
  d.mode = DmaMode::NonBlocking;
  co_await ctx.dma_start(d);
  co_await ctx.dma_start(d);  // same channel still busy
}

// ---- synchronization kernels

Task wait_forever(Ctx& ctx) { co_await ctx.flag_wait(0x7000, 1); }

Task idle(Ctx&) { co_return; }

Task ping(Ctx& ctx, double* seen) {
  if (ctx.coord() == Coord{0, 0}) {
    co_await ctx.compute(100);
    co_await ctx.write_value(ctx.global({2, 3}, 0x7000), std::uint32_t{42});
    *seen = ctx.last_write_visible();
  } else {
    co_await ctx.flag_wait(0x7000, 42);
    CHECK(ctx.now() >= *seen);
    seen[1] = ctx.now();
  }
}

struct BarrierLog {
  std::vector<std::vector<double>> arrive, depart;  // [phase][member]
};

Task barrier_kernel(Ctx& ctx, Barrier* b, BarrierLog* log, int phases, std::uint64_t seed) {
  std::mt19937_64 rng(seed * 1000 + static_cast<unsigned>(ctx.coord().row * 8 + ctx.coord().col));
  std::uniform_real_distribution<double> d(0.0, 2000.0);
  const int idx = ctx.group_row() * ctx.group().cols + ctx.group_col();
  for (int p = 0; p < phases; ++p) {
    co_await ctx.compute(d(rng));
    log->arrive[p][idx] = ctx.now();
    co_await ctx.barrier_wait(*b);
    log->depart[p][idx] = ctx.now();
  }
}

struct MutexLog {
  int inside = 0;
  int violations = 0;
  int entries = 0;
  std::vector<Coord> order;
};

Task mutex_kernel(Ctx& ctx, Mutex* m, MutexLog* log, int rounds, std::uint64_t seed) {
  std::mt19937_64 rng(seed * 977 + static_cast<unsigned>(ctx.coord().row * 8 + ctx.coord().col));
  std::uniform_real_distribution<double> d(0.0, 300.0);
  for (int i = 0; i < rounds; ++i) {
    co_await ctx.compute(d(rng));
    if (rng() % 4 == 0) {
      if (!co_await ctx.mutex_trylock(*m)) continue;
    } else {
      co_await ctx.mutex_lock(*m);
    }
    if (m->owner() != ctx.coord()) ++log->violations;
    if (log->inside++ != 0) ++log->violations;
    ++log->entries;
    log->order.push_back(ctx.coord());
    co_await ctx.compute(d(rng) / 4);
    --log->inside;
    ctx.mutex_unlock(*m);
  }
}

Task bad_unlock(Ctx& ctx, Mutex* m) {
  ctx.mutex_unlock(*m);
  co_return;
}

Task outsider(Ctx& ctx, Barrier* b) { co_await ctx.barrier_wait(*b); }

Task timed(Ctx& ctx, double* out) {
  ctx.timer_start(0);
  co_await ctx.compute(1234.5);
  *out = ctx.timer_stop(0);
}

Task chatter(Ctx& ctx, std::uint64_t seed) {
  std::mt19937_64 rng(seed + static_cast<unsigned>(ctx.coord().col));
  for (int i = 0; i < 20; ++i) {
    const Coord to{static_cast<int>(rng() % 4), static_cast<int>(rng() % 4)};
    co_await ctx.write_value(ctx.global(to, 0x4000 + 4 * ctx.coord().col), std::uint32_t(i));
    co_await ctx.compute(static_cast<double>(rng() % 100));
  }
}

}  // namespace

TEST_SUITE("dma") {
  TEST_CASE("descriptor validation") {
    const MeshConfig cfg;
    const AddressMap m(cfg);
    auto d = DmaDescriptor::copy_1d(m.global({0, 0}, 0x2000), m.global({0, 1}, 0x2000), 256);
    CHECK_NOTHROW(validate_segment(d, m, {0, 0}));
    auto bad = d;
    bad.word_size = 3;
    CHECK_THROWS_AS(validate_segment(bad, m, {0, 0}), DescriptorError);
    bad = d;
    bad.channel = 2;
    CHECK_THROWS_AS(validate_segment(bad, m, {0, 0}), DescriptorError);
    bad = d;
    bad.inner_count = 0;
    CHECK_THROWS_AS(validate_segment(bad, m, {0, 0}), DescriptorError);
    bad = d;
    bad.src += 2;
    CHECK_THROWS_AS(validate_segment(bad, m, {0, 0}), DescriptorError);
    // A 2D descriptor whose last row lands on the next core's window.
    auto span = DmaDescriptor::copy_2d(m.global({0, 0}, 0), m.global({0, 1}, 0), 2, 64,
                                       static_cast<std::int64_t>(AddressMap::kLocalWindow) * 4,
                                       64, 4);
    CHECK_THROWS_AS(validate_segment(span, m, {0, 0}), AddressError);
    auto other = d;
    other.channel = 1;
    CHECK_THROWS_AS(validate_chain(make_chain({d, other}), m, {0, 0}), DescriptorError);
    CHECK_THROWS_AS(make_chain({}), DescriptorError);
  }

  TEST_CASE("gather and scatter follow the strides") {
    const MeshConfig cfg;
    MemorySystem mem(cfg);
    const AddressMap& m = mem.map();
    for (std::uint32_t i = 0; i < 64; ++i) mem.store(m.global({1, 1}, 4 * i), i);
    // 4 rows of 2 words, source pitch 16 words, packed at the destination.
    auto d = DmaDescriptor::copy_2d(m.global({1, 1}, 0), m.shared(0), 4, 8, 64, 8, 4);
    const auto bytes = dma_gather(d, mem, {1, 1});
    dma_scatter(d, mem, {1, 1}, bytes);
    for (std::uint32_t r = 0; r < 4; ++r) {
      for (std::uint32_t c = 0; c < 2; ++c) {
        CHECK(mem.load<std::uint32_t>(m.shared(8 * r + 4 * c)) == 16 * r + c);
      }
    }
  }

  TEST_CASE("segment timing and word-size derating") {
    TimingModel t;
    auto d = DmaDescriptor::copy_1d(0, 0, 4096);
    const double full = dma_segment_cycles(d, 3, t);
    CHECK(full == doctest::Approx(t.dma_setup_cycles + 3 * t.hop_latency_cycles +
                                  4096 / t.dma_bytes_per_cycle));
    CHECK(full - dma_segment_cycles(d, 3, t, true) ==
          doctest::Approx(t.dma_setup_cycles - t.dma_chain_setup_cycles));
    CHECK(dma_rate(t, 8) == dma_rate(t, 4));
    CHECK(dma_rate(t, 2) == doctest::Approx(dma_rate(t, 4) / 2));
    CHECK(dma_rate(t, 1) == doctest::Approx(dma_rate(t, 4) / 4));
  }

  TEST_CASE("simulated copy moves data and takes the modelled time") {
    const MeshConfig cfg;
    Simulator sim(cfg);
    const AddressMap& m = sim.map();
    for (std::uint32_t i = 0; i < 1024; ++i) sim.memory().store(m.global({0, 0}, 0x2000 + 4 * i), i * 3);
    const auto d = DmaDescriptor::copy_1d(m.global({0, 0}, 0x2000), m.global({2, 3}, 0x4000), 4096);
    DmaProbe probe;
    host_run(sim, {{0, 0}, 1, 1}, [&](Ctx& ctx) { return dma_once(ctx, d, &probe); });
    CHECK(probe.elapsed == doctest::Approx(dma_segment_cycles(d, 5, cfg.timing)));
    for (std::uint32_t i = 0; i < 1024; ++i) {
      REQUIRE(sim.memory().load<std::uint32_t>(m.global({2, 3}, 0x4000 + 4 * i)) == i * 3);
    }
  }

  TEST_CASE("chained segments pay the chain setup") {
    const MeshConfig cfg;
    Simulator sim(cfg);
    const AddressMap& m = sim.map();
    const auto a = DmaDescriptor::copy_1d(m.global({0, 0}, 0x2000), m.global({0, 1}, 0x2000), 1024);
    const auto b = DmaDescriptor::copy_1d(m.global({0, 0}, 0x3000), m.global({0, 1}, 0x3000), 2048);
    DmaProbe probe;
    const auto chain = make_chain({a, b});
    host_run(sim, {{0, 0}, 1, 1}, [&](Ctx& ctx) { return dma_once(ctx, chain, &probe); });
    CHECK(probe.elapsed == doctest::Approx(dma_segment_cycles(a, 1, cfg.timing) +
                                           dma_segment_cycles(b, 1, cfg.timing, true)));
  }

  TEST_CASE("starting on a busy channel faults") {
    const MeshConfig cfg;
    Simulator sim(cfg);
    const auto d = DmaDescriptor::copy_1d(sim.map().global({0, 0}, 0x2000),
                                          sim.map().global({0, 1}, 0x2000), 4096);
    CHECK_THROWS_AS(host_run(sim, {{0, 0}, 1, 1}, [&](Ctx& ctx) { return dma_twice(ctx, d); }),
                    KernelFault);
  }

  TEST_CASE("event timer ordering") {
    EventTimer t;
    CHECK_THROWS_AS(t.stop(5), OrderingError);
    t.start(10);
    CHECK_FALSE(t.elapsed().has_value());
    CHECK_THROWS_AS(t.stop(5), OrderingError);
    CHECK(t.stop(25) == 15);
    CHECK(t.elapsed() == 15);
    CHECK_THROWS_AS(timer_elapsed(3, 2), OrderingError);
  }
}

TEST_SUITE("runtime") {
  TEST_CASE("a flag nobody writes is reported as a deadlock") {
    Simulator sim(MeshConfig{});
    try {
      host_run(sim, {{1, 2}, 1, 2}, [](Ctx& ctx) { return wait_forever(ctx); });
      FAIL("expected DeadlockError");
    } catch (const DeadlockError& e) {
      REQUIRE(e.blocked().size() == 2);
      CHECK(e.blocked()[0].core == Coord{1, 2});
      CHECK(e.blocked()[1].core == Coord{1, 3});
      CHECK(e.blocked()[0].reason.find("flag") != std::string::npos);
    }
  }

  TEST_CASE("a remote write releases a flag waiter no earlier than it lands") {
    Simulator sim(MeshConfig{});
    double seen[2] = {0, 0};
    const Workgroup wg{{0, 0}, 3, 4};
    // Only (0,0) and (2,3) take part; everyone else returns at once.
    host_run(sim, wg, [&](Ctx& ctx) -> Task {
      if (ctx.coord() == Coord{0, 0} || ctx.coord() == Coord{2, 3}) return ping(ctx, seen);
      return idle(ctx);
    });
    CHECK(seen[1] >= seen[0]);
    CHECK(seen[0] > 100);
  }

  TEST_CASE("timers measure compute cycles") {
    Simulator sim(MeshConfig{});
    double out = 0;
    host_run(sim, {{0, 0}, 1, 1}, [&](Ctx& ctx) { return timed(ctx, &out); });
    CHECK(out == doctest::Approx(1234.5));
  }

  TEST_CASE("barrier: no core leaves a phase before all have arrived (randomized)") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
      std::mt19937_64 rng(seed);
      const int rows = 1 + static_cast<int>(rng() % 8), cols = 1 + static_cast<int>(rng() % 8);
      const int r0 = static_cast<int>(rng() % (9 - rows)), c0 = static_cast<int>(rng() % (9 - cols));
      const Workgroup wg{{r0, c0}, rows, cols};
      const int phases = 1 + static_cast<int>(rng() % 6);
      Barrier b(wg);
      BarrierLog log;
      log.arrive.assign(phases, std::vector<double>(wg.size(), -1));
      log.depart = log.arrive;
      Simulator sim(MeshConfig{});
      host_run(sim, wg, [&](Ctx& ctx) { return barrier_kernel(ctx, &b, &log, phases, seed); });
      for (int p = 0; p < phases; ++p) {
        const double last_in = *std::max_element(log.arrive[p].begin(), log.arrive[p].end());
        const double first_out = *std::min_element(log.depart[p].begin(), log.depart[p].end());
        CHECK_MESSAGE(first_out >= last_in, "seed " << seed << " phase " << p);
        if (p + 1 < phases) {
          const double next_in = *std::min_element(log.arrive[p + 1].begin(), log.arrive[p + 1].end());
          CHECK(next_in >= first_out);
        }
      }
    }
  }

  TEST_CASE("barrier rejects non-members") {
    Simulator sim(MeshConfig{});
    Barrier b({{0, 0}, 2, 2});
    CHECK_THROWS_AS(host_run(sim, {{4, 4}, 1, 1}, [&](Ctx& ctx) { return outsider(ctx, &b); }),
                    KernelFault);
    CHECK_THROWS_AS(Barrier({{0, 0}, 2, 2}, Coord{5, 5}), MembershipError);
  }

  TEST_CASE("mutex: mutual exclusion under random contention") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
      std::mt19937_64 rng(seed);
      const int rows = 1 + static_cast<int>(rng() % 8), cols = 1 + static_cast<int>(rng() % 8);
      const Workgroup wg{{0, 0}, rows, cols};
      const Coord home{static_cast<int>(rng() % 8), static_cast<int>(rng() % 8)};
      Mutex m(home, 0x7F00);
      MutexLog log;
      const int rounds = 1 + static_cast<int>(rng() % 5);
      Simulator sim(MeshConfig{});
      host_run(sim, wg, [&](Ctx& ctx) { return mutex_kernel(ctx, &m, &log, rounds, seed); });
      CHECK_MESSAGE(log.violations == 0, "seed " << seed);
      CHECK(log.inside == 0);
      CHECK(log.entries >= 1);
      CHECK(log.entries <= rows * cols * rounds);
      CHECK_FALSE(m.owner().has_value());
    }
  }

  TEST_CASE("mutex unlock by a non-owner faults") {
    Simulator sim(MeshConfig{});
    Mutex m({0, 0}, 0x7F00);
    CHECK_THROWS_AS(host_run(sim, {{0, 0}, 1, 1}, [&](Ctx& ctx) { return bad_unlock(ctx, &m); }),
                    KernelFault);
  }

  TEST_CASE("identical runs produce identical event logs") {
    auto once = [] {
      std::ostringstream log;
      Simulator sim(MeshConfig{});
      sim.set_log(&log);
      const HostResult r =
          host_run(sim, {{0, 0}, 4, 4}, [](Ctx& ctx) { return chatter(ctx, 99); });
      return std::make_pair(log.str(), r.end_cycles);
    };
    const auto a = once(), b = once();
    CHECK(!a.first.empty());
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
  }

  TEST_CASE("workgroups must sit inside the mesh") {
    const MeshConfig cfg;
    CHECK_THROWS_AS((Workgroup{{6, 6}, 3, 1}.validate(cfg)), ConfigError);
    CHECK_THROWS_AS((Workgroup{{0, 0}, 0, 1}.validate(cfg)), ConfigError);
    CHECK((Workgroup{{2, 2}, 2, 3}.members().size()) == 6);
  }
}
