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

#include <random>
#include <set>

#include "meshsim/errors.hpp"
#include "meshsim/matmul.hpp"
#include "meshsim/stencil.hpp"
#include "test_support.hpp"

using namespace meshsim;

namespace {

StencilWeights random_weights(std::mt19937_64& rng) {
  // Small dyadic weights keep integer inputs exact for a few sweeps.
  std::uniform_int_distribution<int> d(-2, 2);
  return {d(rng) * 0.25f, d(rng) * 0.25f, d(rng) * 0.25f, d(rng) * 0.25f, d(rng) * 0.25f};
}

}  // namespace

TEST_SUITE("stencil") {
  TEST_CASE("stencil_point applies the five weights") {
    const StencilWeights w{1, 2, 3, 4, 5};
    CHECK(stencil_point(w, 1, 10, 100, 1000, 10000) == 1 * 1 + 5 * 10 + 2 * 100 + 4 * 1000 + 3 * 10000);
  }

  TEST_CASE("reference equals the independent pointwise oracle") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 60; ++trial) {
      const int wr = 1 + static_cast<int>(rng() % 3), wc = 1 + static_cast<int>(rng() % 3);
      const int br = 1 + static_cast<int>(rng() % 24), bc = 1 + static_cast<int>(rng() % 50);
      const Grid g = random_integer_grid(br * wr, bc * wc, -5, 5, rng);
      const StencilWeights w = random_weights(rng);
      const int iters = static_cast<int>(rng() % 5);
      const Grid ref = stencil_reference(g, w, iters, wr, wc);
      const Grid ora = testing::pointwise_stencil(g, w, iters, wr, wc);
      CHECK_MESSAGE(ref == ora, "trial " << trial);
    }
  }

  TEST_CASE("distributed kernel is bit-exact and keeps the boundary fixed") {
    std::mt19937_64 rng(5);
    const MeshConfig cfg;
    for (int trial = 0; trial < 12; ++trial) {
      const int wr = 1 + static_cast<int>(rng() % 4), wc = 1 + static_cast<int>(rng() % 4);
      const int br = 1 + static_cast<int>(rng() % 20), bc = 1 + static_cast<int>(rng() % 45);
      const Grid g = random_integer_grid(br * wr, bc * wc, -9, 9, rng);
      const StencilWeights w = random_weights(rng);
      const int iters = 1 + static_cast<int>(rng() % 6);
      StencilOptions opt;
      opt.wg_rows = wr;
      opt.wg_cols = wc;
      const StencilResult res = stencil_distributed(g, w, iters, opt, cfg);
      CHECK(res.grid == stencil_reference(g, w, iters, wr, wc));
      CHECK(res.cycles >= res.compute_cycles);
      CHECK(res.gflops > 0);
      for (int c = 0; c < g.cols + 2; ++c) {
        CHECK(res.grid.values(0, c) == g.values(0, c));
        CHECK(res.grid.values(g.rows + 1, c) == g.values(g.rows + 1, c));
      }
    }
  }

  TEST_CASE("zero iterations leave the grid untouched") {
    std::mt19937_64 rng(1);
    const Grid g = random_integer_grid(8, 8, -3, 3, rng);
    StencilOptions opt;
    opt.wg_rows = 2;
    opt.wg_cols = 2;
    CHECK(stencil_distributed(g, {}, 0, opt, MeshConfig{}).grid == g);
  }

  TEST_CASE("shape and capacity errors") {
    std::mt19937_64 rng(1);
    const Grid g = random_integer_grid(10, 10, 0, 1, rng);
    StencilOptions opt;
    opt.wg_rows = 3;
    CHECK_THROWS_AS(stencil_distributed(g, {}, 1, opt, MeshConfig{}), ConfigError);
    CHECK_THROWS_AS(stencil_distributed(g, {}, -1, {}, MeshConfig{}), DomainError);
    CHECK_THROWS_AS(stencil_block_layout(200, 200), LayoutError);
  }

  TEST_CASE("core time grows with area and flops count two per update") {
    const StencilCostModel m;
    CHECK(stencil_core_time(40, 40, m) > stencil_core_time(20, 40, m));
    CHECK(stencil_core_time(20, 40, m) > stencil_core_time(20, 20, m));
    CHECK(stencil_flops(20, 20, m) > 0);
  }
}

TEST_SUITE("matmul") {
  TEST_CASE("reference agrees with Eigen on random real inputs") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<float> d(-1, 1);
    for (int trial = 0; trial < 20; ++trial) {
      const int m = 1 + static_cast<int>(rng() % 40), n = 1 + static_cast<int>(rng() % 40),
                k = 1 + static_cast<int>(rng() % 40);
      MatrixF a(m, n), b(n, k);
      for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = d(rng);
      for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = d(rng);
      const MatrixF ref = matmul_reference(a, b);
      const MatrixF eig = (a.cast<double>() * b.cast<double>()).cast<float>();
      CHECK((ref - eig).cwiseAbs().maxCoeff() <= 1e-4f * static_cast<float>(n));
    }
    CHECK_THROWS_AS(matmul_reference(MatrixF(2, 3), MatrixF(2, 3)), DomainError);
  }

  TEST_CASE("Cannon is bit-exact on integer inputs for double and half buffering") {
    std::mt19937_64 rng(9);
    const MeshConfig cfg;
    struct Case {
      int p, m, n, k;
    };
    for (const Case& c : {Case{1, 8, 8, 8}, Case{2, 5, 7, 3}, Case{3, 16, 16, 16},
                          Case{4, 32, 32, 32}, Case{2, 32, 32, 32}, Case{8, 4, 4, 4}}) {
      const MatrixF a = random_integer_matrix(c.p * c.m, c.p * c.n, -4, 4, rng);
      const MatrixF b = random_integer_matrix(c.p * c.n, c.p * c.k, -4, 4, rng);
      const MatmulResult r = cannon_multicore(a, b, c.p, cfg);
      CHECK(r.c == matmul_reference(a, b));
      CHECK(r.rounds == c.p);
      CHECK(r.half_buffer == (c.m == 32 && c.n == 32 && c.k == 32 && c.p > 1));
    }
  }

  TEST_CASE("paged product is bit-exact and mostly transfer-bound") {
    std::mt19937_64 rng(4);
    const MeshConfig cfg;
    const MatrixF a = random_integer_matrix(64, 32, -3, 3, rng);
    const MatrixF b = random_integer_matrix(32, 64, -3, 3, rng);
    const OffchipResult r = offchip_matmul(a, b, 2, 16, cfg);
    CHECK(r.c == matmul_reference(a, b));
    CHECK(r.transfer_share + r.compute_share == doctest::Approx(1.0));
    CHECK(r.transfer_share > 0.5);
  }

  TEST_CASE("shape errors") {
    const MeshConfig cfg;
    CHECK_THROWS_AS(cannon_multicore(MatrixF(6, 6), MatrixF(6, 6), 4, cfg), ConfigError);
    CHECK_THROWS_AS(cannon_multicore(MatrixF(8, 8), MatrixF(4, 8), 2, cfg), DomainError);
    CHECK_THROWS_AS(offchip_matmul(MatrixF(30, 30), MatrixF(30, 30), 2, 8, cfg), ConfigError);
    CHECK_THROWS_AS(matmul_core_time(33, 8, 8, cfg.matmul), LayoutError);
  }

  TEST_CASE("half-buffer rotation keeps three distinct slots and returns home") {
    const HalfBufferState s0 = half_buffer_initial();
    CHECK(half_buffer_advance(half_buffer_advance(s0)) == s0);
    for (int parity = 0; parity < 2; ++parity) {
      const HalfBufferState s = half_buffer_state(parity);
      CHECK(std::set<std::uint32_t>{s.a_lo, s.a_hi, s.a_free}.size() == 3);
      CHECK(std::set<std::uint32_t>{s.b_lo, s.b_hi, s.b_free}.size() == 3);
      const auto plan = half_buffer_plan(parity);
      REQUIRE(plan.size() == 4);
      for (const HalfTransfer& t : plan) {
        CHECK(t.bytes == 2048);
        const std::uint32_t free = t.operand == 'A' ? s.a_free : s.b_free;
        // Stage one fills the spare slot; stage two never reads it.
        if (t.stage == 1) CHECK(t.dst == free);
        if (t.stage == 2) CHECK(t.src != free);
        CHECK(t.src != t.dst);
      }
      // Both halves of each operand move exactly once.
      std::set<std::pair<char, int>> moved;
      for (const HalfTransfer& t : plan) moved.insert({t.operand, t.half});
      CHECK(moved.size() == 4);
    }
  }

  TEST_CASE("core time includes per-row overheads") {
    const MatmulCostModel m;
    const double t = matmul_core_time(8, 8, 8, m);
    CHECK(t == doctest::Approx(8.0 * 8 * 8 + 8 * (m.row_loop_overhead_cycles + m.store_row_cycles_per_elem * 8)));
    CHECK(matmul_flops(8, 8, 8) == 1024);
  }
}
