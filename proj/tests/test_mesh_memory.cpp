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

#include "meshsim/errors.hpp"
#include "meshsim/memory.hpp"
#include "meshsim/mesh.hpp"

using namespace meshsim;

TEST_SUITE("mesh") {
  TEST_CASE("routes go column first and visit each hop once") {
    const MeshConfig cfg;
    for (int a = 0; a < 64; ++a) {
      for (int b = 0; b < 64; ++b) {
        const Coord s{a / 8, a % 8}, d{b / 8, b % 8};
        const auto path = route(s, d, cfg);
        REQUIRE(static_cast<int>(path.size()) == manhattan_distance(s, d));
        Coord prev = s;
        bool turned = false;
        for (const Coord& c : path) {
          CHECK(manhattan_distance(prev, c) == 1);
          if (c.row != prev.row) turned = true;
          if (turned) CHECK(c.col == d.col);
          prev = c;
        }
        CHECK(prev == d);
      }
    }
  }

  TEST_CASE("distance is symmetric and bounds are checked") {
    const MeshConfig cfg;
    CHECK(manhattan_distance({0, 0}, {7, 7}, cfg) == 14);
    CHECK(manhattan_distance({2, 5}, {6, 1}) == manhattan_distance({6, 1}, {2, 5}));
    CHECK_THROWS_AS(manhattan_distance({0, 0}, {8, 0}, cfg), BoundsError);
    CHECK_THROWS_AS(route({-1, 0}, {0, 0}, cfg), BoundsError);
  }

  TEST_CASE("transfer time grows with size and distance") {
    const TimingModel t;
    for (auto m : {TransferMethod::DirectWrite, TransferMethod::Dma}) {
      double prev = 0;
      for (std::uint64_t b = 4; b <= 65536; b *= 2) {
        const double c = transfer_cycles(m, b, 1, t);
        CHECK(c > prev);
        prev = c;
        CHECK(transfer_cycles(m, b, 5, t) > transfer_cycles(m, b, 4, t));
      }
    }
    CHECK_THROWS_AS(transfer_cycles(TransferMethod::Dma, 0, 1, t), DomainError);
  }

  TEST_CASE("transfer_time converts cycles at the configured clock") {
    MeshConfig cfg;
    TransferRequest r{{0, 0}, {3, 4}, 80, TransferMethod::DirectWrite};
    const double c = transfer_cycles(r.method, 80, 7, cfg.timing);
    CHECK(transfer_time(r, cfg) == doctest::Approx(c / 0.6));
  }

  TEST_CASE("crossover matches a brute-force scan") {
    auto brute = [](const TimingModel& t) -> std::optional<std::uint64_t> {
      for (std::uint64_t b = 4; b <= (1u << 20); b += 4) {
        if (transfer_cycles(TransferMethod::Dma, b, 1, t) <
            transfer_cycles(TransferMethod::DirectWrite, b, 1, t))
          return b;
      }
      return std::nullopt;
    };
    TimingModel t;
    CHECK(crossover_bytes(t) == brute(t));
    const auto x = crossover_bytes(t);
    REQUIRE(x);
    CHECK(*x >= 256);
    CHECK(*x <= 1024);
    t.dma_setup_cycles = 20;
    CHECK(crossover_bytes(t) == brute(t));
    t.dma_bytes_per_cycle = 0.5;  // DMA never wins
    CHECK_FALSE(crossover_bytes(t).has_value());
  }
}

TEST_SUITE("memory") {
  TEST_CASE("every local word of every core round-trips through the address map") {
    const MeshConfig cfg;
    const AddressMap m(cfg);
    for (int r = 0; r < cfg.rows; ++r) {
      for (int c = 0; c < cfg.cols; ++c) {
        for (std::uint32_t off = 0; off < static_cast<std::uint32_t>(cfg.local_bytes()); ++off) {
          const Owner o = m.decode(m.global({r, c}, off));
          if (o.kind != Owner::Kind::Core || o.core != Coord{r, c} || o.offset != off) {
            FAIL("round trip failed at core " << r << "," << c << " offset " << off);
          }
        }
        CHECK_THROWS_AS((void)m.global({r, c}, static_cast<std::uint32_t>(cfg.local_bytes())),
                        AddressError);
        // The unbacked tail of the 1 MB window is unmapped.
        CHECK_THROWS_AS((void)m.decode(m.global({r, c}, 0) + cfg.local_bytes()), AddressError);
      }
    }
  }

  TEST_CASE("shared region round trip and limits") {
    const MeshConfig cfg;
    const AddressMap m(cfg);
    for (std::uint64_t off = 0; off < cfg.shared_bytes; off += 4093) {
      const Owner o = m.decode(m.shared(off));
      REQUIRE(o.is_shared());
      REQUIRE(o.offset == off);
    }
    CHECK(m.decode(m.shared(cfg.shared_bytes - 1)).offset == cfg.shared_bytes - 1);
    CHECK_THROWS_AS((void)m.shared(cfg.shared_bytes), AddressError);
    CHECK_THROWS_AS((void)m.decode(cfg.shared_base + cfg.shared_bytes), AddressError);
  }

  TEST_CASE("ranges may not leave their owner") {
    const MeshConfig cfg;
    const AddressMap m(cfg);
    CHECK_NOTHROW((void)m.decode_range(m.global({1, 1}, 0), cfg.local_bytes()));
    CHECK_THROWS_AS((void)m.decode_range(m.global({1, 1}, 8), cfg.local_bytes()), AddressError);
    CHECK_THROWS_AS((void)m.decode_range(m.shared(cfg.shared_bytes - 4), 8), AddressError);
  }

  TEST_CASE("local addresses resolve against the calling core") {
    const MeshConfig cfg;
    const AddressMap m(cfg);
    const Owner o = m.resolve(0x100, 4, {3, 6});
    CHECK(o.core == Coord{3, 6});
    CHECK(o.offset == 0x100);
  }

  TEST_CASE("memory system stores typed values in cores and shared memory") {
    const MeshConfig cfg;
    MemorySystem mem(cfg);
    std::mt19937_64 rng(7);
    for (int i = 0; i < 1000; ++i) {
      const Coord c{static_cast<int>(rng() % 8), static_cast<int>(rng() % 8)};
      const std::uint32_t off = static_cast<std::uint32_t>(rng() % (cfg.local_bytes() / 4)) * 4;
      const auto v = static_cast<std::uint32_t>(rng());
      mem.store(mem.map().global(c, off), v);
      CHECK(mem.load<std::uint32_t>(mem.map().global(c, off)) == v);
      const std::uint64_t so = (rng() % (cfg.shared_bytes / 8)) * 8;
      const double d = static_cast<double>(rng() % 100000) / 7.0;
      mem.store(mem.map().shared(so), d);
      CHECK(mem.load<double>(mem.map().shared(so)) == d);
    }
    // Untouched shared memory reads as zero.
    CHECK(mem.load<std::uint64_t>(mem.map().shared(cfg.shared_bytes - 8)) == 0);
  }
}
