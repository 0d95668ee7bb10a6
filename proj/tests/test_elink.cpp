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

#include <numeric>
#include <random>
#include <set>

#include "meshsim/elink.hpp"
#include "meshsim/errors.hpp"

using namespace meshsim;

TEST_SUITE("elink") {
  TEST_CASE("payload rate matches the configured link") {
    const MeshConfig cfg;
    const double bps = elink_payload_bytes_per_cycle(cfg.elink) * cfg.clock_hz;
    CHECK(bps == doctest::Approx(150e6).epsilon(1e-6));
  }

  TEST_CASE("shares of any active set sum to at most one and a lone writer gets all") {
    const MeshConfig cfg;
    const ArbitrationTree tree(cfg);
    for (int r = 0; r < 8; ++r) {
      for (int c = 0; c < 8; ++c) {
        const auto s = tree.shares({{r, c}});
        CHECK(s.at({r, c}) == doctest::Approx(1.0));
      }
    }
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
      std::set<Coord> set;
      const int n = 1 + static_cast<int>(rng() % 64);
      while (static_cast<int>(set.size()) < n) {
        set.insert({static_cast<int>(rng() % 8), static_cast<int>(rng() % 8)});
      }
      const std::vector<Coord> active(set.begin(), set.end());
      const auto s = tree.shares(active);
      double sum = 0;
      for (const auto& [c, v] : s) {
        CHECK(v >= 0);
        sum += v;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  TEST_CASE("slot arbitration converges to the fluid shares") {
    const MeshConfig cfg;
    const ArbitrationTree tree(cfg);
    const std::vector<Coord> w{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    const auto fluid = tree.shares(w);
    ArbitrationTree::Slots slots(tree, w);
    const std::uint64_t n = 100000;
    const auto counts = slots.run(n);
    REQUIRE(counts.size() == w.size());
    for (size_t i = 0; i < w.size(); ++i) {
      CHECK(static_cast<double>(counts[i]) / n == doctest::Approx(fluid.at(w[i])).epsilon(0.01));
    }
  }

  TEST_CASE("contention: one writer saturates, four share, far cores starve") {
    const MeshConfig cfg;
    const auto one = contention_experiment(cfg, {{0, 0}}, 2048, 0.5);
    REQUIRE(one.size() == 1);
    CHECK(one[0].utilization == doctest::Approx(1.0).epsilon(0.05));

    const auto four = contention_experiment(cfg, {{0, 0}, {0, 1}, {1, 0}, {1, 1}}, 2048, 0.5);
    double sum = 0;
    std::set<double> distinct;
    for (const auto& u : four) {
      sum += u.utilization;
      distinct.insert(u.utilization);
    }
    CHECK(sum >= 0.98);
    CHECK(distinct.size() == 4);

    std::vector<Coord> all;
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c) all.push_back({r, c});
    const auto many = contention_experiment(cfg, all, 2048, 0.5);
    int starved = 0;
    for (const auto& u : many) starved += u.completed_iterations == 0;
    CHECK(starved >= 20);
  }

  TEST_CASE("server hands out completions in time order") {
    const MeshConfig cfg;
    const ArbitrationTree tree(cfg);
    ELinkServer s(cfg, tree);
    const auto a = s.add(0.0, {0, 7}, 4096);
    const auto b = s.add(0.0, {1, 7}, 1024);
    double last = 0;
    std::set<std::uint64_t> done;
    while (auto next = s.next_completion()) {
      CHECK(next->first >= last);
      last = next->first;
      done.insert(next->second);
      s.finish(next->first, next->second);
    }
    CHECK(done == std::set<std::uint64_t>{a, b});
    CHECK(s.bytes_served() == 5120);
    // Total time is the combined payload at the link rate.
    CHECK(last == doctest::Approx(5120 / elink_payload_bytes_per_cycle(cfg.elink)));
  }
}
