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

/**
 * @file acceptance.cpp
 * @brief One PASS/FAIL line per acceptance criterion; exits non-zero on any FAIL.
 *
 * Criteria 2-7 are the mandatory reference checks of the default suite,
 * grouped by experiment. Criteria 1 and 8 run their own randomized checks.
 */

#include <algorithm>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "meshsim/bench.hpp"
#include "meshsim/errors.hpp"
#include "meshsim/matmul.hpp"
#include "meshsim/memory.hpp"
#include "meshsim/runtime.hpp"
#include "meshsim/stencil.hpp"

using namespace meshsim;

namespace {

struct Line {
  bool ok = true;
  std::vector<std::string> notes;
  void fail(std::string why) {
    ok = false;
    notes.push_back(std::move(why));
  }
};

// ---- criterion 1

Line random_stencils(const MeshConfig& cfg, int count) {
  Line out;
  std::mt19937_64 rng(0xA11CE);
  std::uniform_real_distribution<float> wd(-0.5f, 0.5f);
  int done = 0;
  while (done < count) {
    const int wr = 1 + static_cast<int>(rng() % 4), wc = 1 + static_cast<int>(rng() % 4);
    const int br = 1 + static_cast<int>(rng() % (96 / wr)), bc = 1 + static_cast<int>(rng() % (96 / wc));
    try {
      (void)stencil_block_layout(br, bc);
    } catch (const LayoutError&) {
      continue;  // block does not fit one scratchpad
    }
    const Grid g = random_integer_grid(br * wr, bc * wc, -16, 16, rng);
    const StencilWeights w{wd(rng), wd(rng), wd(rng), wd(rng), wd(rng)};
    const int iters = static_cast<int>(rng() % 11);
    StencilOptions opt;
    opt.wg_rows = wr;
    opt.wg_cols = wc;
    const StencilResult r = stencil_distributed(g, w, iters, opt, cfg);
    if (!(r.grid == stencil_reference(g, w, iters, wr, wc))) {
      out.fail("stencil mismatch: " + std::to_string(g.rows) + "x" + std::to_string(g.cols) +
               " on " + std::to_string(wr) + "x" + std::to_string(wc));
    }
    ++done;
  }
  out.notes.insert(out.notes.begin(), std::to_string(done) + " stencil configs");
  return out;
}

Line random_matmuls(const MeshConfig& cfg, int cannon, int paged) {
  Line out;
  std::mt19937_64 rng(0xB0B);
  for (int i = 0; i < cannon; ++i) {
    const int p = 1 + static_cast<int>(rng() % 8);
    int m, n, k;
    if (rng() % 4 == 0) {
      m = n = k = 32;  // half-buffer path
    } else {
      // Double-buffered blocks must fit; keep them modest.
      m = 1 + static_cast<int>(rng() % 20);
      n = 1 + static_cast<int>(rng() % 20);
      k = 1 + static_cast<int>(rng() % 20);
    }
    const MatrixF a = random_integer_matrix(p * m, p * n, -8, 8, rng);
    const MatrixF b = random_integer_matrix(p * n, p * k, -8, 8, rng);
    try {
      if (!(cannon_multicore(a, b, p, cfg).c == matmul_reference(a, b))) {
        out.fail("cannon mismatch p=" + std::to_string(p));
      }
    } catch (const LayoutError& e) {
      out.fail(std::string("cannon layout: ") + e.what());
    }
  }
  for (int i = 0; i < paged; ++i) {
    const int p = 1 + static_cast<int>(rng() % 4);
    const int block = 4 * (1 + static_cast<int>(rng() % 4));
    const int tile = p * block;
    const int m = tile * (1 + static_cast<int>(rng() % 3)), n = tile * (1 + static_cast<int>(rng() % 3)),
              k = tile * (1 + static_cast<int>(rng() % 3));
    const MatrixF a = random_integer_matrix(m, n, -8, 8, rng);
    const MatrixF b = random_integer_matrix(n, k, -8, 8, rng);
    if (!(offchip_matmul(a, b, p, block, cfg).c == matmul_reference(a, b))) {
      out.fail("paged mismatch p=" + std::to_string(p) + " block=" + std::to_string(block));
    }
  }
  out.notes.insert(out.notes.begin(), std::to_string(cannon) + " Cannon + " +
                                          std::to_string(paged) + " paged products");
  return out;
}

// ---- criterion 8

Task wait_unwritten(Ctx& ctx) { co_await ctx.flag_wait(0x7000, 1); }

Task barrier_phases(Ctx& ctx, Barrier* b, std::vector<std::vector<double>>* log, int phases,
                    std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ static_cast<unsigned>(ctx.coord().row * 8 + ctx.coord().col + 1));
  const int idx = ctx.group_row() * ctx.group().cols + ctx.group_col();
  for (int p = 0; p < phases; ++p) {
    co_await ctx.compute(static_cast<double>(rng() % 3000));
    (*log)[2 * p][idx] = ctx.now();
    co_await ctx.barrier_wait(*b);
    (*log)[2 * p + 1][idx] = ctx.now();
  }
}

Task locked_increment(Ctx& ctx, Mutex* m, int* inside, int* bad, int* total, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ static_cast<unsigned>(ctx.coord().row * 8 + ctx.coord().col + 1));
  for (int i = 0; i < 3; ++i) {
    co_await ctx.compute(static_cast<double>(rng() % 500));
    co_await ctx.mutex_lock(*m);
    if ((*inside)++ != 0) ++*bad;
    const int seen = *total;
    co_await ctx.compute(static_cast<double>(rng() % 50));
    *total = seen + 1;  // a lost update would show up as a short count
    --*inside;
    ctx.mutex_unlock(*m);
  }
}

Line engine_checks(const std::vector<bench::ExperimentResult>& first, const MeshConfig& cfg) {
  Line out;
  // Determinism: a second full suite must serialize byte for byte the same.
  const auto second = bench::run_suite(cfg);
  if (first.size() != second.size()) out.fail("suite sizes differ");
  for (std::size_t i = 0; i < std::min(first.size(), second.size()); ++i) {
    if (bench::to_csv(first[i]) != bench::to_csv(second[i]) ||
        bench::to_json(first[i]).dump() != bench::to_json(second[i]).dump()) {
      out.fail("non-deterministic output: " + first[i].experiment);
    }
  }
  {
    auto logged = [&] {
      std::ostringstream os;
      std::mt19937_64 rng(3);
      StencilOptions opt;
      opt.wg_rows = opt.wg_cols = 4;
      opt.log = &os;
      stencil_distributed(random_integer_grid(64, 64, -4, 4, rng), {}, 3, opt, cfg);
      return os.str();
    };
    if (logged() != logged()) out.fail("event logs differ between identical runs");
  }

  // Deadlock detection.
  try {
    Simulator sim(cfg);
    host_run(sim, {{3, 3}, 1, 1}, [](Ctx& ctx) { return wait_unwritten(ctx); });
    out.fail("flag wait without a writer did not deadlock");
  } catch (const DeadlockError& e) {
    if (e.blocked().size() != 1 || !(e.blocked()[0].core == Coord{3, 3})) {
      out.fail("deadlock report names the wrong cores");
    }
  }

  // Randomized barrier and mutex suites.
  int barrier_runs = 0, mutex_runs = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    std::mt19937_64 rng(seed);
    const int rows = 1 + static_cast<int>(rng() % 8), cols = 1 + static_cast<int>(rng() % 8);
    const Workgroup wg{{static_cast<int>(rng() % (9 - rows)), static_cast<int>(rng() % (9 - cols))},
                       rows, cols};
    const int phases = 1 + static_cast<int>(rng() % 5);
    std::vector<std::vector<double>> log(2 * phases, std::vector<double>(wg.size()));
    Barrier b(wg);
    Simulator s1(cfg);
    host_run(s1, wg, [&](Ctx& ctx) { return barrier_phases(ctx, &b, &log, phases, seed); });
    for (int p = 0; p < phases; ++p) {
      if (*std::min_element(log[2 * p + 1].begin(), log[2 * p + 1].end()) <
          *std::max_element(log[2 * p].begin(), log[2 * p].end())) {
        out.fail("barrier released early, seed " + std::to_string(seed));
      }
    }
    ++barrier_runs;

    Mutex m({static_cast<int>(rng() % 8), static_cast<int>(rng() % 8)}, 0x7F00);
    int inside = 0, bad = 0, total = 0;
    Simulator s2(cfg);
    host_run(s2, wg, [&](Ctx& ctx) { return locked_increment(ctx, &m, &inside, &bad, &total, seed); });
    if (bad || total != 3 * wg.size()) out.fail("mutex exclusion broken, seed " + std::to_string(seed));
    ++mutex_runs;
  }

  // Exhaustive address-map round trip.
  const AddressMap map(cfg);
  std::uint64_t words = 0;
  for (int r = 0; r < cfg.rows; ++r) {
    for (int c = 0; c < cfg.cols; ++c) {
      for (std::uint32_t off = 0; off < static_cast<std::uint32_t>(cfg.local_bytes()); ++off) {
        const Owner o = map.decode(map.global({r, c}, off));
        if (o.kind != Owner::Kind::Core || !(o.core == Coord{r, c}) || o.offset != off) {
          out.fail("address map round trip");
          r = cfg.rows;
          c = cfg.cols;
          break;
        }
        ++words;
      }
    }
  }
  out.notes.insert(out.notes.begin(),
                   "2 suites identical, deadlock detected, " + std::to_string(barrier_runs) +
                       " barrier + " + std::to_string(mutex_runs) + " mutex schedules, " +
                       std::to_string(words) + " addresses round-tripped");
  return out;
}

// ---- criteria 2-7 from the reference checks

Line from_checks(const std::vector<bench::CheckOutcome>& checks,
                 const std::function<bool(const std::string&)>& select) {
  Line out;
  int used = 0;
  for (const auto& c : checks) {
    if (!c.ref->mandatory || !select(c.ref->id)) continue;
    ++used;
    if (c.verdict != bench::Verdict::Pass) {
      std::ostringstream os;
      os << c.ref->id << " " << bench::verdict_name(c.verdict);
      if (c.measured) os << " measured " << *c.measured;
      os << " expected " << c.ref->value << " " << c.ref->tolerance.describe();
      out.fail(os.str());
    }
  }
  if (used == 0) out.fail("no checks selected");
  out.notes.insert(out.notes.begin(), std::to_string(used) + " reference checks");
  return out;
}

bool starts(const std::string& s, std::string_view p) { return s.rfind(p, 0) == 0; }

}  // namespace

int main() {
  const MeshConfig cfg = MeshConfig::defaults();
  const auto suite = bench::run_suite(cfg);
  const auto checks = bench::evaluate(suite);

  struct Criterion {
    int id;
    const char* name;
    std::function<Line()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "exactness",
       [&] {
         Line a = random_stencils(cfg, 200);
         Line b = random_matmuls(cfg, 170, 40);
         Line c = from_checks(checks, [](const std::string& id) {
           return id == "stencil.exact" || id == "matmul.exact";
         });
         Line all;
         for (Line* l : {&a, &b, &c}) {
           all.ok = all.ok && l->ok;
           all.notes.insert(all.notes.end(), l->notes.begin(), l->notes.end());
         }
         return all;
       }},
      {2, "latency vs distance",
       [&] { return from_checks(checks, [](const std::string& id) { return starts(id, "latency.to_"); }); }},
      {3, "transfer bandwidth",
       [&] { return from_checks(checks, [](const std::string& id) { return starts(id, "bandwidth."); }); }},
      {4, "eLink contention",
       [&] { return from_checks(checks, [](const std::string& id) { return starts(id, "elink."); }); }},
      {5, "stencil throughput",
       [&] {
         return from_checks(checks, [](const std::string& id) {
           return starts(id, "stencil.") && id != "stencil.exact";
         });
       }},
      {6, "matrix multiply",
       [&] {
         return from_checks(checks, [](const std::string& id) {
           return starts(id, "matmul.") && id != "matmul.exact";
         });
       }},
      {7, "scaling",
       [&] {
         return from_checks(checks, [](const std::string& id) {
           return starts(id, "weak.") || starts(id, "strong.");
         });
       }},
      {8, "engine", [&] { return engine_checks(suite, cfg); }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    Line l;
    try {
      l = c.run();
    } catch (const std::exception& e) {
      l.fail(std::string("exception: ") + e.what());
    }
    failed += !l.ok;
    std::printf("[%s] criterion %d (%s): %s\n", l.ok ? "PASS" : "FAIL", c.id, c.name,
                l.notes.empty() ? "" : l.notes.front().c_str());
    for (std::size_t i = 1; i < l.notes.size(); ++i) std::printf("       %s\n", l.notes[i].c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
