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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "meshsim/bench.hpp"
#include "meshsim/errors.hpp"

using namespace meshsim;
using namespace meshsim::bench;

namespace {

ExperimentResult synthetic() {
  ExperimentResult r;
  r.experiment = "latency";
  r.spec = {{"kind", "latency"}};
  r.columns = {"experiment", "label", "count", "value", "note"};
  r.rows.push_back({std::string("latency"), std::string("a,b"), std::int64_t{3}, 0.1,
                    std::monostate{}});
  r.rows.push_back({std::string("latency"), std::string("say \"hi\"\nthere"), std::int64_t{-7},
                    1e-300, std::string("42")});
  r.rows.push_back({std::string("latency"), std::string(""), std::int64_t{0}, 3.0,
                    std::string("1.5e3")});
  return r;
}

ExperimentSpec spec_of(Kind k) {
  ExperimentSpec s;
  s.kind = k;
  return s;
}

const CheckOutcome& find(const std::vector<CheckOutcome>& v, std::string_view id) {
  for (const auto& c : v) {
    if (c.ref->id == id) return c;
  }
  throw std::runtime_error("no check " + std::string(id));
}

}  // namespace

TEST_SUITE("bench") {
  TEST_CASE("CSV round trip keeps types, quoting and exact doubles") {
    const ExperimentResult r = synthetic();
    const std::string csv = to_csv(r);
    CHECK(csv.find("\r\n") != std::string::npos);
    const ExperimentResult back = from_csv(csv);
    CHECK(back == r);
    CHECK(to_csv(back) == csv);
  }

  TEST_CASE("JSON round trip") {
    const ExperimentResult r = synthetic();
    CHECK(from_json(to_json(r)) == r);
    CHECK(from_json(nlohmann::json::parse(to_json(r).dump())) == r);
  }

  TEST_CASE("malformed CSV is a usage error") {
    CHECK_THROWS_AS(from_csv(""), UsageError);
    CHECK_THROWS_AS(from_csv("experiment,a\r\nlatency\r\n"), UsageError);
    CHECK_THROWS_AS(from_csv("a,b\r\n1,2\r\n"), UsageError);
  }

  TEST_CASE("load_results reads CSV files and JSON arrays") {
    const auto dir = std::filesystem::temp_directory_path() / "meshsim_load_test";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "x.csv", std::ios::binary) << to_csv(synthetic());
    std::ofstream(dir / "x.json") << nlohmann::json::array({to_json(synthetic())}).dump();
    CHECK(load_results((dir / "x.csv").string()).front() == synthetic());
    CHECK(load_results((dir / "x.json").string()).front() == synthetic());
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("every reference entry names its source and a usable tolerance") {
    std::set<std::string> ids;
    for (const ReferenceEntry& e : reference_table()) {
      CHECK_MESSAGE(!e.provenance.empty(), e.id);
      CHECK_MESSAGE(!e.description.empty(), e.id);
      CHECK_MESSAGE(ids.insert(e.id).second, "duplicate " << e.id);
      CHECK_NOTHROW(parse_kind(e.experiment));
      CHECK(!e.tolerance.describe().empty());
      // Relative checks accept their own value.
      if (e.tolerance.kind == Tolerance::Kind::Relative) CHECK(e.tolerance.accepts(e.value, e.value));
    }
    CHECK(ids.size() > 40);
    CHECK_THROWS(reference("no.such.check"));
  }

  TEST_CASE("tolerance kinds") {
    CHECK(Tolerance{Tolerance::Kind::Relative, 0.05}.accepts(104.9, 100));
    CHECK_FALSE(Tolerance{Tolerance::Kind::Relative, 0.05}.accepts(105.1, 100));
    CHECK(Tolerance{Tolerance::Kind::Absolute, 0.02}.accepts(0.205, 0.187));
    CHECK(Tolerance{Tolerance::Kind::Range, 0.97, 1.14}.accepts(1.0, 0));
    CHECK_FALSE(Tolerance{Tolerance::Kind::Range, 0.97, 1.14}.accepts(1.15, 0));
    CHECK(Tolerance{Tolerance::Kind::AtLeast, 1.9}.accepts(1.9, 0));
    CHECK_FALSE(Tolerance{Tolerance::Kind::AtMost, 1.10}.accepts(1.2, 0));
  }

  TEST_CASE("checks without data are skipped, not failed") {
    const MeshConfig cfg;
    const ExperimentResult lat = run_experiment(spec_of(Kind::Latency), cfg);
    const Report rep = make_report({lat});
    CHECK(rep.mandatory_ok());
    CHECK(rep.count(Verdict::Fail) == 0);
    CHECK(rep.count(Verdict::Pass) >= 11);
    CHECK(find(rep.checks, "stencil.no_comm").verdict == Verdict::Skipped);
    CHECK(find(rep.checks, "latency.to_0_1").verdict == Verdict::Pass);
    const Report none = make_report({});
    CHECK(none.count(Verdict::Skipped) == static_cast<int>(reference_table().size()));
  }

  TEST_CASE("a corrupted constant fails only the checks that depend on it") {
    MeshConfig bad;
    bad.timing.hop_latency_cycles *= 4;  // latency slope now far too steep
    const auto lat = run_experiment(spec_of(Kind::Latency), bad);
    const auto checks = evaluate({lat, run_experiment(spec_of(Kind::Matmul), bad)});
    CHECK(find(checks, "latency.to_7_7").verdict == Verdict::Fail);
    CHECK(find(checks, "latency.spread").verdict == Verdict::Fail);
    for (int n : {8, 16, 32}) {
      // Single-core matmul never touches the mesh.
      CHECK(find(checks, "matmul.single." + std::to_string(n)).verdict == Verdict::Pass);
    }
    CHECK(find(checks, "matmul.exact").verdict == Verdict::Pass);
  }

  TEST_CASE("spec validation") {
    const MeshConfig cfg;
    ExperimentSpec s = spec_of(Kind::Stencil);
    s.writers = 4;
    CHECK_THROWS_AS(s.validate(cfg), UsageError);
    s = spec_of(Kind::Stencil);
    s.wg_rows = 3;
    s.wg_cols = 3;
    s.size = 100;
    CHECK_THROWS_AS(s.validate(cfg), UsageError);  // 100 % 3
    s.size = 99;
    CHECK_NOTHROW(s.validate(cfg));
    s = spec_of(Kind::Matmul);
    s.wg_rows = 2;
    s.wg_cols = 4;
    s.size = 64;
    CHECK_THROWS_AS(s.validate(cfg), UsageError);
    s = spec_of(Kind::ELink);
    s.writers = 65;
    CHECK_THROWS_AS(s.validate(cfg), UsageError);
    s = spec_of(Kind::Bandwidth);
    s.size = 6;
    CHECK_THROWS_AS(s.validate(cfg), UsageError);
    CHECK_THROWS_AS(parse_kind("nope"), UsageError);
    for (Kind k : all_kinds()) CHECK(parse_kind(kind_name(k)) == k);
  }

  TEST_CASE("custom experiments honour their parameters") {
    const MeshConfig cfg;
    ExperimentSpec s = spec_of(Kind::Matmul);
    s.wg_rows = s.wg_cols = 2;
    s.size = 32;
    const auto r = run_experiment(s, cfg);
    REQUIRE(r.rows.size() >= 1);
    CHECK(r.num(0, "cores") == 4);
    CHECK(r.num(0, "size") == 32);
    CHECK(r.num(0, "exact") == 1);
  }

  TEST_CASE("charts exist for plotted experiments") {
    const MeshConfig cfg;
    const auto svg = to_svg(run_experiment(spec_of(Kind::Latency), cfg));
    REQUIRE(svg);
    CHECK(svg->find("<svg") != std::string::npos);
  }

  TEST_CASE("calibration reproduces the shipped constants") {
    const CalibrationFit fit = calibrate();
    const MeshConfig d;
    auto near = [](double a, double b) { return std::abs(a - b) <= 1e-5 * std::max(1.0, std::abs(b)); };
    CHECK(near(fit.config.timing.hop_latency_cycles, d.timing.hop_latency_cycles));
    CHECK(near(fit.config.timing.direct_write_issue_cycles, d.timing.direct_write_issue_cycles));
    CHECK(near(fit.config.timing.dma_bytes_per_cycle, d.timing.dma_bytes_per_cycle));
    CHECK(near(fit.config.elink.transaction_overhead_factor, d.elink.transaction_overhead_factor));
    CHECK(near(fit.config.matmul.row_loop_overhead_cycles, d.matmul.row_loop_overhead_cycles));
    CHECK(near(fit.config.matmul.store_row_cycles_per_elem, d.matmul.store_row_cycles_per_elem));
    CHECK(std::abs(fit.config.matmul.round_overhead_cycles - d.matmul.round_overhead_cycles) < 0.01);
    CHECK(fit.detail.is_object());
  }
}
