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

#include <filesystem>
#include <fstream>

#include "meshsim/config.hpp"
#include "meshsim/errors.hpp"

using meshsim::ConfigError;
using meshsim::MeshConfig;

TEST_SUITE("config") {
  TEST_CASE("json round trip preserves every field") {
    MeshConfig c;
    c.clock_hz = 7.5e8;
    c.timing.hop_latency_cycles = 2.25;
    c.timing.dma_chain_setup_cycles = 17.0;
    c.elink.exit_rows = 3;
    c.stencil.stripe_width = 10;
    c.matmul.round_overhead_cycles = 123.5;
    const MeshConfig back = MeshConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
  }

  TEST_CASE("missing keys fall back to defaults") {
    const MeshConfig c = MeshConfig::from_json(nlohmann::json::object());
    CHECK(c.to_json() == MeshConfig::defaults().to_json());
  }

  TEST_CASE("shipped default.json matches the compiled defaults") {
    const auto path = std::filesystem::path(MESHSIM_SOURCE_DIR) / "config" / "default.json";
    REQUIRE(std::filesystem::exists(path));
    const MeshConfig c = MeshConfig::load(path.string());
    auto a = c.to_json(), b = MeshConfig::defaults().to_json();
    a.erase("version");
    b.erase("version");
    CHECK(a == b);
  }

  TEST_CASE("invalid values are rejected") {
    auto bad = [](auto mutate) {
      MeshConfig c;
      mutate(c);
      return c;
    };
    CHECK_THROWS_AS(bad([](MeshConfig& c) { c.rows = 0; }).validate(), ConfigError);
    CHECK_THROWS_AS(bad([](MeshConfig& c) { c.clock_hz = -1; }).validate(), ConfigError);
    CHECK_THROWS_AS(bad([](MeshConfig& c) { c.timing.dma_bytes_per_cycle = 0; }).validate(),
                    ConfigError);
    CHECK_THROWS_AS(bad([](MeshConfig& c) { c.timing.hop_latency_cycles = -1; }).validate(),
                    ConfigError);
    CHECK_THROWS_AS(bad([](MeshConfig& c) { c.matmul.round_overhead_cycles = -1; }).validate(),
                    ConfigError);
    CHECK_NOTHROW(MeshConfig{}.validate());
  }

  TEST_CASE("malformed file reports a ConfigError") {
    const auto p = std::filesystem::temp_directory_path() / "meshsim_bad_config.json";
    std::ofstream(p) << "{ not json";
    CHECK_THROWS_AS(MeshConfig::load(p.string()), ConfigError);
    std::filesystem::remove(p);
    CHECK_THROWS_AS(MeshConfig::load("/nonexistent/meshsim.json"), ConfigError);
  }
}
