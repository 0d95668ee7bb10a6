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

#include "meshsim/config.hpp"

#include <fstream>

#include "meshsim/errors.hpp"

namespace meshsim {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ConfigError(what);
}

// Reads `key` into `out` when present; absent keys keep their default.
template <typename T>
void opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void TimingModel::validate() const {
  require(hop_latency_cycles >= 0, "timing.hop_latency_cycles must be >= 0");
  require(direct_write_issue_cycles >= 0, "timing.direct_write_issue_cycles must be >= 0");
  require(direct_write_setup_cycles >= 0, "timing.direct_write_setup_cycles must be >= 0");
  require(dma_setup_cycles >= 0, "timing.dma_setup_cycles must be >= 0");
  require(dma_chain_setup_cycles >= 0, "timing.dma_chain_setup_cycles must be >= 0");
  require(dma_bytes_per_cycle > 0 && dma_bytes_per_cycle <= 8,
          "timing.dma_bytes_per_cycle must be in (0, 8]");
  require(dma_row_overhead_cycles >= 0, "timing.dma_row_overhead_cycles must be >= 0");
  require(sync_flag_poll_cycles >= 0, "timing.sync_flag_poll_cycles must be >= 0");
}

void ELinkConfig::validate() const {
  require(link_bytes_per_cycle > 0, "elink.link_bytes_per_cycle must be > 0");
  require(transaction_overhead_factor >= 1, "elink.transaction_overhead_factor must be >= 1");
  require(exit_rows >= 1, "elink.exit_rows must be >= 1");
  require(port_decay > 0 && port_decay <= 1, "elink.port_decay must be in (0, 1]");
  require(local_weight > 0 && forward_weight > 0, "elink router weights must be positive");
}

void StencilCostModel::validate() const {
  require(stripe_width > 0, "stencil.stripe_width must be > 0");
  require(fmadds_per_stripe_pair > 0, "stencil.fmadds_per_stripe_pair must be > 0");
  require(loop_penalty_cycles >= 0 && stripe_setup_cycles >= 0 && sweep_overhead_cycles >= 0,
          "stencil overheads must be >= 0");
}

void MatmulCostModel::validate() const {
  require(cycles_per_macro > 0 && flops_per_macro > 0, "matmul macro costs must be > 0");
  require(flops_per_macro <= 2 * cycles_per_macro, "matmul macro exceeds 2 flops/cycle");
  require(row_loop_overhead_cycles >= 0 && store_row_cycles_per_elem >= 0 &&
              round_overhead_cycles >= 0,
          "matmul overheads must be >= 0");
  require(max_block > 0, "matmul.max_block must be > 0");
}

void MeshConfig::validate() const {
  require(rows >= 1 && cols >= 1, "mesh must have at least one core");
  require(rows <= 32 && cols <= 32, "mesh dimensions exceed the core-id space");
  require(clock_hz > 0, "mesh.clock_hz must be > 0");
  require(banks >= 1 && bank_bytes >= 1 && banks * bank_bytes <= (1 << 20),
          "scratchpad geometry out of range");
  require(shared_bytes > 0, "shared region must be non-empty");
  timing.validate();
  elink.validate();
  require(elink.exit_row >= 0 && elink.exit_row < rows && elink.exit_col >= 0 &&
              elink.exit_col < cols,
          "elink exit outside the mesh");
  stencil.validate();
  matmul.validate();
}

MeshConfig MeshConfig::from_json(const nlohmann::json& j) {
  MeshConfig c;
  try {
    if (j.contains("mesh")) {
      const auto& m = j["mesh"];
      opt(m, "rows", c.rows);
      opt(m, "cols", c.cols);
      opt(m, "clock_hz", c.clock_hz);
      opt(m, "banks", c.banks);
      opt(m, "bank_bytes", c.bank_bytes);
      opt(m, "shared_bytes", c.shared_bytes);
      opt(m, "shared_base", c.shared_base);
    }
    if (j.contains("timing")) {
      const auto& t = j["timing"];
      opt(t, "hop_latency_cycles", c.timing.hop_latency_cycles);
      opt(t, "direct_write_issue_cycles", c.timing.direct_write_issue_cycles);
      opt(t, "direct_write_setup_cycles", c.timing.direct_write_setup_cycles);
      opt(t, "dma_setup_cycles", c.timing.dma_setup_cycles);
      opt(t, "dma_chain_setup_cycles", c.timing.dma_chain_setup_cycles);
      opt(t, "dma_bytes_per_cycle", c.timing.dma_bytes_per_cycle);
      opt(t, "dma_row_overhead_cycles", c.timing.dma_row_overhead_cycles);
      opt(t, "sync_flag_poll_cycles", c.timing.sync_flag_poll_cycles);
    }
    if (j.contains("elink")) {
      const auto& e = j["elink"];
      opt(e, "link_bytes_per_cycle", c.elink.link_bytes_per_cycle);
      opt(e, "transaction_overhead_factor", c.elink.transaction_overhead_factor);
      opt(e, "exit_row", c.elink.exit_row);
      opt(e, "exit_col", c.elink.exit_col);
      opt(e, "exit_rows", c.elink.exit_rows);
      opt(e, "port_decay", c.elink.port_decay);
      opt(e, "local_weight", c.elink.local_weight);
      opt(e, "forward_weight", c.elink.forward_weight);
    }
    if (j.contains("cost_models")) {
      const auto& cm = j["cost_models"];
      if (cm.contains("stencil")) {
        const auto& s = cm["stencil"];
        opt(s, "stripe_width", c.stencil.stripe_width);
        opt(s, "fmadds_per_stripe_pair", c.stencil.fmadds_per_stripe_pair);
        opt(s, "loop_penalty_cycles", c.stencil.loop_penalty_cycles);
        opt(s, "flops_per_fmadd", c.stencil.flops_per_fmadd);
        opt(s, "stripe_setup_cycles", c.stencil.stripe_setup_cycles);
        opt(s, "sweep_overhead_cycles", c.stencil.sweep_overhead_cycles);
      }
      if (cm.contains("matmul")) {
        const auto& m = cm["matmul"];
        opt(m, "cycles_per_macro", c.matmul.cycles_per_macro);
        opt(m, "flops_per_macro", c.matmul.flops_per_macro);
        opt(m, "row_loop_overhead_cycles", c.matmul.row_loop_overhead_cycles);
        opt(m, "store_row_cycles_per_elem", c.matmul.store_row_cycles_per_elem);
        opt(m, "round_overhead_cycles", c.matmul.round_overhead_cycles);
        opt(m, "max_block", c.matmul.max_block);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

MeshConfig MeshConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse config " + path + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json MeshConfig::to_json() const {
  nlohmann::json j;
  j["version"] = 1;
  j["mesh"] = {{"rows", rows},
               {"cols", cols},
               {"clock_hz", clock_hz},
               {"banks", banks},
               {"bank_bytes", bank_bytes},
               {"shared_bytes", shared_bytes},
               {"shared_base", shared_base}};
  j["timing"] = {{"hop_latency_cycles", timing.hop_latency_cycles},
                 {"direct_write_issue_cycles", timing.direct_write_issue_cycles},
                 {"direct_write_setup_cycles", timing.direct_write_setup_cycles},
                 {"dma_setup_cycles", timing.dma_setup_cycles},
                 {"dma_chain_setup_cycles", timing.dma_chain_setup_cycles},
                 {"dma_bytes_per_cycle", timing.dma_bytes_per_cycle},
                 {"dma_row_overhead_cycles", timing.dma_row_overhead_cycles},
                 {"sync_flag_poll_cycles", timing.sync_flag_poll_cycles}};
  j["elink"] = {{"link_bytes_per_cycle", elink.link_bytes_per_cycle},
                {"transaction_overhead_factor", elink.transaction_overhead_factor},
                {"exit_row", elink.exit_row},
                {"exit_col", elink.exit_col},
                {"exit_rows", elink.exit_rows},
                {"port_decay", elink.port_decay},
                {"local_weight", elink.local_weight},
                {"forward_weight", elink.forward_weight}};
  j["cost_models"]["stencil"] = {{"stripe_width", stencil.stripe_width},
                                 {"fmadds_per_stripe_pair", stencil.fmadds_per_stripe_pair},
                                 {"loop_penalty_cycles", stencil.loop_penalty_cycles},
                                 {"flops_per_fmadd", stencil.flops_per_fmadd},
                                 {"stripe_setup_cycles", stencil.stripe_setup_cycles},
                                 {"sweep_overhead_cycles", stencil.sweep_overhead_cycles}};
  j["cost_models"]["matmul"] = {{"cycles_per_macro", matmul.cycles_per_macro},
                                {"flops_per_macro", matmul.flops_per_macro},
                                {"row_loop_overhead_cycles", matmul.row_loop_overhead_cycles},
                                {"store_row_cycles_per_elem", matmul.store_row_cycles_per_elem},
                                {"round_overhead_cycles", matmul.round_overhead_cycles},
                                {"max_block", matmul.max_block}};
  return j;
}

}  // namespace meshsim
