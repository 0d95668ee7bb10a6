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
 * @file config.hpp
 * @brief Machine description and calibration constants.
 *
 * Defaults are the shipped calibration; config/default.json holds the same
 * values and `meshsim calibrate` regenerates them.
 */

#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

namespace meshsim {

struct TimingModel {
  double hop_latency_cycles = 1.4402462380300964;
  double direct_write_issue_cycles = 2.312313269493843;  // per 32-bit word
  double direct_write_setup_cycles = 85.0;
  double dma_setup_cycles = 230.0;
  double dma_chain_setup_cycles = 10.0;  // each chained segment after the first
  double dma_bytes_per_cycle = 2.0e9 / 6.0e8;
  double dma_row_overhead_cycles = 0.0;  // per outer row after the first
  double sync_flag_poll_cycles = 20.0;

  void validate() const;
};

struct ELinkConfig {
  double link_bytes_per_cycle = 1.0;
  double transaction_overhead_factor = 4.0;
  int exit_row = 0;
  int exit_col = 7;
  int exit_rows = 4;         // edge ports the link serves, counted from exit_row
  double port_decay = 0.95;  // weight ratio between adjacent edge ports
  int local_weight = 3;      // router share for the locally injected stream
  int forward_weight = 1;    // router share for traffic already on the network

  void validate() const;
};

struct StencilCostModel {
  int stripe_width = 20;
  double fmadds_per_stripe_pair = 200.0;
  double loop_penalty_cycles = 4.5;
  double flops_per_fmadd = 2.0;
  double stripe_setup_cycles = 316.0;
  double sweep_overhead_cycles = 0.0;

  void validate() const;
};

struct MatmulCostModel {
  double cycles_per_macro = 32.0;
  double flops_per_macro = 64.0;
  double row_loop_overhead_cycles = 20.801331022963424;
  double store_row_cycles_per_elem = 0.6861221808840746;
  double round_overhead_cycles = 675.6297689904962;  // per Cannon round, outside the block kernel
  int max_block = 32;

  void validate() const;
};

struct MeshConfig {
  int rows = 8;
  int cols = 8;
  double clock_hz = 6.0e8;
  int banks = 4;
  int bank_bytes = 8192;
  std::uint64_t shared_bytes = 32ull << 20;
  std::uint64_t shared_base = 0x8E000000ull;

  TimingModel timing;
  ELinkConfig elink;
  StencilCostModel stencil;
  MatmulCostModel matmul;

  void validate() const;

  [[nodiscard]] int local_bytes() const { return banks * bank_bytes; }
  [[nodiscard]] double ns_per_cycle() const { return 1.0e9 / clock_hz; }
  [[nodiscard]] double cycles_to_ns(double c) const { return c * ns_per_cycle(); }
  [[nodiscard]] double cycles_to_s(double c) const { return c / clock_hz; }

  static MeshConfig defaults() { return MeshConfig{}; }
  static MeshConfig from_json(const nlohmann::json& j);
  static MeshConfig load(const std::string& path);
  [[nodiscard]] nlohmann::json to_json() const;
};

}  // namespace meshsim
