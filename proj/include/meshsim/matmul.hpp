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
 * @file matmul.hpp
 * @brief Single-core block kernel, on-chip Cannon rotation and off-chip paging.
 *
 * Cannon runs on a P x P workgroup at the mesh origin. The host places the
 * pre-skewed blocks (core (i,j) starts with A(i,(i+j)%P) and B((i+j)%P,j)),
 * then P compute rounds follow, each ending with A moving one core west and B
 * one core north. Blocks smaller than 32x32 are double
 * buffered. Full 32x32 blocks use the half-buffer rotation, which moves 2 KB
 * halves through a single spare half-slot per operand.
 */

#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "meshsim/config.hpp"
#include "meshsim/grid.hpp"

namespace meshsim {

/// C = A * B with each output accumulated by fma in increasing inner index.
MatrixF matmul_reference(const MatrixF& a, const MatrixF& b);

/// c (m x k, row-major) += A * B where A and B are given as row pointers.
void matmul_block(const float* const* a_rows, const float* const* b_rows, float* c, int m, int n,
                  int k);

/// Cycles for an m x n by n x k block product. Throws LayoutError past capacity.
double matmul_core_time(int m, int n, int k, const MatmulCostModel& model);
inline double matmul_flops(double m, double n, double k) { return 2.0 * m * n * k; }

/// Pointer state of the half-buffer scheme for one operand pair.
struct HalfBufferState {
  std::uint32_t a_lo, a_hi, a_free;
  std::uint32_t b_lo, b_hi, b_free;
  bool operator==(const HalfBufferState&) const = default;
};

/// One DMA of the half-buffer rotation, in local addresses of sender and receiver.
struct HalfTransfer {
  char operand;  // 'A' goes west, 'B' goes north
  int half;      // 0 lower rows, 1 upper rows
  int stage;     // 1 before the free-slot handshake, 2 after it
  std::uint32_t src;
  std::uint32_t dst;
  std::uint32_t bytes;
};

HalfBufferState half_buffer_initial();
/// State after one rotation phase.
HalfBufferState half_buffer_advance(const HalfBufferState& s);
/// State at the start of a phase with the given parity.
HalfBufferState half_buffer_state(int parity);
/// Ordered transfer list for a phase of the given parity.
std::vector<HalfTransfer> half_buffer_plan(int parity);

struct MatmulResult {
  MatrixF c;
  double cycles = 0.0;
  double seconds = 0.0;
  double gflops = 0.0;
  double compute_cycles = 0.0;   // per core
  double transfer_cycles = 0.0;  // per core, non-compute share of the span
  int rounds = 0;
  bool half_buffer = false;
  std::uint64_t events = 0;
};

/// A is (P*m) x (P*n), B is (P*n) x (P*k). Throws ConfigError on shape mismatch.
MatmulResult cannon_multicore(const MatrixF& a, const MatrixF& b, int p, const MeshConfig& cfg,
                              std::ostream* log = nullptr);

struct OffchipResult : MatmulResult {
  int tiles = 0;           // on-chip C tiles
  int block_pairs = 0;     // page-ins of A/B per tile
  double transfer_share = 0.0;
  double compute_share = 0.0;
};

/// Pages `block` x `block` per-core tiles through shared memory. M, N, K must
/// be multiples of P*block.
OffchipResult offchip_matmul(const MatrixF& a, const MatrixF& b, int p, int block,
                             const MeshConfig& cfg, std::ostream* log = nullptr);

/// Cross-check for one block pair of the paged product: closed-form eLink
/// time for paging A and B against the simulated on-chip Cannon time.
struct OffchipRatio {
  double transfer_s;
  double compute_s;
  [[nodiscard]] double ratio() const { return transfer_s / compute_s; }
};
OffchipRatio offchip_analytic_ratio(int p, int block, const MeshConfig& cfg);

}  // namespace meshsim
