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
 * @file stencil.hpp
 * @brief Five-point stencil: oracle, cost model and the distributed kernel.
 *
 * Update order matches the register-buffered device code. A block is swept in
 * stripes of `stripe_width` columns, left to right. All inputs of a stripe
 * are read before any of its outputs are stored, so inside a stripe the
 * update is Jacobi-like; the column left of a stripe already holds the
 * previous stripe's new values. Halos hold neighbours' previous-iteration
 * values and the outer boundary of the global grid never changes.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>

#include "meshsim/config.hpp"
#include "meshsim/grid.hpp"
#include "meshsim/runtime.hpp"

namespace meshsim {

/// Coefficients of T (row-1), C, B (row+1), R (col+1) and L (col-1).
struct StencilWeights {
  float w1 = 0.f, w2 = 1.f, w3 = 0.f, w4 = 0.f, w5 = 0.f;
};

/// One point: acc = w1*T, then fused adds of L, C, R, B in that order.
inline float stencil_point(const StencilWeights& w, float t, float l, float c, float r, float b) {
  float acc = w.w1 * t;
  acc = std::fma(w.w5, l, acc);
  acc = std::fma(w.w2, c, acc);
  acc = std::fma(w.w4, r, acc);
  acc = std::fma(w.w3, b, acc);
  return acc;
}

/// Sweeps one block in place. `base` points at the halo corner (0,0) of a
/// (rows+2) x pitch array; `scratch` must hold (rows+2)*(stripe_width+2) floats.
void stencil_sweep_block(float* base, int pitch, int rows, int cols, const StencilWeights& w,
                         int stripe_width, float* scratch);

/// Host oracle. The interior is split into wg_rows x wg_cols equal blocks.
Grid stencil_reference(const Grid& g, const StencilWeights& w, int iterations, int wg_rows = 1,
                       int wg_cols = 1, int stripe_width = 20);

/// Cycles to update one rows x cols block once.
double stencil_core_time(int rows, int cols, const StencilCostModel& m);
/// Useful flops of one block update (5 fused multiply-adds per point).
double stencil_flops(int rows, int cols, const StencilCostModel& m);

struct StencilOptions {
  bool communicate = true;  // false: every core iterates on its block alone
  int wg_rows = 1;
  int wg_cols = 1;
  std::ostream* log = nullptr;
};

struct StencilResult {
  Grid grid;
  double cycles = 0.0;
  double seconds = 0.0;
  double gflops = 0.0;
  double compute_cycles = 0.0;  // per core, per run
  std::uint64_t events = 0;
};

/// Runs the kernel on a wg_rows x wg_cols workgroup at the mesh origin.
StencilResult stencil_distributed(const Grid& g, const StencilWeights& w, int iterations,
                                  const StencilOptions& opt, const MeshConfig& cfg);

/// Scratchpad placement of one stencil block.
struct StencilBlockLayout {
  std::uint32_t base = 0;  // local address of halo corner (0,0)
  int pitch = 0;           // floats per stored row
  [[nodiscard]] std::uint32_t addr(int r, int c) const {
    return base + static_cast<std::uint32_t>((r * pitch + c) * 4);
  }
};
/// Throws LayoutError when the block does not fit.
StencilBlockLayout stencil_block_layout(int rows, int cols);

}  // namespace meshsim
