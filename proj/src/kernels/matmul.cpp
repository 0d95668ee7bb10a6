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

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "meshsim/bank_layout.hpp"
#include "meshsim/errors.hpp"
#include "meshsim/matmul.hpp"

namespace meshsim {

MatrixF matmul_reference(const MatrixF& a, const MatrixF& b) {
  if (a.cols() != b.rows()) {
    throw DomainError("matmul dimension mismatch: " + std::to_string(a.cols()) + " vs " +
                      std::to_string(b.rows()));
  }
  MatrixF c = MatrixF::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      float acc = 0.f;
      for (Eigen::Index p = 0; p < a.cols(); ++p) acc = std::fma(a(i, p), b(p, j), acc);
      c(i, j) = acc;
    }
  }
  return c;
}

void matmul_block(const float* const* a_rows, const float* const* b_rows, float* c, int m, int n,
                  int k) {
  for (int i = 0; i < m; ++i) {
    const float* ar = a_rows[i];
    float* cr = c + static_cast<std::ptrdiff_t>(i) * k;
    for (int j = 0; j < k; ++j) {
      float acc = cr[j];
      for (int p = 0; p < n; ++p) acc = std::fma(ar[p], b_rows[p][j], acc);
      cr[j] = acc;
    }
  }
}

double matmul_core_time(int m, int n, int k, const MatmulCostModel& model) {
  if (m < 1 || n < 1 || k < 1) throw DomainError("matmul block dimensions must be positive");
  if (m > model.max_block || n > model.max_block || k > model.max_block) {
    throw LayoutError("matmul block " + std::to_string(m) + "x" + std::to_string(n) + "x" +
                      std::to_string(k) + " exceeds single-core capacity of " +
                      std::to_string(model.max_block));
  }
  // One macro covers flops_per_macro/2 multiply-adds; its cost scales with k.
  const double per_mac = model.cycles_per_macro / (model.flops_per_macro / 2.0);
  return static_cast<double>(m) * n * k * per_mac +
         m * (model.row_loop_overhead_cycles + model.store_row_cycles_per_elem * k);
}

HalfBufferState half_buffer_initial() {
  using namespace layouts;
  return {kHalfA, kHalfA + kHalf, kHalfABuf, kHalfB, kHalfB + kHalf, kHalfBBuf};
}

HalfBufferState half_buffer_advance(const HalfBufferState& s) {
  // The half at the operand base moves into the spare slot, the other half
  // moves to the base, and its old slot becomes the spare.
  auto step = [](std::uint32_t& lo, std::uint32_t& hi, std::uint32_t& free, std::uint32_t base) {
    std::uint32_t& first = (lo == base) ? lo : hi;
    std::uint32_t& second = (lo == base) ? hi : lo;
    const std::uint32_t vacated = second;
    first = free;
    second = base;
    free = vacated;
  };
  HalfBufferState n = s;
  step(n.a_lo, n.a_hi, n.a_free, layouts::kHalfA);
  step(n.b_lo, n.b_hi, n.b_free, layouts::kHalfB);
  return n;
}

HalfBufferState half_buffer_state(int parity) {
  HalfBufferState s = half_buffer_initial();
  return (parity & 1) ? half_buffer_advance(s) : s;
}

std::vector<HalfTransfer> half_buffer_plan(int parity) {
  const HalfBufferState s = half_buffer_state(parity);
  std::vector<HalfTransfer> out;
  auto add = [&](char op, std::uint32_t lo, std::uint32_t hi, std::uint32_t free,
                 std::uint32_t base, int stage) {
    const bool lo_first = (lo == base);
    if (stage == 1) {
      out.push_back({op, lo_first ? 0 : 1, 1, base, free, layouts::kHalf});
    } else {
      out.push_back({op, lo_first ? 1 : 0, 2, lo_first ? hi : lo, base, layouts::kHalf});
    }
  };
  for (int stage = 1; stage <= 2; ++stage) {
    add('A', s.a_lo, s.a_hi, s.a_free, layouts::kHalfA, stage);
    add('B', s.b_lo, s.b_hi, s.b_free, layouts::kHalfB, stage);
  }
  return out;
}

}  // namespace meshsim
