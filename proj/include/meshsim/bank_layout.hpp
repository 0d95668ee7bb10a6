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
 * @file bank_layout.hpp
 * @brief Named scratchpad regions and the layouts used by the built-in kernels.
 */

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace meshsim {

struct Region {
  std::string name;
  std::uint32_t start = 0;
  std::uint32_t length = 0;

  [[nodiscard]] std::uint32_t end() const { return start + length; }  // exclusive
};

class BankLayout {
 public:
  BankLayout(std::uint32_t local_bytes = 0x8000, std::uint32_t bank_bytes = 0x2000)
      : local_bytes_(local_bytes), bank_bytes_(bank_bytes) {}

  BankLayout& add(std::string name, std::uint32_t start, std::uint32_t length);

  /// Throws LayoutError on overlap, empty regions or regions past local memory.
  void validate() const;

  [[nodiscard]] const Region& at(const std::string& name) const;
  [[nodiscard]] const std::vector<Region>& regions() const { return regions_; }
  /// Banks touched by a region, ascending.
  [[nodiscard]] std::vector<int> banks(const std::string& name) const;
  [[nodiscard]] std::uint32_t used_bytes() const;

 private:
  std::uint32_t local_bytes_;
  std::uint32_t bank_bytes_;
  std::vector<Region> regions_;
};

namespace layouts {

// Stencil: code in bank 0, stack and flags below the grid.
inline constexpr std::uint32_t kStencilFlags = 0x0F00;
inline constexpr std::uint32_t kStencilGrid = 0x1000;
inline constexpr std::uint32_t kStencilGridBytes = 0x8000 - kStencilGrid;

// Matmul: code + stack take 12 KB of banks 0-1, flags sit between them,
// operands use banks 2-3.
inline constexpr std::uint32_t kMatmulFlags = 0x3600;
inline constexpr std::uint32_t kMatmulData = 0x4000;
inline constexpr std::uint32_t kMatmulDataBytes = 0x4000;

// Half-buffer scheme for 32x32 blocks.
inline constexpr std::uint32_t kHalfA = 0x4000;
inline constexpr std::uint32_t kHalfABuf = 0x5000;
inline constexpr std::uint32_t kHalfB = 0x5800;
inline constexpr std::uint32_t kHalfBBuf = 0x6800;
inline constexpr std::uint32_t kHalfC = 0x7000;
inline constexpr std::uint32_t kHalf = 0x800;  // 2 KB, half of one operand

/// Layout for a stencil block of rows x cols interior points plus halo.
BankLayout stencil(int rows, int cols);
/// Double-buffered Cannon layout for (m x n) * (n x k) blocks.
BankLayout matmul_double_buffer(int m, int n, int k);
/// The fixed 32x32 half-buffer layout.
BankLayout matmul_half_buffer();

}  // namespace layouts

}  // namespace meshsim
