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

#include "meshsim/bank_layout.hpp"

#include <algorithm>

#include "meshsim/errors.hpp"

namespace meshsim {

BankLayout& BankLayout::add(std::string name, std::uint32_t start, std::uint32_t length) {
  regions_.push_back({std::move(name), start, length});
  return *this;
}

void BankLayout::validate() const {
  std::vector<const Region*> sorted;
  for (const auto& r : regions_) {
    if (r.length == 0) throw LayoutError("region " + r.name + " is empty");
    if (r.end() > local_bytes_) {
      throw LayoutError("region " + r.name + " ends past local memory (" +
                        std::to_string(r.end()) + " > " + std::to_string(local_bytes_) + ")");
    }
    sorted.push_back(&r);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const Region* a, const Region* b) { return a->start < b->start; });
  for (size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i]->start < sorted[i - 1]->end()) {
      throw LayoutError("regions " + sorted[i - 1]->name + " and " + sorted[i]->name + " overlap");
    }
  }
}

const Region& BankLayout::at(const std::string& name) const {
  for (const auto& r : regions_) {
    if (r.name == name) return r;
  }
  throw LayoutError("no region named " + name);
}

std::vector<int> BankLayout::banks(const std::string& name) const {
  const Region& r = at(name);
  std::vector<int> out;
  for (std::uint32_t b = r.start / bank_bytes_; b <= (r.end() - 1) / bank_bytes_; ++b) {
    out.push_back(static_cast<int>(b));
  }
  return out;
}

std::uint32_t BankLayout::used_bytes() const {
  std::uint32_t n = 0;
  for (const auto& r : regions_) n += r.length;
  return n;
}

namespace layouts {

BankLayout stencil(int rows, int cols) {
  if (rows < 1 || cols < 1) throw LayoutError("stencil block must be at least 1x1");
  // Rows are padded to an even pitch and the block starts one word in, so
  // interior rows begin on 8-byte boundaries for double-word DMA.
  const auto pitch = static_cast<std::uint64_t>((cols + 2 + 1) & ~1);
  const auto bytes = 4 + static_cast<std::uint64_t>(rows + 2) * pitch * 4;
  if (bytes > kStencilGridBytes) {
    throw LayoutError("stencil block " + std::to_string(rows) + "x" + std::to_string(cols) +
                      " plus halo needs " + std::to_string(bytes) + " bytes, only " +
                      std::to_string(kStencilGridBytes) + " available");
  }
  BankLayout l;
  l.add("code", 0x0000, 0x0C00)
      .add("stack", 0x0C00, 0x0300)
      .add("flags", kStencilFlags, 0x0100)
      .add("grid", kStencilGrid, static_cast<std::uint32_t>(bytes));
  l.validate();
  return l;
}

BankLayout matmul_double_buffer(int m, int n, int k) {
  if (m < 1 || n < 1 || k < 1) throw LayoutError("matmul block dimensions must be positive");
  const auto a = static_cast<std::uint32_t>(m * n * 4);
  const auto b = static_cast<std::uint32_t>(n * k * 4);
  const auto c = static_cast<std::uint32_t>(m * k * 4);
  const std::uint64_t need = 2ull * a + 2ull * b + c;
  if (need > kMatmulDataBytes) {
    throw LayoutError("double-buffered blocks need " + std::to_string(need) + " bytes, only " +
                      std::to_string(kMatmulDataBytes) + " available");
  }
  BankLayout l;
  std::uint32_t at = kMatmulData;
  l.add("code", 0x0000, 0x3600).add("flags", kMatmulFlags, 0x0100).add("stack", 0x3700, 0x0900);
  l.add("A0", at, a);
  at += a;
  l.add("A1", at, a);
  at += a;
  l.add("B0", at, b);
  at += b;
  l.add("B1", at, b);
  at += b;
  l.add("C", at, c);
  l.validate();
  return l;
}

BankLayout matmul_half_buffer() {
  BankLayout l;
  l.add("code", 0x0000, 0x3600)
      .add("flags", kMatmulFlags, 0x0100)
      .add("stack", 0x3700, 0x0900)
      .add("A", kHalfA, 0x1000)
      .add("Abuf", kHalfABuf, kHalf)
      .add("B", kHalfB, 0x1000)
      .add("Bbuf", kHalfBBuf, kHalf)
      .add("C", kHalfC, 0x1000);
  l.validate();
  return l;
}

}  // namespace layouts

}  // namespace meshsim
