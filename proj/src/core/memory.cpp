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

#include "meshsim/memory.hpp"

#include <algorithm>
#include <sstream>

#include "meshsim/errors.hpp"

namespace meshsim {

namespace {

std::string hex(GlobalAddr a) {
  std::ostringstream os;
  os << "0x" << std::hex << a;
  return os.str();
}

}  // namespace

AddressMap::AddressMap(const MeshConfig& cfg)
    : rows_(cfg.rows),
      cols_(cfg.cols),
      local_bytes_(static_cast<std::uint64_t>(cfg.local_bytes())),
      shared_base_(cfg.shared_base),
      shared_bytes_(cfg.shared_bytes) {}

GlobalAddr AddressMap::global(const Coord& c, std::uint32_t local) const {
  check_bounds(c, rows_, cols_);
  if (local >= local_bytes_) throw AddressError("local address " + hex(local) + " not backed");
  return (static_cast<GlobalAddr>(kRowBase + c.row) << 26) |
         (static_cast<GlobalAddr>(kColBase + c.col) << 20) | local;
}

GlobalAddr AddressMap::shared(std::uint64_t offset) const {
  if (offset >= shared_bytes_) throw AddressError("shared offset " + hex(offset) + " out of range");
  return shared_base_ + offset;
}

Owner AddressMap::decode(GlobalAddr addr) const {
  if (addr >= shared_base_ && addr < shared_base_ + shared_bytes_) {
    return {Owner::Kind::Shared, {}, addr - shared_base_};
  }
  if (addr <= 0xFFFFFFFFull) {
    const int row = static_cast<int>(addr >> 26) - kRowBase;
    const int col = static_cast<int>((addr >> 20) & 0x3F) - kColBase;
    const std::uint64_t off = addr & (kLocalWindow - 1);
    if (row >= 0 && row < rows_ && col >= 0 && col < cols_ && off < local_bytes_) {
      return {Owner::Kind::Core, {row, col}, off};
    }
  }
  throw AddressError("unmapped address " + hex(addr));
}

Owner AddressMap::decode_range(GlobalAddr addr, std::uint64_t len) const {
  const Owner first = decode(addr);
  if (len == 0) return first;
  Owner last;
  try {
    last = decode(addr + len - 1);
  } catch (const AddressError&) {
    throw AddressError("range " + hex(addr) + "+" + std::to_string(len) + " leaves its owner");
  }
  if (last.kind != first.kind || last.core != first.core ||
      last.offset - first.offset != len - 1) {
    throw AddressError("range " + hex(addr) + "+" + std::to_string(len) + " spans two owners");
  }
  return first;
}

Owner AddressMap::resolve(GlobalAddr addr, std::uint64_t len, const Coord& self) const {
  if (addr < kLocalWindow) addr = global(self, 0) | addr;
  return decode_range(addr, len);
}

void SharedMemory::read(std::uint64_t off, std::span<std::uint8_t> out) const {
  std::size_t done = 0;
  while (done < out.size()) {
    const std::uint64_t a = off + done;
    const std::uint64_t page = a / kPage, in = a % kPage;
    const std::size_t n = std::min<std::size_t>(out.size() - done, kPage - in);
    auto it = pages_.find(page);
    if (it == pages_.end()) {
      std::fill_n(out.data() + done, n, 0);
    } else {
      std::memcpy(out.data() + done, it->second.get() + in, n);
    }
    done += n;
  }
}

void SharedMemory::write(std::uint64_t off, std::span<const std::uint8_t> in) {
  std::size_t done = 0;
  while (done < in.size()) {
    const std::uint64_t a = off + done;
    const std::uint64_t page = a / kPage, at = a % kPage;
    const std::size_t n = std::min<std::size_t>(in.size() - done, kPage - at);
    auto& p = pages_[page];
    if (!p) p = std::make_unique<std::uint8_t[]>(kPage);  // value-initialised to zero
    std::memcpy(p.get() + at, in.data() + done, n);
    done += n;
  }
}

MemorySystem::MemorySystem(const MeshConfig& cfg)
    : map_(cfg), cols_(cfg.cols), shared_(cfg.shared_bytes) {
  cores_.reserve(static_cast<size_t>(cfg.rows * cfg.cols));
  for (int i = 0; i < cfg.rows * cfg.cols; ++i) cores_.emplace_back(cfg.banks, cfg.bank_bytes);
}

Scratchpad& MemorySystem::scratchpad(const Coord& c) {
  check_bounds(c, map_.rows(), map_.cols());
  return cores_[static_cast<size_t>(c.row * cols_ + c.col)];
}

const Scratchpad& MemorySystem::scratchpad(const Coord& c) const {
  check_bounds(c, map_.rows(), map_.cols());
  return cores_[static_cast<size_t>(c.row * cols_ + c.col)];
}

void MemorySystem::read_into(GlobalAddr addr, std::span<std::uint8_t> out) const {
  const Owner o = map_.decode_range(addr, out.size());
  if (o.is_shared()) {
    shared_.read(o.offset, out);
  } else {
    std::memcpy(out.data(), scratchpad(o.core).data() + o.offset, out.size());
  }
}

std::vector<std::uint8_t> MemorySystem::read(GlobalAddr addr, std::uint64_t len) const {
  std::vector<std::uint8_t> out(len);
  read_into(addr, out);
  return out;
}

void MemorySystem::write(GlobalAddr addr, std::span<const std::uint8_t> bytes) {
  const Owner o = map_.decode_range(addr, bytes.size());
  if (o.is_shared()) {
    shared_.write(o.offset, bytes);
  } else {
    std::memcpy(scratchpad(o.core).data() + o.offset, bytes.data(), bytes.size());
  }
}

}  // namespace meshsim
