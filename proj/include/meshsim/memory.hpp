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
 * @file memory.hpp
 * @brief Global address map, banked scratchpads and the shared DRAM region.
 *
 * Core (r,c) owns the window whose top twelve bits are the core id
 * ((32+r) << 6 | (8+c)); only the first local_bytes of each window are
 * backed. Addresses below 1 MB are core-relative and resolved against the
 * issuing core.
 */

#pragma once

#include <cstdint>
#include <cstring>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "meshsim/config.hpp"
#include "meshsim/mesh.hpp"

namespace meshsim {

using GlobalAddr = std::uint64_t;

struct Owner {
  enum class Kind { Core, Shared };
  Kind kind = Kind::Core;
  Coord core;                 // valid when kind == Core
  std::uint64_t offset = 0;   // byte offset inside the owner

  [[nodiscard]] bool is_shared() const { return kind == Kind::Shared; }
  bool operator==(const Owner&) const = default;
};

class AddressMap {
 public:
  static constexpr int kRowBase = 32;
  static constexpr int kColBase = 8;
  static constexpr GlobalAddr kLocalWindow = 1u << 20;

  explicit AddressMap(const MeshConfig& cfg);

  [[nodiscard]] GlobalAddr global(const Coord& c, std::uint32_t local) const;
  [[nodiscard]] GlobalAddr shared(std::uint64_t offset) const;

  /// Decodes one byte address; throws AddressError on unmapped holes.
  [[nodiscard]] Owner decode(GlobalAddr addr) const;
  /// Decodes [addr, addr+len) and requires a single owner.
  [[nodiscard]] Owner decode_range(GlobalAddr addr, std::uint64_t len) const;
  /// Like decode_range, but addresses below 1 MB refer to `self`.
  [[nodiscard]] Owner resolve(GlobalAddr addr, std::uint64_t len, const Coord& self) const;

  [[nodiscard]] int rows() const { return rows_; }
  [[nodiscard]] int cols() const { return cols_; }
  [[nodiscard]] std::uint64_t local_bytes() const { return local_bytes_; }
  [[nodiscard]] GlobalAddr shared_base() const { return shared_base_; }
  [[nodiscard]] std::uint64_t shared_bytes() const { return shared_bytes_; }

 private:
  int rows_, cols_;
  std::uint64_t local_bytes_;
  GlobalAddr shared_base_;
  std::uint64_t shared_bytes_;
};

/// One core's local memory: banks x bank_bytes, byte addressable.
class Scratchpad {
 public:
  Scratchpad(int banks, int bank_bytes)
      : bank_bytes_(bank_bytes), bytes_(static_cast<size_t>(banks) * bank_bytes, 0) {}

  [[nodiscard]] std::size_t size() const { return bytes_.size(); }
  [[nodiscard]] int bank_of(std::uint32_t local) const { return static_cast<int>(local / bank_bytes_); }
  std::uint8_t* data() { return bytes_.data(); }
  [[nodiscard]] const std::uint8_t* data() const { return bytes_.data(); }

 private:
  int bank_bytes_;
  std::vector<std::uint8_t> bytes_;
};

/// Sparse byte store for the shared region; untouched pages read as zero.
class SharedMemory {
 public:
  static constexpr std::uint64_t kPage = 1u << 16;

  explicit SharedMemory(std::uint64_t bytes) : bytes_(bytes) {}
  void read(std::uint64_t off, std::span<std::uint8_t> out) const;
  void write(std::uint64_t off, std::span<const std::uint8_t> in);
  [[nodiscard]] std::uint64_t size() const { return bytes_; }

 private:
  std::uint64_t bytes_;
  std::unordered_map<std::uint64_t, std::unique_ptr<std::uint8_t[]>> pages_;
};

/// All memories of one simulation instance, addressed globally.
class MemorySystem {
 public:
  explicit MemorySystem(const MeshConfig& cfg);

  [[nodiscard]] const AddressMap& map() const { return map_; }

  std::vector<std::uint8_t> read(GlobalAddr addr, std::uint64_t len) const;
  void read_into(GlobalAddr addr, std::span<std::uint8_t> out) const;
  void write(GlobalAddr addr, std::span<const std::uint8_t> bytes);

  Scratchpad& scratchpad(const Coord& c);
  [[nodiscard]] const Scratchpad& scratchpad(const Coord& c) const;
  SharedMemory& shared() { return shared_; }

  template <typename T>
  T load(GlobalAddr addr) const {
    T v;
    read_into(addr, {reinterpret_cast<std::uint8_t*>(&v), sizeof(T)});
    return v;
  }
  template <typename T>
  void store(GlobalAddr addr, const T& v) {
    write(addr, {reinterpret_cast<const std::uint8_t*>(&v), sizeof(T)});
  }

 private:
  AddressMap map_;
  int cols_;
  std::vector<Scratchpad> cores_;
  SharedMemory shared_;
};

}  // namespace meshsim
