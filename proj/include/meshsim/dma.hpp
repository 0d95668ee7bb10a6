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
 * @file dma.hpp
 * @brief DMA descriptors, their validation, payload movement and timing.
 *
 * The scheduling of descriptors lives in the runtime; this header holds the
 * pure parts so they can be tested without an engine.
 */

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "meshsim/memory.hpp"

namespace meshsim {

enum class DmaMode { Blocking, NonBlocking };

struct DmaDescriptor {
  int channel = 0;
  GlobalAddr src = 0;
  GlobalAddr dst = 0;
  int word_size = 4;
  std::uint32_t inner_count = 0;  // words per row
  std::uint32_t outer_count = 1;  // rows; 1 for a 1D transfer
  std::int64_t src_stride = 0;    // bytes between row starts
  std::int64_t dst_stride = 0;
  DmaMode mode = DmaMode::Blocking;
  std::shared_ptr<const DmaDescriptor> chain;  // next segment on the same channel

  [[nodiscard]] std::uint64_t row_bytes() const {
    return static_cast<std::uint64_t>(inner_count) * static_cast<std::uint64_t>(word_size);
  }
  [[nodiscard]] std::uint64_t payload_bytes() const { return row_bytes() * outer_count; }

  /// 1D copy of `bytes` using the widest word that divides addresses and size.
  static DmaDescriptor copy_1d(GlobalAddr src, GlobalAddr dst, std::uint64_t bytes, int channel = 0);
  /// 2D copy: `rows` rows of `row_bytes`, given strides, with a fixed word size.
  static DmaDescriptor copy_2d(GlobalAddr src, GlobalAddr dst, std::uint32_t rows,
                               std::uint64_t row_bytes, std::int64_t src_stride,
                               std::int64_t dst_stride, int word_size, int channel = 0);
};

/// Builds a chain from `segs` (in order) and returns its head.
DmaDescriptor make_chain(std::vector<DmaDescriptor> segs);

/// Resolved endpoints of one validated segment.
struct DmaEndpoints {
  Owner src;
  Owner dst;
};

/// Throws DescriptorError or AddressError. `self` resolves core-relative addresses.
DmaEndpoints validate_segment(const DmaDescriptor& d, const AddressMap& map, const Coord& self);

/// Validates every segment of a chain.
void validate_chain(const DmaDescriptor& d, const AddressMap& map, const Coord& self);

/// Gathers a segment's source bytes (row-major by row) from memory.
std::vector<std::uint8_t> dma_gather(const DmaDescriptor& d, const MemorySystem& mem,
                                     const Coord& self);
/// Scatters gathered bytes to the segment's destination rows.
void dma_scatter(const DmaDescriptor& d, MemorySystem& mem, const Coord& self,
                 const std::vector<std::uint8_t>& bytes);

/// Effective bytes/cycle for a word size: narrow words run at word_size/4 of the plateau.
double dma_rate(const TimingModel& t, int word_size);

/// Cycles for one on-chip segment over `distance` hops, setup included. Segments
/// reached through a chain pointer pay the chain setup instead of a full one.
double dma_segment_cycles(const DmaDescriptor& d, int distance, const TimingModel& t,
                          bool chained = false);

/// Two per-core cycle timers.
class EventTimer {
 public:
  void start(double now_cycles) {
    start_ = now_cycles;
    stop_.reset();
  }
  /// Returns elapsed cycles; OrderingError when not started or stop < start.
  double stop(double now_cycles);
  [[nodiscard]] std::optional<double> elapsed() const;

 private:
  std::optional<double> start_;
  std::optional<double> stop_;
};

/// Elapsed cycles between two event timestamps; OrderingError if stop < start.
double timer_elapsed(double start_cycles, double stop_cycles);

}  // namespace meshsim
