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

#include "meshsim/dma.hpp"

#include <string>

#include "meshsim/errors.hpp"

namespace meshsim {

namespace {

GlobalAddr absolute(GlobalAddr a, const AddressMap& map, const Coord& self) {
  return a < AddressMap::kLocalWindow ? (map.global(self, 0) | a) : a;
}

GlobalAddr row_addr(GlobalAddr base, std::int64_t stride, std::uint32_t row) {
  return static_cast<GlobalAddr>(static_cast<std::int64_t>(base) + stride * row);
}

}  // namespace

DmaDescriptor DmaDescriptor::copy_1d(GlobalAddr src, GlobalAddr dst, std::uint64_t bytes,
                                     int channel) {
  int w = 8;
  while (w > 1 && ((src | dst | bytes) % static_cast<std::uint64_t>(w)) != 0) w /= 2;
  DmaDescriptor d;
  d.channel = channel;
  d.src = src;
  d.dst = dst;
  d.word_size = w;
  d.inner_count = static_cast<std::uint32_t>(bytes / static_cast<std::uint64_t>(w));
  d.outer_count = 1;
  d.src_stride = d.dst_stride = static_cast<std::int64_t>(bytes);
  return d;
}

DmaDescriptor DmaDescriptor::copy_2d(GlobalAddr src, GlobalAddr dst, std::uint32_t rows,
                                     std::uint64_t row_bytes, std::int64_t src_stride,
                                     std::int64_t dst_stride, int word_size, int channel) {
  DmaDescriptor d;
  d.channel = channel;
  d.src = src;
  d.dst = dst;
  d.word_size = word_size;
  d.inner_count = static_cast<std::uint32_t>(row_bytes / static_cast<std::uint64_t>(word_size));
  d.outer_count = rows;
  d.src_stride = src_stride;
  d.dst_stride = dst_stride;
  return d;
}

DmaDescriptor make_chain(std::vector<DmaDescriptor> segs) {
  if (segs.empty()) throw DescriptorError("empty DMA chain");
  for (size_t i = segs.size() - 1; i > 0; --i) {
    segs[i - 1].chain = std::make_shared<const DmaDescriptor>(segs[i]);
  }
  return segs.front();
}

DmaEndpoints validate_segment(const DmaDescriptor& d, const AddressMap& map, const Coord& self) {
  if (d.channel != 0 && d.channel != 1) throw DescriptorError("DMA channel must be 0 or 1");
  if (d.word_size != 1 && d.word_size != 2 && d.word_size != 4 && d.word_size != 8) {
    throw DescriptorError("DMA word size must be 1, 2, 4 or 8");
  }
  if (d.inner_count == 0 || d.outer_count == 0) throw DescriptorError("empty DMA descriptor");
  const auto w = static_cast<std::uint64_t>(d.word_size);
  const GlobalAddr src = absolute(d.src, map, self), dst = absolute(d.dst, map, self);
  if (src % w || dst % w) throw DescriptorError("DMA address not aligned to word size");
  if (d.outer_count > 1 && ((d.src_stride % d.word_size) || (d.dst_stride % d.word_size))) {
    throw DescriptorError("DMA stride not aligned to word size");
  }
  const std::uint64_t rb = d.row_bytes();
  const Owner s0 = map.decode_range(src, rb);
  const Owner d0 = map.decode_range(dst, rb);
  const std::uint32_t last = d.outer_count - 1;
  if (last > 0) {
    const Owner s1 = map.decode_range(row_addr(src, d.src_stride, last), rb);
    const Owner d1 = map.decode_range(row_addr(dst, d.dst_stride, last), rb);
    // Rows are affine in the row index, so first and last in one owner means all are.
    if (s1.kind != s0.kind || s1.core != s0.core || d1.kind != d0.kind || d1.core != d0.core) {
      throw AddressError("2D DMA rows span two owners");
    }
  }
  return {s0, d0};
}

void validate_chain(const DmaDescriptor& d, const AddressMap& map, const Coord& self) {
  for (const DmaDescriptor* p = &d; p; p = p->chain.get()) {
    validate_segment(*p, map, self);
    if (p->chain && p->chain->channel != d.channel) {
      throw DescriptorError("chained descriptors must share a channel");
    }
  }
}

std::vector<std::uint8_t> dma_gather(const DmaDescriptor& d, const MemorySystem& mem,
                                     const Coord& self) {
  const GlobalAddr src = absolute(d.src, mem.map(), self);
  const std::uint64_t rb = d.row_bytes();
  std::vector<std::uint8_t> out(d.payload_bytes());
  for (std::uint32_t r = 0; r < d.outer_count; ++r) {
    mem.read_into(row_addr(src, d.src_stride, r), {out.data() + r * rb, rb});
  }
  return out;
}

void dma_scatter(const DmaDescriptor& d, MemorySystem& mem, const Coord& self,
                 const std::vector<std::uint8_t>& bytes) {
  const GlobalAddr dst = absolute(d.dst, mem.map(), self);
  const std::uint64_t rb = d.row_bytes();
  for (std::uint32_t r = 0; r < d.outer_count; ++r) {
    mem.write(row_addr(dst, d.dst_stride, r), {bytes.data() + r * rb, rb});
  }
}

double dma_rate(const TimingModel& t, int word_size) {
  return word_size >= 4 ? t.dma_bytes_per_cycle : t.dma_bytes_per_cycle * word_size / 4.0;
}

double dma_segment_cycles(const DmaDescriptor& d, int distance, const TimingModel& t,
                          bool chained) {
  return (chained ? t.dma_chain_setup_cycles : t.dma_setup_cycles) + t.hop_latency_cycles * distance +
         static_cast<double>(d.payload_bytes()) / dma_rate(t, d.word_size) +
         t.dma_row_overhead_cycles * (d.outer_count - 1);
}

double EventTimer::stop(double now_cycles) {
  if (!start_) throw OrderingError("timer stopped before it was started");
  if (now_cycles < *start_) throw OrderingError("timer stop precedes start");
  stop_ = now_cycles;
  return now_cycles - *start_;
}

std::optional<double> EventTimer::elapsed() const {
  if (!start_ || !stop_) return std::nullopt;
  return *stop_ - *start_;
}

double timer_elapsed(double start_cycles, double stop_cycles) {
  if (stop_cycles < start_cycles) throw OrderingError("timer stop precedes start");
  return stop_cycles - start_cycles;
}

}  // namespace meshsim
