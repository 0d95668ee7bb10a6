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
 * @file mesh.hpp
 * @brief Mesh topology, dimension-order routing and analytic transfer timing.
 */

#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "meshsim/config.hpp"

namespace meshsim {

struct Coord {
  int row = 0;
  int col = 0;

  auto operator<=>(const Coord&) const = default;
};

std::ostream& operator<<(std::ostream& os, const Coord& c);

enum class NetworkClass { OnChipWrite, OffChipWrite, ReadRequest };
enum class TransferMethod { DirectWrite, Dma };

struct TransferRequest {
  Coord src;
  Coord dst;
  std::uint64_t byte_count = 0;
  TransferMethod method = TransferMethod::DirectWrite;
  NetworkClass network = NetworkClass::OnChipWrite;
  double issue_time_ns = 0.0;
};

/// Throws BoundsError unless `c` lies inside a rows x cols mesh.
void check_bounds(const Coord& c, int rows, int cols);

int manhattan_distance(const Coord& a, const Coord& b);
/// Bounds-checked variant.
int manhattan_distance(const Coord& a, const Coord& b, const MeshConfig& cfg);

/// Column moves first, then row moves. The source itself is not listed.
std::vector<Coord> route(const Coord& src, const Coord& dst, const MeshConfig& cfg);

/// Cycles for a message of `bytes` over `distance` hops.
double transfer_cycles(TransferMethod m, std::uint64_t bytes, int distance, const TimingModel& t);

/// Nanoseconds for `req` (bounds are checked against `cfg`).
double transfer_time(const TransferRequest& req, const MeshConfig& cfg);

/// Smallest byte count (>= 4, multiple of 4) at which DMA beats direct writes
/// between adjacent cores; nullopt means "never" within `limit` bytes.
std::optional<std::uint64_t> crossover_bytes(const TimingModel& t,
                                             std::uint64_t limit = 1u << 20);

}  // namespace meshsim
