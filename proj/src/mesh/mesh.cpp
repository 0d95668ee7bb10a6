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

#include "meshsim/mesh.hpp"

#include <cstdlib>
#include <string>

#include "meshsim/errors.hpp"

namespace meshsim {

std::ostream& operator<<(std::ostream& os, const Coord& c) {
  return os << '(' << c.row << ',' << c.col << ')';
}

void check_bounds(const Coord& c, int rows, int cols) {
  if (c.row < 0 || c.row >= rows || c.col < 0 || c.col >= cols) {
    throw BoundsError("coordinate (" + std::to_string(c.row) + "," + std::to_string(c.col) +
                      ") outside " + std::to_string(rows) + "x" + std::to_string(cols) + " mesh");
  }
}

int manhattan_distance(const Coord& a, const Coord& b) {
  return std::abs(a.row - b.row) + std::abs(a.col - b.col);
}

int manhattan_distance(const Coord& a, const Coord& b, const MeshConfig& cfg) {
  check_bounds(a, cfg.rows, cfg.cols);
  check_bounds(b, cfg.rows, cfg.cols);
  return manhattan_distance(a, b);
}

std::vector<Coord> route(const Coord& src, const Coord& dst, const MeshConfig& cfg) {
  check_bounds(src, cfg.rows, cfg.cols);
  check_bounds(dst, cfg.rows, cfg.cols);
  std::vector<Coord> path;
  path.reserve(static_cast<size_t>(manhattan_distance(src, dst)));
  Coord at = src;
  const int dc = dst.col > src.col ? 1 : -1;
  while (at.col != dst.col) {
    at.col += dc;
    path.push_back(at);
  }
  const int dr = dst.row > src.row ? 1 : -1;
  while (at.row != dst.row) {
    at.row += dr;
    path.push_back(at);
  }
  return path;
}

double transfer_cycles(TransferMethod m, std::uint64_t bytes, int distance, const TimingModel& t) {
  if (bytes == 0) throw DomainError("zero-byte transfer");
  if (distance < 0) throw DomainError("negative distance");
  const double b = static_cast<double>(bytes);
  const double path = t.hop_latency_cycles * distance;
  if (m == TransferMethod::DirectWrite) {
    return t.direct_write_setup_cycles + path + (b / 4.0) * t.direct_write_issue_cycles;
  }
  return t.dma_setup_cycles + path + b / t.dma_bytes_per_cycle;
}

double transfer_time(const TransferRequest& req, const MeshConfig& cfg) {
  const int d = manhattan_distance(req.src, req.dst, cfg);
  return cfg.cycles_to_ns(transfer_cycles(req.method, req.byte_count, d, cfg.timing));
}

std::optional<std::uint64_t> crossover_bytes(const TimingModel& t, std::uint64_t limit) {
  auto dma_wins = [&](std::uint64_t b) {
    return transfer_cycles(TransferMethod::Dma, b, 1, t) <
           transfer_cycles(TransferMethod::DirectWrite, b, 1, t);
  };
  // Both curves are affine in b, so "DMA wins" is monotone: binary search.
  if (!dma_wins(limit)) return std::nullopt;
  if (dma_wins(4)) return 4;
  std::uint64_t lo = 1, hi = limit / 4;  // in words; lo loses, hi wins
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    (dma_wins(mid * 4) ? hi : lo) = mid;
  }
  return hi * 4;
}

}  // namespace meshsim
