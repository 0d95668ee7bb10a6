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
 * @file elink.hpp
 * @brief The off-chip link and the mesh-side arbitration in front of it.
 *
 * Off-chip traffic travels X-first to the edge column. Edge routers of the
 * rows nearest the exit ("ports") feed the link, which serves them weighted
 * round-robin with weights decaying away from the exit row. Inside the mesh,
 * every router splits between its local core and forwarded traffic by fixed
 * weights, and among forwarded inputs straight-through traffic strictly beats
 * traffic that has to turn. Rows outside the port window turn along the edge
 * column and therefore starve whenever the last port row has traffic of its
 * own.
 */

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "meshsim/config.hpp"
#include "meshsim/mesh.hpp"

namespace meshsim {

class ArbitrationTree {
 public:
  explicit ArbitrationTree(const MeshConfig& cfg);

  /// Long-run link share of each saturated writer. Writers absent from the
  /// result would receive nothing; shares of present writers sum to 1.
  [[nodiscard]] std::map<Coord, double> shares(const std::vector<Coord>& active) const;

  /// Number of hops from `c` to the link along the off-chip path.
  [[nodiscard]] int hops_to_exit(const Coord& c) const;

  /// Slot-accurate arbitration: each call grants one transaction. Writers are
  /// identified by index into the vector given to the constructor.
  class Slots {
   public:
    Slots(const ArbitrationTree& tree, const std::vector<Coord>& writers);
    /// Index of the writer granted the next slot, or -1 if none is active.
    int grant();
    /// Grants `n` further slots and returns per-writer grant counts. A
    /// router's decision depends only on how often it was visited, so only
    /// the link-level arbiter is stepped slot by slot; the result equals n
    /// calls to grant().
    std::vector<std::uint64_t> run(std::uint64_t n);

   private:
    struct Node {
      int local = -1;                  // writer index injected here, or -1
      std::vector<int> forwarded;      // child nodes, strict priority order
      std::vector<int> ports;          // root only: child nodes
      std::vector<double> port_w;      // root only
      std::vector<double> current;     // root only: smooth-WRR state
      bool active = false;
    };
    int pick(int node);
    void distribute(int node, std::uint64_t visits, std::vector<std::uint64_t>& out);
    std::vector<Node> nodes_;
    std::vector<std::uint64_t> visits_;  // per node
    std::vector<char> pattern_;          // local(1)/forwarded(0) grant order
    int root_ = -1;
    double lw_, fw_;
  };

 private:
  friend class Slots;
  // Node ids: router (r,c) is r*cols+c; the link root is rows*cols.
  [[nodiscard]] int id(int r, int c) const { return r * cols_ + c; }
  [[nodiscard]] bool in_window(int r) const;

  struct RouterInputs {
    std::vector<int> straight;  // upstream routers, strict priority over turning
    std::vector<int> turning;
  };
  std::vector<RouterInputs> inputs_;
  std::vector<std::pair<int, double>> ports_;  // (router, weight)
  int rows_, cols_;
  ELinkConfig cfg_;
};

/// One per-core result of a contention run.
struct UtilizationRecord {
  Coord core;
  std::uint64_t completed_iterations = 0;
  std::uint64_t bytes = 0;
  double utilization = 0.0;  // bytes / (link payload rate * duration)
};

/// Each writer repeatedly writes `block_bytes` as 4-byte transactions for
/// `duration_s` simulated seconds; every link slot is arbitrated explicitly.
std::vector<UtilizationRecord> contention_experiment(const MeshConfig& cfg,
                                                     const std::vector<Coord>& writers,
                                                     std::uint64_t block_bytes,
                                                     double duration_s);

/// Effective payload bytes per cycle of one link direction.
double elink_payload_bytes_per_cycle(const ELinkConfig& e);

/// Fluid model of one link direction: concurrent flows share the payload rate
/// by the arbitration tree, flows of one core split their core's share evenly.
class ELinkServer {
 public:
  ELinkServer(const MeshConfig& cfg, const ArbitrationTree& tree);

  /// Starts a flow of `bytes` at `now` (cycles). Returns its id.
  std::uint64_t add(double now, const Coord& core, std::uint64_t bytes);
  /// Earliest finishing flow as (time, id), if any flow is active.
  [[nodiscard]] std::optional<std::pair<double, std::uint64_t>> next_completion() const;
  /// Retires a finished flow at `now`.
  void finish(double now, std::uint64_t id);
  [[nodiscard]] std::size_t active() const { return flows_.size(); }
  [[nodiscard]] std::uint64_t bytes_served() const { return served_; }

 private:
  struct Flow {
    Coord core;
    double remaining;
    double rate = 0.0;
    std::uint64_t bytes;
  };
  void advance(double now);
  void rebalance();

  const ArbitrationTree& tree_;
  double capacity_;
  double last_ = 0.0;
  std::uint64_t next_id_ = 1;
  std::uint64_t served_ = 0;
  std::map<std::uint64_t, Flow> flows_;
};

}  // namespace meshsim
