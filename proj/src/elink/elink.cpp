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

#include "meshsim/elink.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>

#include "meshsim/errors.hpp"

namespace meshsim {

namespace {

int window_dir(int exit_row, int rows) { return exit_row < (rows + 1) / 2 ? 1 : -1; }

}  // namespace

ArbitrationTree::ArbitrationTree(const MeshConfig& cfg)
    : inputs_(static_cast<size_t>(cfg.rows * cfg.cols)),
      rows_(cfg.rows),
      cols_(cfg.cols),
      cfg_(cfg.elink) {
  const int er = cfg_.exit_row, ec = cfg_.exit_col;
  const int dir = window_dir(er, rows_);
  const bool link_east = !(ec == 0 && cols_ > 1);

  for (int r = 0; r < rows_; ++r) {
    // Row segments flow toward the edge column; each router forwards its
    // upstream neighbour straight through.
    for (int c = 0; c < cols_; ++c) {
      if (c < ec && c > 0) inputs_[id(r, c)].straight.push_back(id(r, c - 1));
      if (c > ec && c < cols_ - 1) inputs_[id(r, c)].straight.push_back(id(r, c + 1));
    }
    auto& edge = inputs_[id(r, ec)];
    const int from_w = ec > 0 ? id(r, ec - 1) : -1;
    const int from_e = ec < cols_ - 1 ? id(r, ec + 1) : -1;
    if (in_window(r)) {
      const int straight = link_east ? from_w : from_e;
      const int turn = link_east ? from_e : from_w;
      if (straight >= 0) edge.straight.push_back(straight);
      if (turn >= 0) edge.turning.push_back(turn);
    } else {
      if (from_w >= 0) edge.turning.push_back(from_w);
      if (from_e >= 0) edge.turning.push_back(from_e);
    }
  }
  // Rows outside the window travel along the edge column toward it.
  for (int r = 0; r < rows_; ++r) {
    if (in_window(r)) continue;
    const bool beyond = (r - er) * dir > 0;
    const int next = beyond ? r - dir : r + dir;
    auto& in = inputs_[id(next, ec)];
    // Column traffic goes straight only where the next router also forwards
    // along the column; at a window router it has to turn toward the link.
    if (in_window(next)) {
      in.turning.push_back(id(r, ec));
    } else {
      in.straight.push_back(id(r, ec));
    }
  }
  for (int k = 0; k < cfg_.exit_rows; ++k) {
    const int r = er + dir * k;
    if (r < 0 || r >= rows_) break;
    ports_.emplace_back(id(r, ec), std::pow(cfg_.port_decay, k));
  }
}

bool ArbitrationTree::in_window(int r) const {
  const int k = (r - cfg_.exit_row) * window_dir(cfg_.exit_row, rows_);
  return k >= 0 && k < cfg_.exit_rows;
}

int ArbitrationTree::hops_to_exit(const Coord& c) const {
  check_bounds(c, rows_, cols_);
  int hops = std::abs(c.col - cfg_.exit_col);
  if (!in_window(c.row)) {
    const int dir = window_dir(cfg_.exit_row, rows_);
    const bool beyond = (c.row - cfg_.exit_row) * dir > 0;
    const int target = beyond ? cfg_.exit_row + dir * (cfg_.exit_rows - 1) : cfg_.exit_row;
    hops += std::abs(c.row - target);
  }
  return hops;
}

std::map<Coord, double> ArbitrationTree::shares(const std::vector<Coord>& active) const {
  std::vector<char> writer(inputs_.size(), 0);
  for (const auto& c : active) {
    check_bounds(c, rows_, cols_);
    writer[static_cast<size_t>(id(c.row, c.col))] = 1;
  }
  std::vector<int> live(inputs_.size(), -1);  // memoised subtree activity
  std::function<bool(int)> is_live = [&](int n) -> bool {
    auto& m = live[static_cast<size_t>(n)];
    if (m >= 0) return m != 0;
    bool any = writer[static_cast<size_t>(n)] != 0;
    for (int s : inputs_[static_cast<size_t>(n)].straight) any = is_live(s) || any;
    for (int t : inputs_[static_cast<size_t>(n)].turning) any = is_live(t) || any;
    m = any ? 1 : 0;
    return any;
  };
  auto first_live = [&](int n) {
    for (int s : inputs_[static_cast<size_t>(n)].straight) {
      if (is_live(s)) return s;
    }
    for (int t : inputs_[static_cast<size_t>(n)].turning) {
      if (is_live(t)) return t;
    }
    return -1;
  };

  std::map<Coord, double> out;
  const double lw = cfg_.local_weight, fw = cfg_.forward_weight;
  std::function<void(int, double)> give = [&](int n, double f) {
    const bool local = writer[static_cast<size_t>(n)] != 0;
    const int fwd = first_live(n);
    const Coord c{n / cols_, n % cols_};
    if (local && fwd >= 0) {
      out[c] += f * lw / (lw + fw);
      give(fwd, f * fw / (lw + fw));
    } else if (local) {
      out[c] += f;
    } else if (fwd >= 0) {
      give(fwd, f);
    }
  };

  double total = 0;
  for (const auto& [n, w] : ports_) {
    if (is_live(n)) total += w;
  }
  for (const auto& [n, w] : ports_) {
    if (is_live(n)) give(n, w / total);
  }
  return out;
}

ArbitrationTree::Slots::Slots(const ArbitrationTree& tree, const std::vector<Coord>& writers)
    : lw_(tree.cfg_.local_weight), fw_(tree.cfg_.forward_weight) {
  const size_t n = tree.inputs_.size();
  nodes_.resize(n + 1);
  std::set<Coord> seen;
  for (size_t i = 0; i < writers.size(); ++i) {
    check_bounds(writers[i], tree.rows_, tree.cols_);
    if (!seen.insert(writers[i]).second) throw DomainError("duplicate writer in contention set");
    nodes_[static_cast<size_t>(tree.id(writers[i].row, writers[i].col))].local = static_cast<int>(i);
  }
  for (size_t i = 0; i < n; ++i) {
    for (int s : tree.inputs_[i].straight) nodes_[i].forwarded.push_back(s);
    for (int t : tree.inputs_[i].turning) nodes_[i].forwarded.push_back(t);
  }
  std::function<bool(int)> mark = [&](int id) -> bool {
    auto& nd = nodes_[static_cast<size_t>(id)];
    bool any = nd.local >= 0;
    for (int c : nd.forwarded) any = mark(c) || any;
    nd.active = any;
    return any;
  };
  root_ = static_cast<int>(n);
  auto& root = nodes_[n];
  for (const auto& [id, w] : tree.ports_) {
    if (mark(id)) {
      root.ports.push_back(id);
      root.port_w.push_back(w);
    }
  }
  root.current.assign(root.ports.size(), 0.0);
  root.active = !root.ports.empty();
  for (size_t i = 0; i < n; ++i) {
    auto& nd = nodes_[i];
    // Keep only the highest-priority live input: with static saturated
    // writers the others never win an arbitration.
    auto it = std::find_if(nd.forwarded.begin(), nd.forwarded.end(),
                           [&](int c) { return nodes_[static_cast<size_t>(c)].active; });
    nd.forwarded = it == nd.forwarded.end() ? std::vector<int>{} : std::vector<int>{*it};
  }
  visits_.assign(nodes_.size(), 0);
  // Two-way smooth weighted round-robin between local and forwarded traffic
  // repeats with period lw+fw; every router replays this pattern.
  double cl = 0, cf = 0;
  for (int v = 0; v < tree.cfg_.local_weight + tree.cfg_.forward_weight; ++v) {
    cl += lw_;
    cf += fw_;
    const bool take_local = cl >= cf;
    pattern_.push_back(take_local);
    (take_local ? cl : cf) -= lw_ + fw_;
  }
}

int ArbitrationTree::Slots::pick(int id) {
  auto& nd = nodes_[static_cast<size_t>(id)];
  if (id == root_) {
    // Smooth weighted round-robin over live ports.
    double total = 0;
    size_t best = 0;
    for (size_t i = 0; i < nd.ports.size(); ++i) {
      nd.current[i] += nd.port_w[i];
      total += nd.port_w[i];
      if (nd.current[i] > nd.current[best]) best = i;
    }
    nd.current[best] -= total;
    return pick(nd.ports[best]);
  }
  const bool local = nd.local >= 0;
  const bool fwd = !nd.forwarded.empty();
  if (local && fwd) {
    const std::uint64_t v = visits_[static_cast<size_t>(id)]++;
    if (pattern_[v % pattern_.size()]) return nd.local;
    return pick(nd.forwarded[0]);
  }
  ++visits_[static_cast<size_t>(id)];
  if (local) return nd.local;
  return pick(nd.forwarded[0]);
}

void ArbitrationTree::Slots::distribute(int id, std::uint64_t visits,
                                        std::vector<std::uint64_t>& out) {
  if (visits == 0) return;
  auto& nd = nodes_[static_cast<size_t>(id)];
  const bool local = nd.local >= 0;
  const bool fwd = !nd.forwarded.empty();
  std::uint64_t to_local = local ? visits : 0;
  if (local && fwd) {
    const std::uint64_t already = visits_[static_cast<size_t>(id)];
    const std::uint64_t period = pattern_.size();
    auto locals_before = [&](std::uint64_t v) {
      std::uint64_t k = (v / period) * static_cast<std::uint64_t>(lw_);
      for (std::uint64_t i = 0; i < v % period; ++i) k += pattern_[i] ? 1 : 0;
      return k;
    };
    to_local = locals_before(already + visits) - locals_before(already);
  }
  visits_[static_cast<size_t>(id)] += visits;
  if (local) out[static_cast<size_t>(nd.local)] += to_local;
  if (fwd) distribute(nd.forwarded[0], visits - to_local, out);
}

std::vector<std::uint64_t> ArbitrationTree::Slots::run(std::uint64_t n) {
  std::uint64_t writers = 0;
  for (const auto& nd : nodes_) writers = std::max<std::uint64_t>(writers, nd.local + 1);
  std::vector<std::uint64_t> out(writers, 0);
  auto& root = nodes_[static_cast<size_t>(root_)];
  if (!root.active) return out;
  std::vector<std::uint64_t> port_visits(root.ports.size(), 0);
  if (root.ports.size() == 1) {
    port_visits[0] = n;
  } else {
    double total = 0;
    for (double w : root.port_w) total += w;
    for (std::uint64_t s = 0; s < n; ++s) {
      size_t best = 0;
      for (size_t i = 0; i < root.ports.size(); ++i) {
        root.current[i] += root.port_w[i];
        if (root.current[i] > root.current[best]) best = i;
      }
      root.current[best] -= total;
      ++port_visits[best];
    }
  }
  for (size_t i = 0; i < root.ports.size(); ++i) distribute(root.ports[i], port_visits[i], out);
  return out;
}

int ArbitrationTree::Slots::grant() {
  if (!nodes_[static_cast<size_t>(root_)].active) return -1;
  return pick(root_);
}

double elink_payload_bytes_per_cycle(const ELinkConfig& e) {
  return e.link_bytes_per_cycle / e.transaction_overhead_factor;
}

std::vector<UtilizationRecord> contention_experiment(const MeshConfig& cfg,
                                                     const std::vector<Coord>& writers,
                                                     std::uint64_t block_bytes,
                                                     double duration_s) {
  if (duration_s <= 0) throw DomainError("contention duration must be positive");
  if (block_bytes == 0 || block_bytes % 4) throw DomainError("block size must be a multiple of 4");
  if (writers.empty()) return {};
  const ArbitrationTree tree(cfg);
  ArbitrationTree::Slots slots(tree, writers);

  // One slot carries one 4-byte write transaction plus its framing.
  const double slot_cycles = 4.0 * cfg.elink.transaction_overhead_factor /
                             cfg.elink.link_bytes_per_cycle;
  const auto n_slots = static_cast<std::uint64_t>(std::floor(duration_s * cfg.clock_hz / slot_cycles));
  std::vector<std::uint64_t> txns = slots.run(n_slots);
  txns.resize(writers.size(), 0);

  const double capacity = elink_payload_bytes_per_cycle(cfg.elink) * cfg.clock_hz * duration_s;
  std::vector<UtilizationRecord> out;
  out.reserve(writers.size());
  for (size_t i = 0; i < writers.size(); ++i) {
    UtilizationRecord r;
    r.core = writers[i];
    r.bytes = txns[i] * 4;
    r.completed_iterations = r.bytes / block_bytes;
    r.utilization = static_cast<double>(r.bytes) / capacity;
    out.push_back(r);
  }
  return out;
}

ELinkServer::ELinkServer(const MeshConfig& cfg, const ArbitrationTree& tree)
    : tree_(tree), capacity_(elink_payload_bytes_per_cycle(cfg.elink)) {}

void ELinkServer::advance(double now) {
  const double dt = now - last_;
  if (dt > 0) {
    for (auto& [id, f] : flows_) f.remaining = std::max(0.0, f.remaining - f.rate * dt);
  }
  last_ = std::max(last_, now);
}

void ELinkServer::rebalance() {
  std::map<Coord, int> per_core;
  for (const auto& [id, f] : flows_) ++per_core[f.core];
  std::vector<Coord> cores;
  for (const auto& [c, n] : per_core) cores.push_back(c);
  const auto share = tree_.shares(cores);
  for (auto& [id, f] : flows_) {
    auto it = share.find(f.core);
    f.rate = it == share.end() ? 0.0 : capacity_ * it->second / per_core[f.core];
  }
}

std::uint64_t ELinkServer::add(double now, const Coord& core, std::uint64_t bytes) {
  advance(now);
  const std::uint64_t id = next_id_++;
  flows_[id] = Flow{core, static_cast<double>(bytes), 0.0, bytes};
  rebalance();
  return id;
}

std::optional<std::pair<double, std::uint64_t>> ELinkServer::next_completion() const {
  std::optional<std::pair<double, std::uint64_t>> best;
  for (const auto& [id, f] : flows_) {
    if (f.rate <= 0) continue;
    const double t = last_ + f.remaining / f.rate;
    if (!best || t < best->first) best = {t, id};
  }
  return best;
}

void ELinkServer::finish(double now, std::uint64_t id) {
  advance(now);
  auto it = flows_.find(id);
  if (it == flows_.end()) return;
  served_ += it->second.bytes;
  flows_.erase(it);
  rebalance();
}

}  // namespace meshsim
