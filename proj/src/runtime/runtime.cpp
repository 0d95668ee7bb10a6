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

#include "meshsim/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

namespace meshsim {

// ---------------------------------------------------------------- Workgroup

void Workgroup::validate(const MeshConfig& cfg) const {
  if (rows < 1 || cols < 1) throw ConfigError("workgroup must have at least one row and column");
  if (start.row < 0 || start.col < 0 || start.row + rows > cfg.rows ||
      start.col + cols > cfg.cols) {
    throw ConfigError("workgroup " + std::to_string(rows) + "x" + std::to_string(cols) +
                      " does not fit the mesh");
  }
}

bool Workgroup::contains(const Coord& c) const {
  return c.row >= start.row && c.row < start.row + rows && c.col >= start.col &&
         c.col < start.col + cols;
}

std::vector<Coord> Workgroup::members() const {
  std::vector<Coord> out;
  out.reserve(static_cast<size_t>(size()));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out.push_back(at(r, c));
  }
  return out;
}

Barrier::Barrier(const Workgroup& wg, std::optional<Coord> master)
    : wg_(wg), master_(master.value_or(wg.start)) {
  if (!wg_.contains(master_)) throw MembershipError("barrier master outside its workgroup");
}

// ---------------------------------------------------------------- Simulator

struct Simulator::CoreState {
  Coord coord;
  std::unique_ptr<Ctx> ctx;
  Task task;
  bool spawned = false;
  bool started = false;
  bool done = false;
  std::string blocked_on;
  std::vector<FlagWaiter> flags;
  Channel ch[2];
};

bool Simulator::Later::operator()(const Event& a, const Event& b) const {
  return std::tie(a.time, a.phase, a.row, a.col, a.seq) >
         std::tie(b.time, b.phase, b.row, b.col, b.seq);
}

Simulator::Simulator(const MeshConfig& cfg)
    : cfg_(cfg),
      mem_(cfg),
      tree_(cfg),
      link_write_(cfg, tree_),
      link_read_(cfg, tree_) {
  cfg_.validate();
  for (int r = 0; r < cfg.rows; ++r) {
    for (int c = 0; c < cfg.cols; ++c) {
      auto s = std::make_unique<CoreState>();
      s->coord = {r, c};
      s->ctx = std::make_unique<Ctx>(*this, Coord{r, c});
      cores_.push_back(std::move(s));
    }
  }
}

Simulator::~Simulator() = default;

Simulator::CoreState& Simulator::state(const Coord& c) {
  check_bounds(c, cfg_.rows, cfg_.cols);
  return *cores_[static_cast<size_t>(c.row * cfg_.cols + c.col)];
}

Ctx& Simulator::ctx(const Coord& core) { return *state(core).ctx; }

void Simulator::push(double t, int phase, const Coord& at, std::function<void()> fn) {
  queue_.push(Event{std::max(t, now_), phase, at.row, at.col, seq_++, std::move(fn)});
}

void Simulator::log(const Coord& core, const char* kind, std::uint64_t bytes) {
  if (!log_) return;
  nlohmann::json j = {{"t_ns", cfg_.cycles_to_ns(now_)},
                      {"core", {core.row, core.col}},
                      {"kind", kind},
                      {"bytes", bytes}};
  *log_ << j.dump() << '\n';
}

void Simulator::spawn(const Coord& core, Task task, const Workgroup& wg) {
  auto& s = state(core);
  if (s.spawned && !s.done) throw ConfigError("core already runs a kernel");
  s.task = std::move(task);
  s.spawned = true;
  s.started = false;
  s.done = false;
  s.ctx->wg_ = wg;
}

void Simulator::resume_at(const Coord& core, double t, std::coroutine_handle<> h,
                          std::string reason) {
  auto& s = state(core);
  s.blocked_on = std::move(reason);
  push(t, 1, core, [this, core, h] {
    auto& st = state(core);
    st.blocked_on.clear();
    h.resume();
    if (st.task.done() && !st.done) {
      st.done = true;
      log(core, "kernel_done", 0);
      if (auto e = st.task.error()) {
        try {
          std::rethrow_exception(e);
        } catch (const std::exception& ex) {
          throw KernelFault(core, ex.what());
        }
      }
    }
  });
}

HostResult Simulator::run() {
  for (auto& s : cores_) {
    if (s->spawned && !s->started) {
      s->started = true;
      log(s->coord, "kernel_start", 0);
      resume_at(s->coord, now_, s->task.handle(), "start");
    }
  }
  while (!queue_.empty()) {
    Event ev = queue_.top();
    queue_.pop();
    now_ = ev.time;
    ++events_;
    ev.fn();
  }
  std::vector<DeadlockError::Blocked> blocked;
  for (auto& s : cores_) {
    if (s->spawned && !s->done) {
      blocked.push_back({s->coord, s->blocked_on.empty() ? "unknown" : s->blocked_on});
    }
  }
  if (!blocked.empty()) {
    std::ostringstream os;
    os << "deadlock at cycle " << now_ << ": " << blocked.size() << " kernel(s) blocked";
    for (const auto& b : blocked) os << " (" << b.core.row << "," << b.core.col << "):" << b.reason;
    throw DeadlockError(std::move(blocked), os.str());
  }
  return {now_, cfg_.cycles_to_ns(now_), events_};
}

double Simulator::write_latency(const Coord& a, const Coord& b, std::uint64_t bytes) const {
  if (a == b) return 0.0;
  return transfer_cycles(TransferMethod::DirectWrite, std::max<std::uint64_t>(bytes, 1),
                         manhattan_distance(a, b), cfg_.timing);
}

void Simulator::check_flags(const Coord& core) {
  auto& s = state(core);
  if (s.flags.empty()) return;
  std::vector<FlagWaiter> keep;
  for (const auto& w : s.flags) {
    if (flag_satisfied(core, w.addr, w.value, w.cmp)) {
      resume_at(core, now_ + cfg_.timing.sync_flag_poll_cycles, w.h, "flag_poll");
    } else {
      keep.push_back(w);
    }
  }
  s.flags.swap(keep);
}

void Simulator::apply_at(double t, const Coord& writer, GlobalAddr addr,
                         std::vector<std::uint8_t> bytes) {
  push(t, 0, writer, [this, addr, data = std::move(bytes)] {
    mem_.write(addr, data);
    const Owner o = map().decode(addr);
    if (!o.is_shared()) check_flags(o.core);
  });
}

double Simulator::issue_write(const Coord& core, GlobalAddr addr,
                              std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw DomainError("zero-byte write");
  const Owner o = map().resolve(addr, bytes.size(), core);
  const GlobalAddr abs = addr < AddressMap::kLocalWindow ? (map().global(core, 0) | addr) : addr;
  std::vector<std::uint8_t> data(bytes.begin(), bytes.end());
  log(core, "write", bytes.size());
  if (!o.is_shared() && o.core == core) {
    mem_.write(abs, data);
    check_flags(core);
    return now_;
  }
  if (!o.is_shared()) {
    const double vis = now_ + write_latency(core, o.core, bytes.size());
    apply_at(vis, core, abs, std::move(data));
    return vis;
  }
  const double start = now_ + cfg_.timing.direct_write_setup_cycles +
                       cfg_.timing.hop_latency_cycles * tree_.hops_to_exit(core);
  const auto n = data.size();
  link_start(true, start, core, n, [this, abs, d = std::move(data)](double) { mem_.write(abs, d); });
  return std::nan("");
}

// ---------------------------------------------------------------- DMA

DmaHandle Simulator::dma_start(const Coord& core, const DmaDescriptor& d) {
  validate_chain(d, map(), core);
  auto& ch = state(core).ch[d.channel];
  if (ch.busy) throw BusyError("DMA channel " + std::to_string(d.channel) + " busy");
  const std::uint64_t id = next_job_++;
  jobs_[id] = DmaJob{core, d.channel, false, {}};
  ch.busy = true;
  ch.id = id;
  run_segment(id, std::make_shared<const DmaDescriptor>(d), false);
  return {core, d.channel, id};
}

void Simulator::run_segment(std::uint64_t job, std::shared_ptr<const DmaDescriptor> seg,
                            bool chained) {
  const Coord core = jobs_.at(job).core;
  const DmaEndpoints ep = validate_segment(*seg, map(), core);
  auto data = dma_gather(*seg, mem_, core);
  log(core, "dma_segment", data.size());
  auto complete = [this, job, core, seg, ep](std::vector<std::uint8_t>& bytes) {
    dma_scatter(*seg, mem_, core, bytes);
    if (!ep.dst.is_shared()) check_flags(ep.dst.core);
    if (seg->chain) {
      run_segment(job, seg->chain, true);
    } else {
      finish_job(job);
    }
  };
  if (!ep.src.is_shared() && !ep.dst.is_shared()) {
    const int dist = manhattan_distance(ep.src.core, ep.dst.core);
    const double t = now_ + dma_segment_cycles(*seg, dist, cfg_.timing, chained);
    push(t, 0, core, [complete, bytes = std::move(data)]() mutable { complete(bytes); });
    return;
  }
  // Off-chip: setup and the on-chip leg, then the payload through the link.
  const bool to_dram = ep.dst.is_shared();
  const Coord chip_end = to_dram ? (ep.src.is_shared() ? core : ep.src.core) : ep.dst.core;
  const double setup =
      chained ? cfg_.timing.dma_chain_setup_cycles : cfg_.timing.dma_setup_cycles;
  const double start = now_ + setup +
                       cfg_.timing.hop_latency_cycles * tree_.hops_to_exit(chip_end) +
                       cfg_.timing.dma_row_overhead_cycles * (seg->outer_count - 1);
  const auto n = data.size();
  link_start(to_dram, start, chip_end, n,
             [complete, bytes = std::move(data)](double) mutable { complete(bytes); });
}

void Simulator::finish_job(std::uint64_t id) {
  auto& job = jobs_.at(id);
  job.done = true;
  auto& ch = state(job.core).ch[job.channel];
  if (ch.id == id) ch.busy = false;
  log(job.core, "dma_done", 0);
  for (auto h : job.waiters) resume_at(job.core, now_, h, "dma_wait");
  job.waiters.clear();
}

bool Simulator::dma_done(const DmaHandle& h) const {
  auto it = jobs_.find(h.id);
  return it == jobs_.end() || it->second.done;
}

void Simulator::dma_on_done(const DmaHandle& h, std::coroutine_handle<> waiter) {
  auto& job = jobs_.at(h.id);
  state(h.core).blocked_on = "dma_wait";
  job.waiters.push_back(waiter);
}

// ---------------------------------------------------------------- off-chip link

void Simulator::link_start(bool write_dir, double t, const Coord& core, std::uint64_t bytes,
                           std::function<void(double)> on_done) {
  const Coord exit{cfg_.elink.exit_row, cfg_.elink.exit_col};
  push(t, 0, exit, [this, write_dir, core, bytes, cb = std::move(on_done)]() mutable {
    auto& server = write_dir ? link_write_ : link_read_;
    const std::uint64_t id = server.add(now_, core, bytes);
    link_flows_[write_dir ? 1 : 0][id] = LinkFlow{std::move(cb)};
    link_reschedule(write_dir);
  });
}

void Simulator::link_reschedule(bool write_dir) {
  const int k = write_dir ? 1 : 0;
  const std::uint64_t gen = ++link_gen_[k];
  auto& server = write_dir ? link_write_ : link_read_;
  const auto next = server.next_completion();
  if (!next) return;
  const Coord exit{cfg_.elink.exit_row, cfg_.elink.exit_col};
  push(next->first, 0, exit, [this, write_dir, k, gen, id = next->second] {
    if (gen != link_gen_[k]) return;  // superseded by a later add/finish
    auto& srv = write_dir ? link_write_ : link_read_;
    srv.finish(now_, id);
    auto node = link_flows_[k].extract(id);
    link_reschedule(write_dir);
    node.mapped().on_done(now_);
  });
}

// ---------------------------------------------------------------- flags, barrier, mutex

bool Simulator::flag_satisfied(const Coord& core, std::uint32_t addr, std::uint32_t v,
                               FlagCmp cmp) const {
  std::uint32_t cur;
  std::memcpy(&cur, mem_.scratchpad(core).data() + addr, sizeof cur);
  return cmp == FlagCmp::Equal ? cur == v : cur >= v;
}

void Simulator::flag_block(const Coord& core, std::uint32_t addr, std::uint32_t v, FlagCmp cmp,
                           std::coroutine_handle<> h) {
  auto& s = state(core);
  s.blocked_on = "flag_wait@" + std::to_string(addr);
  s.flags.push_back({addr, v, cmp, h});
}

void Simulator::barrier_arrive(Barrier& b, const Coord& core, std::coroutine_handle<> h) {
  state(core).blocked_on = "barrier";
  const double t = now_ + write_latency(core, b.master_, 4);
  push(t, 0, core, [this, &b, core, h] {
    b.waiting_.emplace_back(core, h);
    b.last_arrival_ = now_;
    if (++b.arrived_ < b.wg_.size()) return;
    for (const auto& [q, qh] : b.waiting_) {
      resume_at(q, now_ + write_latency(b.master_, q, 4), qh, "barrier");
    }
    b.waiting_.clear();
    b.arrived_ = 0;
  });
}

void Simulator::mutex_request(Mutex& m, const Coord& core, std::coroutine_handle<> h,
                              bool try_only, bool* result) {
  state(core).blocked_on = try_only ? "mutex_trylock" : "mutex_lock";
  const double t = now_ + write_latency(core, m.home_, 4);
  push(t, 0, core, [this, &m, core, h, try_only, result] {
    const double back = write_latency(m.home_, core, 4);
    if (!m.owner_) {
      m.owner_ = core;
      const std::uint32_t tag = static_cast<std::uint32_t>(core.row * cfg_.cols + core.col + 1);
      mem_.store(map().global(m.home_, m.addr_), tag);
      *result = true;
      resume_at(core, now_ + back, h, "mutex_grant");
    } else if (try_only) {
      *result = false;
      resume_at(core, now_ + back, h, "mutex_trylock");
    } else {
      m.queue_.push_back({core, h});
    }
  });
}

void Simulator::mutex_release(Mutex& m, const Coord& core) {
  if (m.owner_ != core || m.releasing_) throw ProtocolError("mutex unlocked by a non-owner");
  m.releasing_ = true;
  const double t = now_ + write_latency(core, m.home_, 4);
  push(t, 0, core, [this, &m] {
    m.releasing_ = false;
    m.owner_.reset();
    mem_.store(map().global(m.home_, m.addr_), std::uint32_t{0});
    if (m.queue_.empty()) return;
    const auto w = m.queue_.front();
    m.queue_.pop_front();
    m.owner_ = w.core;
    const std::uint32_t tag = static_cast<std::uint32_t>(w.core.row * cfg_.cols + w.core.col + 1);
    mem_.store(map().global(m.home_, m.addr_), tag);
    resume_at(w.core, now_ + write_latency(m.home_, w.core, 4), w.h, "mutex_grant");
  });
}

// ---------------------------------------------------------------- Ctx

std::optional<Coord> Ctx::neighbor(int dr, int dc) const {
  const Coord c{self_.row + dr, self_.col + dc};
  if (!wg_.contains(c)) return std::nullopt;
  return c;
}

Ctx::Delay Ctx::compute(double cycles) {
  if (cycles < 0) throw DomainError("negative compute time");
  sim_->log(self_, "compute", 0);
  return {sim_, self_, sim_->now() + cycles, "compute"};
}

Ctx::Delay Ctx::write(GlobalAddr addr, std::span<const std::uint8_t> bytes) {
  const double vis = sim_->issue_write(self_, addr, bytes);
  last_visible_ = vis;
  const Owner o = sim_->map().resolve(addr, bytes.size(), self_);
  double cost = 0.0;
  if (o.is_shared() || o.core != self_) {
    const double words = std::ceil(static_cast<double>(bytes.size()) / 4.0);
    cost = words * sim_->config().timing.direct_write_issue_cycles;
  }
  return {sim_, self_, sim_->now() + cost, "write_issue"};
}

Ctx::ReadAwaiter Ctx::read(GlobalAddr addr, std::uint64_t len) {
  if (len == 0) throw DomainError("zero-byte read");
  const Owner o = sim_->map().resolve(addr, len, self_);
  const GlobalAddr abs = addr < AddressMap::kLocalWindow ? global(0) | addr : addr;
  auto data = sim_->memory().read(abs, len);
  const auto& t = sim_->config().timing;
  double until = sim_->now();
  if (o.is_shared()) {
    until += t.direct_write_setup_cycles +
             t.hop_latency_cycles * sim_->arbitration().hops_to_exit(self_) +
             static_cast<double>(len) / elink_payload_bytes_per_cycle(sim_->config().elink);
  } else if (o.core != self_) {
    until += sim_->write_latency(self_, o.core, len);
  }
  sim_->log(self_, "read", len);
  return {sim_, self_, std::move(data), until};
}

Ctx::DmaAwaiter Ctx::dma_start(const DmaDescriptor& d) {
  const DmaHandle h = sim_->dma_start(self_, d);
  return {sim_, h, d.mode == DmaMode::Blocking};
}

Ctx::FlagAwaiter Ctx::flag_wait(std::uint32_t addr, std::uint32_t value, FlagCmp cmp) {
  if (addr % 4 || addr + 4 > sim_->map().local_bytes()) {
    throw AddressError("flag address must be an aligned local word");
  }
  return {sim_, self_, addr, value, cmp};
}

Ctx::BarrierAwaiter Ctx::barrier_wait(Barrier& b) {
  if (!b.group().contains(self_)) throw MembershipError("core is not a barrier participant");
  return {sim_, &b, self_};
}

void Ctx::timer_start(int id) {
  if (id != 0 && id != 1) throw DomainError("timer id must be 0 or 1");
  timers_[id].start(now());
}

double Ctx::timer_stop(int id) {
  if (id != 0 && id != 1) throw DomainError("timer id must be 0 or 1");
  return timers_[id].stop(now());
}

// ---------------------------------------------------------------- host

HostResult host_run(Simulator& sim, const Workgroup& wg, const KernelFactory& kernel,
                    const HostStep& load, const HostStep& collect) {
  wg.validate(sim.config());
  if (load) load(sim);
  for (const Coord& c : wg.members()) {
    Ctx& ctx = sim.ctx(c);
    sim.spawn(c, kernel(ctx), wg);
  }
  HostResult r = sim.run();
  if (collect) collect(sim);
  return r;
}

}  // namespace meshsim
