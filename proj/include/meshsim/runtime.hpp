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
 * @file runtime.hpp
 * @brief Discrete-event engine and the SDK-like API kernels program against.
 *
 * Time is kept in core clock cycles (double, so fractional per-hop costs
 * stay exact). Events at equal times run in (phase, row, col, seq) order;
 * memory updates use phase 0 so a kernel resumed at time t observes every
 * write visible at t.
 */

#pragma once

#include <coroutine>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "meshsim/config.hpp"
#include "meshsim/dma.hpp"
#include "meshsim/elink.hpp"
#include "meshsim/errors.hpp"
#include "meshsim/memory.hpp"
#include "meshsim/mesh.hpp"
#include "meshsim/task.hpp"

namespace meshsim {

/// A kernel threw; identifies the faulting core.
class KernelFault : public Error {
 public:
  KernelFault(Coord core, const std::string& what)
      : Error("kernel fault at core (" + std::to_string(core.row) + "," +
              std::to_string(core.col) + "): " + what),
        core_(core) {}
  [[nodiscard]] Coord core() const { return core_; }

 private:
  Coord core_;
};

/// No events remain but kernels are still blocked.
class DeadlockError : public Error {
 public:
  struct Blocked {
    Coord core;
    std::string reason;
  };
  DeadlockError(std::vector<Blocked> blocked, const std::string& what)
      : Error(what), blocked_(std::move(blocked)) {}
  [[nodiscard]] const std::vector<Blocked>& blocked() const { return blocked_; }

 private:
  std::vector<Blocked> blocked_;
};

struct Workgroup {
  Coord start;
  int rows = 0;
  int cols = 0;

  /// Throws ConfigError unless the rectangle is non-empty and inside the mesh.
  void validate(const MeshConfig& cfg) const;
  [[nodiscard]] bool contains(const Coord& c) const;
  [[nodiscard]] Coord at(int r, int c) const { return {start.row + r, start.col + c}; }
  [[nodiscard]] std::vector<Coord> members() const;
  [[nodiscard]] int size() const { return rows * cols; }
};

class Simulator;
class Ctx;

/// Completion handle for a DMA chain.
struct DmaHandle {
  Coord core;
  int channel = 0;
  std::uint64_t id = 0;
};

enum class FlagCmp { Equal, AtLeast };

class Barrier {
 public:
  explicit Barrier(const Workgroup& wg, std::optional<Coord> master = std::nullopt);
  [[nodiscard]] const Workgroup& group() const { return wg_; }
  [[nodiscard]] Coord master() const { return master_; }

 private:
  friend class Simulator;
  Workgroup wg_;
  Coord master_;
  int arrived_ = 0;
  double last_arrival_ = 0.0;
  std::vector<std::pair<Coord, std::coroutine_handle<>>> waiting_;
};

class Mutex {
 public:
  Mutex(Coord home, std::uint32_t local_addr) : home_(home), addr_(local_addr) {}
  [[nodiscard]] Coord home() const { return home_; }
  [[nodiscard]] std::uint32_t address() const { return addr_; }
  [[nodiscard]] std::optional<Coord> owner() const { return owner_; }

 private:
  friend class Simulator;
  struct Waiter {
    Coord core;
    std::coroutine_handle<> h;
  };
  Coord home_;
  std::uint32_t addr_;
  std::optional<Coord> owner_;
  bool releasing_ = false;
  std::deque<Waiter> queue_;
};

/// Summary of one host_run.
struct HostResult {
  double end_cycles = 0.0;
  double end_ns = 0.0;
  std::uint64_t events = 0;
};

class Simulator {
 public:
  explicit Simulator(const MeshConfig& cfg);
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  [[nodiscard]] const MeshConfig& config() const { return cfg_; }
  MemorySystem& memory() { return mem_; }
  [[nodiscard]] const MemorySystem& memory() const { return mem_; }
  [[nodiscard]] const AddressMap& map() const { return mem_.map(); }
  [[nodiscard]] const ArbitrationTree& arbitration() const { return tree_; }
  [[nodiscard]] double now() const { return now_; }

  /// JSON-lines event log (time, core, kind, bytes); nullptr disables it.
  void set_log(std::ostream* os) { log_ = os; }

  /// Registers a kernel on `core`; it starts at the current time when run() is called.
  void spawn(const Coord& core, Task task, const Workgroup& wg);
  /// Runs until all kernels finish. Throws KernelFault or DeadlockError.
  HostResult run();

  /// Per-core API handle; valid for the simulator's lifetime.
  Ctx& ctx(const Coord& core);

  // ---- operations used by Ctx awaiters --------------------------------
  void resume_at(const Coord& core, double t, std::coroutine_handle<> h, std::string reason);
  /// Schedules a memory write made visible at `t`.
  void apply_at(double t, const Coord& writer, GlobalAddr addr, std::vector<std::uint8_t> bytes);
  /// Remote or local store issued now. Returns visibility time.
  double issue_write(const Coord& core, GlobalAddr addr, std::span<const std::uint8_t> bytes);
  DmaHandle dma_start(const Coord& core, const DmaDescriptor& d);
  [[nodiscard]] bool dma_done(const DmaHandle& h) const;
  void dma_on_done(const DmaHandle& h, std::coroutine_handle<> waiter);
  [[nodiscard]] bool flag_satisfied(const Coord& core, std::uint32_t addr, std::uint32_t v,
                                    FlagCmp cmp) const;
  void flag_block(const Coord& core, std::uint32_t addr, std::uint32_t v, FlagCmp cmp,
                  std::coroutine_handle<> h);
  void barrier_arrive(Barrier& b, const Coord& core, std::coroutine_handle<> h);
  void mutex_request(Mutex& m, const Coord& core, std::coroutine_handle<> h, bool try_only,
                     bool* result);
  void mutex_release(Mutex& m, const Coord& core);
  void log(const Coord& core, const char* kind, std::uint64_t bytes);

  /// Direct-write time between two cores (0 for a core to itself).
  [[nodiscard]] double write_latency(const Coord& a, const Coord& b, std::uint64_t bytes) const;

 private:
  struct Event {
    double time;
    int phase;
    int row, col;
    std::uint64_t seq;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const;
  };
  struct FlagWaiter {
    std::uint32_t addr;
    std::uint32_t value;
    FlagCmp cmp;
    std::coroutine_handle<> h;
  };
  struct Channel {
    bool busy = false;
    std::uint64_t id = 0;
  };
  struct CoreState;
  struct DmaJob {
    Coord core;
    int channel;
    bool done = false;
    std::vector<std::coroutine_handle<>> waiters;
  };
  struct LinkFlow {
    std::function<void(double)> on_done;
  };

  void push(double t, int phase, const Coord& at, std::function<void()> fn);
  void check_flags(const Coord& core);
  void run_segment(std::uint64_t job, std::shared_ptr<const DmaDescriptor> seg, bool chained);
  void finish_job(std::uint64_t job);
  void link_start(bool write_dir, double t, const Coord& core, std::uint64_t bytes,
                  std::function<void(double)> on_done);
  void link_reschedule(bool write_dir);
  CoreState& state(const Coord& c);

  MeshConfig cfg_;
  MemorySystem mem_;
  ArbitrationTree tree_;
  ELinkServer link_write_, link_read_;
  std::map<std::uint64_t, LinkFlow> link_flows_[2];
  std::uint64_t link_gen_[2] = {0, 0};
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::vector<std::unique_ptr<CoreState>> cores_;
  std::map<std::uint64_t, DmaJob> jobs_;
  std::uint64_t next_job_ = 1;
  std::uint64_t seq_ = 0;
  std::uint64_t events_ = 0;
  double now_ = 0.0;
  std::ostream* log_ = nullptr;
};

/// The runtime API seen by one kernel.
class Ctx {
 public:
  Ctx(Simulator& sim, Coord self) : sim_(&sim), self_(self) {}

  [[nodiscard]] Coord coord() const { return self_; }
  [[nodiscard]] const Workgroup& group() const { return wg_; }
  /// Position inside the workgroup.
  [[nodiscard]] int group_row() const { return self_.row - wg_.start.row; }
  [[nodiscard]] int group_col() const { return self_.col - wg_.start.col; }
  [[nodiscard]] double now() const { return sim_->now(); }
  [[nodiscard]] const MeshConfig& config() const { return sim_->config(); }
  Simulator& sim() { return *sim_; }

  /// Global address of a local offset on this core or on another one.
  [[nodiscard]] GlobalAddr global(std::uint32_t local) const { return sim_->map().global(self_, local); }
  [[nodiscard]] GlobalAddr global(const Coord& c, std::uint32_t local) const {
    return sim_->map().global(c, local);
  }
  /// Group-relative neighbour; nullopt when outside the workgroup.
  [[nodiscard]] std::optional<Coord> neighbor(int dr, int dc) const;

  /// Pointer into this core's scratchpad (no simulated cost; compute() covers it).
  template <typename T>
  T* local(std::uint32_t addr) {
    return reinterpret_cast<T*>(sim_->memory().scratchpad(self_).data() + addr);
  }

  // ---- awaitables -----------------------------------------------------
  struct Delay {
    Simulator* sim;
    Coord core;
    double until;
    const char* reason;
    bool await_ready() const noexcept { return until <= sim->now(); }
    void await_suspend(std::coroutine_handle<> h) { sim->resume_at(core, until, h, reason); }
    void await_resume() const noexcept {}
  };

  /// Consumes `cycles` of CPU time.
  Delay compute(double cycles);
  /// Stores `bytes` at `addr` (local or global). The CPU is busy for the
  /// issue cost; remote data becomes visible later.
  Delay write(GlobalAddr addr, std::span<const std::uint8_t> bytes);
  template <typename T>
  Delay write_value(GlobalAddr addr, const T& v) {
    return write(addr, {reinterpret_cast<const std::uint8_t*>(&v), sizeof(T)});
  }
  /// Visibility time of the most recent write() issued by this core.
  [[nodiscard]] double last_write_visible() const { return last_visible_; }

  /// Reads `len` bytes; remote reads take a request/response trip.
  struct ReadAwaiter {
    Simulator* sim;
    Coord core;
    std::vector<std::uint8_t> data;
    double until;
    bool await_ready() const noexcept { return until <= sim->now(); }
    void await_suspend(std::coroutine_handle<> h) { sim->resume_at(core, until, h, "read"); }
    std::vector<std::uint8_t> await_resume() { return std::move(data); }
  };
  ReadAwaiter read(GlobalAddr addr, std::uint64_t len);

  struct DmaAwaiter {
    Simulator* sim;
    DmaHandle handle;
    bool blocking;
    bool await_ready() const { return !blocking || sim->dma_done(handle); }
    void await_suspend(std::coroutine_handle<> h) { sim->dma_on_done(handle, h); }
    DmaHandle await_resume() const noexcept { return handle; }
  };
  /// Starts a (possibly chained) DMA. Blocking descriptors suspend until done.
  DmaAwaiter dma_start(const DmaDescriptor& d);
  /// Waits for completion; returns immediately if already complete.
  DmaAwaiter dma_wait(const DmaHandle& h) { return {sim_, h, true}; }

  struct FlagAwaiter {
    Simulator* sim;
    Coord core;
    std::uint32_t addr, value;
    FlagCmp cmp;
    bool await_ready() const { return sim->flag_satisfied(core, addr, value, cmp); }
    void await_suspend(std::coroutine_handle<> h) { sim->flag_block(core, addr, value, cmp, h); }
    void await_resume() const noexcept {}
  };
  /// Waits until the 32-bit word at local `addr` matches `value`.
  FlagAwaiter flag_wait(std::uint32_t addr, std::uint32_t value, FlagCmp cmp = FlagCmp::Equal);

  struct BarrierAwaiter {
    Simulator* sim;
    Barrier* b;
    Coord core;
    bool await_ready() const noexcept { return false; }
    void await_suspend(std::coroutine_handle<> h) { sim->barrier_arrive(*b, core, h); }
    void await_resume() const noexcept {}
  };
  BarrierAwaiter barrier_wait(Barrier& b);

  struct MutexAwaiter {
    Simulator* sim;
    Mutex* m;
    Coord core;
    bool try_only;
    bool result = false;
    bool await_ready() const noexcept { return false; }
    void await_suspend(std::coroutine_handle<> h) { sim->mutex_request(*m, core, h, try_only, &result); }
    bool await_resume() const noexcept { return result; }
  };
  MutexAwaiter mutex_lock(Mutex& m) { return {sim_, &m, self_, false}; }
  MutexAwaiter mutex_trylock(Mutex& m) { return {sim_, &m, self_, true}; }
  void mutex_unlock(Mutex& m) { sim_->mutex_release(m, self_); }

  void timer_start(int id);
  /// Cycles since timer_start(id).
  double timer_stop(int id);

 private:
  friend class Simulator;
  Simulator* sim_;
  Coord self_;
  Workgroup wg_;
  double last_visible_ = 0.0;
  EventTimer timers_[2];
};

using KernelFactory = std::function<Task(Ctx&)>;
using HostStep = std::function<void(Simulator&)>;

/// Create group, load, start, run, collect.
HostResult host_run(Simulator& sim, const Workgroup& wg, const KernelFactory& kernel,
                    const HostStep& load = {}, const HostStep& collect = {});

}  // namespace meshsim
