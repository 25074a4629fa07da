#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ladder/error.hpp"

namespace ladder {

/// Handle to a one-shot deferred real owned by a DeferredArena.
struct DeferredReal {
  std::uint32_t index;
};

/// Process-wide record of reverse-mode traversals and of deferred cells that
/// were still pending when a traversal finished. The latter must stay 0.
struct DeferredHygiene {
  std::uint64_t traversals;
  std::uint64_t leaked_cells;
};

namespace detail {
inline std::atomic<std::uint64_t> hygiene_traversals{0};
inline std::atomic<std::uint64_t> hygiene_leaked{0};
}  // namespace detail

inline DeferredHygiene deferred_hygiene() {
  return {detail::hygiene_traversals.load(), detail::hygiene_leaked.load()};
}

/// Storage for the deferred cells of one traversal.
///
/// A cell is Pending until resolve() gives it a value, after which it is
/// Resolved for good. Work attached to a pending cell (products, sums, sinks)
/// runs at the moment the cell and every other input of that work are
/// resolved; attaching work to a resolved cell runs it immediately. This is
/// what lets a reverse sweep consume multipliers that only become known
/// later in the same traversal.
class DeferredArena {
 public:
  /// Callback receiving the value of a cell once it resolves.
  using Sink = void (*)(void* context, std::uint32_t tag, double value);

  DeferredArena() : DeferredArena(0) {}
  explicit DeferredArena(std::size_t expected_cells) {
    // Buffers are recycled per thread so repeated traversals do not pay for
    // fresh allocations.
    auto& pool = storage_pool();
    if (!pool.empty()) {
      storage_ = std::move(pool.back());
      pool.pop_back();
    }
    storage_.cells.reserve(expected_cells);
    storage_.waiters.reserve(expected_cells);
  }

  ~DeferredArena() {
    storage_.cells.clear();
    storage_.waiters.clear();
    storage_.sinks.clear();
    storage_.ready.clear();
    auto& pool = storage_pool();
    if (pool.size() < 4) pool.push_back(std::move(storage_));
  }

  DeferredArena(const DeferredArena&) = delete;
  DeferredArena& operator=(const DeferredArena&) = delete;

  DeferredReal constant(double value) {
    cells_.push_back({value, kNone, true});
    return {static_cast<std::uint32_t>(cells_.size() - 1)};
  }

  DeferredReal pending() {
    cells_.push_back({0.0, kNone, false});
    ++pending_;
    return {static_cast<std::uint32_t>(cells_.size() - 1)};
  }

  bool resolved(DeferredReal c) const { return cells_[c.index].resolved; }
  double value(DeferredReal c) const {
    if (!cells_[c.index].resolved) throw InternalError("read of a pending deferred cell");
    return cells_[c.index].value;
  }

  /// Gives a pending cell its value and runs everything waiting on it.
  void resolve(DeferredReal c, double value) {
    settle(c.index, value);
    drain();
  }

  /// Cell that resolves to a * b once both are resolved.
  DeferredReal product(DeferredReal a, DeferredReal b) {
    // 1 * x == x exactly, so the existing cell can stand in for the product.
    if (cells_[a.index].resolved && cells_[a.index].value == 1.0) return b;
    if (cells_[b.index].resolved && cells_[b.index].value == 1.0) return a;
    return combine(Action::product, a, b);
  }

  /// Cell that resolves to a * k.
  DeferredReal scale(DeferredReal a, double k) {
    if (cells_[a.index].resolved) return constant(cells_[a.index].value * k);
    if (k == 1.0) return a;
    return combine(Action::product, a, constant(k));
  }

  /// Cell that resolves to a + b once both are resolved.
  DeferredReal sum(DeferredReal a, DeferredReal b) { return combine(Action::sum, a, b); }

  /// Calls sink(context, tag, value) when `c` resolves, or now if it has.
  void on_resolved(DeferredReal c, Sink sink, void* context, std::uint32_t tag) {
    if (cells_[c.index].resolved) {
      sink(context, tag, cells_[c.index].value);
      return;
    }
    sinks_.push_back({sink, context, tag});
    attach(c.index, {Action::sink, kNone, static_cast<std::uint32_t>(sinks_.size() - 1), kNone});
  }

  std::size_t size() const noexcept { return cells_.size(); }
  std::size_t pending_count() const noexcept { return pending_; }

  /// Called by a traversal when it is done. Pending cells at this point are a
  /// broken invariant.
  void finish_traversal() {
    detail::hygiene_traversals.fetch_add(1, std::memory_order_relaxed);
    if (pending_ != 0) {
      detail::hygiene_leaked.fetch_add(pending_, std::memory_order_relaxed);
      throw InternalError(std::to_string(pending_) + " deferred cells still pending");
    }
  }

 private:
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

  enum class Action : std::uint8_t { product, sum, sink };

  struct Cell {
    double value;
    std::uint32_t first_waiter;
    bool resolved;
  };

  struct Waiter {
    Action action;
    std::uint32_t target;   // cell to resolve (product, sum)
    std::uint32_t operand;  // other input cell, or sink index
    std::uint32_t next;
  };

  struct SinkCall {
    Sink fn;
    void* context;
    std::uint32_t tag;
  };

  struct Storage {
    std::vector<Cell> cells;
    std::vector<Waiter> waiters;
    std::vector<SinkCall> sinks;
    std::vector<std::uint32_t> ready;
  };

  static std::vector<Storage>& storage_pool() {
    thread_local std::vector<Storage> pool;
    return pool;
  }

  Storage storage_;
  std::vector<Cell>& cells_ = storage_.cells;
  std::vector<Waiter>& waiters_ = storage_.waiters;
  std::vector<SinkCall>& sinks_ = storage_.sinks;
  std::vector<std::uint32_t>& ready_ = storage_.ready;
  std::size_t pending_ = 0;

  static double apply(Action action, double a, double b) {
    return action == Action::product ? a * b : a + b;
  }

  DeferredReal combine(Action action, DeferredReal a, DeferredReal b) {
    const bool ra = cells_[a.index].resolved;
    const bool rb = cells_[b.index].resolved;
    if (ra && rb) return constant(apply(action, cells_[a.index].value, cells_[b.index].value));
    const DeferredReal target = pending();
    // Each pending input waits; whichever resolves last fires the target.
    if (!ra) attach(a.index, {action, target.index, b.index, kNone});
    if (!rb && b.index != a.index) attach(b.index, {action, target.index, a.index, kNone});
    return target;
  }

  void attach(std::uint32_t cell, Waiter waiter) {
    waiter.next = cells_[cell].first_waiter;
    waiters_.push_back(waiter);
    cells_[cell].first_waiter = static_cast<std::uint32_t>(waiters_.size() - 1);
  }

  void settle(std::uint32_t cell, double value) {
    Cell& c = cells_[cell];
    if (c.resolved) throw InternalError("deferred cell resolved twice");
    c.value = value;
    c.resolved = true;
    --pending_;
    ready_.push_back(cell);
  }

  // Runs the waiters of newly resolved cells, iteratively so long chains of
  // dependent cells cannot exhaust the stack.
  void drain() {
    while (!ready_.empty()) {
      const std::uint32_t cell = ready_.back();
      ready_.pop_back();
      const double value = cells_[cell].value;
      for (std::uint32_t w = cells_[cell].first_waiter; w != kNone; w = waiters_[w].next) {
        const Waiter waiter = waiters_[w];
        if (waiter.action == Action::sink) {
          const SinkCall& call = sinks_[waiter.operand];
          call.fn(call.context, call.tag, value);
          continue;
        }
        const Cell& other = cells_[waiter.operand];
        // Both inputs may settle in the same cascade; the first one to be
        // drained fires the target.
        if (!other.resolved || cells_[waiter.target].resolved) continue;
        settle(waiter.target, apply(waiter.action, value, other.value));
      }
      cells_[cell].first_waiter = kNone;
    }
  }
};

}  // namespace ladder
