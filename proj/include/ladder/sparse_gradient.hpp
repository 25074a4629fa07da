#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <map>
#include <utility>
#include <vector>

#include "ladder/expr.hpp"

namespace ladder {

/// Merges `from` into `into`, combining values of shared keys with `op` and
/// splicing the nodes of keys present only in `from`. Both maps are walked
/// once in key order, so the cost is linear in their combined size and no
/// node is allocated.
template <class Key, class Value, class Combine>
void union_with(std::map<Key, Value>& into, std::map<Key, Value>&& from, Combine&& op) {
  auto hint = into.begin();
  while (!from.empty()) {
    auto source = from.begin();
    while (hint != into.end() && hint->first < source->first) ++hint;
    if (hint != into.end() && !(source->first < hint->first)) {
      hint->second = op(hint->second, source->second);
      from.erase(source);
    } else {
      hint = std::next(into.insert(hint, from.extract(source)));
    }
  }
}

/// Partial map from variables to partial derivatives. An absent key means the
/// derivative is 0; explicit zeros may appear after cancellation.
class SparseGradient {
 public:
  using Map = std::map<VarId, double>;

  SparseGradient() = default;
  SparseGradient(std::initializer_list<std::pair<const VarId, double>> entries)
      : entries_(entries) {}
  explicit SparseGradient(Map entries) : entries_(std::move(entries)) {}

  static SparseGradient singleton(VarId id, double value) {
    SparseGradient g;
    g.entries_.emplace(id, value);
    return g;
  }

  /// Value at `id`, 0 when absent.
  double operator[](VarId id) const {
    const auto it = entries_.find(id);
    return it == entries_.end() ? 0.0 : it->second;
  }

  bool contains(VarId id) const { return entries_.contains(id); }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  /// Adds `value` to the entry at `id`, inserting it when absent.
  void insert_with_plus(VarId id, double value) {
    auto [it, inserted] = entries_.try_emplace(id, value);
    if (!inserted) it->second = it->second + value;
  }

  const Map& entries() const noexcept { return entries_; }
  Map& entries() noexcept { return entries_; }

  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  /// Dense copy of length n, zero where absent.
  std::vector<double> to_dense(std::size_t n) const {
    std::vector<double> dense(n, 0.0);
    for (const auto& [id, value] : entries_) {
      if (id.offset() < n) dense[id.offset()] = value;
    }
    return dense;
  }

  /// Pointwise equality treating absent entries as 0.
  friend bool operator==(const SparseGradient& a, const SparseGradient& b) {
    for (const auto& [id, value] : a.entries_) {
      if (b[id] != value) return false;
    }
    for (const auto& [id, value] : b.entries_) {
      if (a[id] != value) return false;
    }
    return true;
  }

 private:
  Map entries_;
};

/// Union of two gradients; shared keys are combined with `op`, other keys keep
/// their value (which is the pointwise result whenever op(v, 0) = v).
template <class Combine = std::plus<>>
SparseGradient grad_merge(SparseGradient a, SparseGradient b, Combine op = {}) {
  if (a.size() < b.size()) {
    // Walk the smaller map; flip the operands so op keeps its argument order.
    union_with(b.entries(), std::move(a.entries()),
               [&op](double from_b, double from_a) { return op(from_a, from_b); });
    return b;
  }
  union_with(a.entries(), std::move(b.entries()), op);
  return a;
}

/// Multiplies every entry by `factor`; the key set is preserved.
inline SparseGradient grad_scale(double factor, const SparseGradient& g) {
  SparseGradient::Map out;
  for (const auto& [id, value] : g) out.emplace_hint(out.end(), id, factor * value);
  return SparseGradient(std::move(out));
}

}  // namespace ladder
