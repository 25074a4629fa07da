#pragma once

// Reverse-mode AD in three successive refinements.
//
// All three push a multiplier M (the product of the local derivatives on the
// path from the root) down the tree and deposit it at the Var leaves. At a Mul
// node the left child's multiplier needs the right child's primal, which is
// only known after the right child has been visited. Instead of a second pass,
// multipliers are DeferredReal cells: the product M * F2 is registered before
// the left child is visited and fires as soon as F2 is resolved. One traversal
// therefore computes the primal and the whole gradient.

#include <cstddef>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "ladder/deferred.hpp"
#include "ladder/expr.hpp"
#include "ladder/forward.hpp"
#include "ladder/sparse_gradient.hpp"

namespace ladder {

/// Fixed-length gradient indexed by VarId, updated in place.
class DenseGradient {
 public:
  DenseGradient() = default;
  explicit DenseGradient(std::size_t n) : values_(n, 0.0) {}
  explicit DenseGradient(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](VarId id) const { return values_[id.offset()]; }
  double& operator[](VarId id) { return values_[id.offset()]; }

  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }

  friend bool operator==(const DenseGradient&, const DenseGradient&) = default;

 private:
  std::vector<double> values_;
};

struct DenseResult {
  double primal;
  DenseGradient gradient;
};

/// Instrumentation for one reverse-mode call.
struct ReverseStats {
  std::size_t cells_created = 0;
  std::size_t cells_pending_after = 0;
  std::size_t accumulator_inserts = 0;
  std::size_t gradient_allocations = 0;
};

namespace detail {

inline std::size_t expected_cells(const Expr& e) {
  return static_cast<std::size_t>(e.node_count()) * 2 + 16;
}

/// Single traversal shared by the threaded and dense variants. `deposit` is
/// called at each Var leaf with the leaf's (possibly pending) multiplier.
template <class Deposit>
double sweep(const Expr& e, const Env& env, DeferredReal m, DeferredArena& cells,
             Deposit& deposit) {
  if (!e.has_vars()) return eval(e, env);
  switch (e.op()) {
    case Op::var: {
      const double f = env.lookup(e.var_id());
      deposit(e.var_id(), m);
      return f;
    }
    case Op::add: {
      const double f1 = sweep(e.lhs(), env, m, cells, deposit);
      const double f2 = sweep(e.rhs(), env, m, cells, deposit);
      return f1 + f2;
    }
    case Op::mul: {
      if (!e.rhs().has_vars()) {
        const double f2 = eval(e.rhs(), env);
        const double f1 = sweep(e.lhs(), env, cells.scale(m, f2), cells, deposit);
        return f1 * f2;
      }
      if (!e.lhs().has_vars()) {
        const double f1 = eval(e.lhs(), env);
        return f1 * sweep(e.rhs(), env, cells.scale(m, f1), cells, deposit);
      }
      const DeferredReal f2_cell = cells.pending();
      const DeferredReal m1 = cells.product(m, f2_cell);
      const double f1 = sweep(e.lhs(), env, m1, cells, deposit);
      const DeferredReal m2 = cells.scale(m, f1);
      const double f2 = sweep(e.rhs(), env, m2, cells, deposit);
      cells.resolve(f2_cell, f2);
      return f1 * f2;
    }
    case Op::pow: {
      const bool exponent_varies = e.rhs().has_vars();
      const DeferredReal d1 = cells.pending();
      const DeferredReal m1 = cells.product(m, d1);
      const double f1 = sweep(e.lhs(), env, m1, cells, deposit);
      const DeferredReal d2 = exponent_varies ? cells.pending() : DeferredReal{};
      const double f2 = exponent_varies ? sweep(e.rhs(), env, cells.product(m, d2), cells, deposit)
                                        : eval(e.rhs(), env);
      const double f = prim::pow(f1, f2);
      const auto partials = prim::pow_partials(f1, f2, f, exponent_varies);
      cells.resolve(d1, partials.base);
      if (exponent_varies) cells.resolve(d2, partials.exponent);
      return f;
    }
    default: {
      if (e.op() == Op::neg) return -sweep(e.arg(), env, cells.scale(m, -1.0), cells, deposit);
      const DeferredReal local = cells.pending();
      const DeferredReal m1 = cells.product(m, local);
      const double f1 = sweep(e.arg(), env, m1, cells, deposit);
      const double f = prim::apply(e.op(), f1);
      cells.resolve(local, prim::derivative(e.op(), f1, f));
      return f;
    }
  }
}

using CellGradient = std::map<VarId, DeferredReal>;

struct ScalarSweep {
  double primal;
  CellGradient gradient;
};

// Multiplier propagation with per-subtree gradients merged bottom-up.
inline ScalarSweep scalar_sweep(const Expr& e, const Env& env, DeferredReal m,
                                DeferredArena& cells) {
  auto plus = [&cells](DeferredReal a, DeferredReal b) { return cells.sum(a, b); };
  if (!e.has_vars()) return {eval(e, env), {}};
  switch (e.op()) {
    case Op::var: {
      const double f = env.lookup(e.var_id());
      CellGradient g;
      g.emplace(e.var_id(), m);
      return {f, std::move(g)};
    }
    case Op::add: {
      auto [f1, g1] = scalar_sweep(e.lhs(), env, m, cells);
      auto [f2, g2] = scalar_sweep(e.rhs(), env, m, cells);
      union_with(g1, std::move(g2), plus);
      return {f1 + f2, std::move(g1)};
    }
    case Op::mul: {
      if (!e.rhs().has_vars()) {
        const double f2 = eval(e.rhs(), env);
        auto [f1, g1] = scalar_sweep(e.lhs(), env, cells.scale(m, f2), cells);
        return {f1 * f2, std::move(g1)};
      }
      if (!e.lhs().has_vars()) {
        const double f1 = eval(e.lhs(), env);
        auto [f2, g2] = scalar_sweep(e.rhs(), env, cells.scale(m, f1), cells);
        return {f1 * f2, std::move(g2)};
      }
      const DeferredReal f2_cell = cells.pending();
      const DeferredReal m1 = cells.product(m, f2_cell);
      auto [f1, g1] = scalar_sweep(e.lhs(), env, m1, cells);
      const DeferredReal m2 = cells.scale(m, f1);
      auto [f2, g2] = scalar_sweep(e.rhs(), env, m2, cells);
      cells.resolve(f2_cell, f2);
      union_with(g1, std::move(g2), plus);
      return {f1 * f2, std::move(g1)};
    }
    case Op::pow: {
      const bool exponent_varies = e.rhs().has_vars();
      const DeferredReal d1 = cells.pending();
      const DeferredReal m1 = cells.product(m, d1);
      auto [f1, g1] = scalar_sweep(e.lhs(), env, m1, cells);
      const DeferredReal d2 = exponent_varies ? cells.pending() : DeferredReal{};
      auto [f2, g2] = exponent_varies ? scalar_sweep(e.rhs(), env, cells.product(m, d2), cells)
                                      : ScalarSweep{eval(e.rhs(), env), {}};
      const double f = prim::pow(f1, f2);
      const auto partials = prim::pow_partials(f1, f2, f, exponent_varies);
      cells.resolve(d1, partials.base);
      if (exponent_varies) cells.resolve(d2, partials.exponent);
      union_with(g1, std::move(g2), plus);
      return {f, std::move(g1)};
    }
    default: {
      if (e.op() == Op::neg) {
        auto [f1, g1] = scalar_sweep(e.arg(), env, cells.scale(m, -1.0), cells);
        return {-f1, std::move(g1)};
      }
      const DeferredReal local = cells.pending();
      const DeferredReal m1 = cells.product(m, local);
      auto [f1, g1] = scalar_sweep(e.arg(), env, m1, cells);
      const double f = prim::apply(e.op(), f1);
      cells.resolve(local, prim::derivative(e.op(), f1, f));
      return {f, std::move(g1)};
    }
  }
}

inline void finish(DeferredArena& cells, ReverseStats* stats) {
  if (stats != nullptr) {
    stats->cells_created = cells.size();
    stats->cells_pending_after = cells.pending_count();
  }
  cells.finish_traversal();
}

}  // namespace detail

/// Reverse mode with scalar multipliers: leaves yield singleton gradients
/// {y: M} and sibling gradients are merged with deferred sums.
inline SparseResult rev_scalar(const Expr& e, const Env& env, ReverseStats* stats = nullptr) {
  DeferredArena cells(detail::expected_cells(e));
  auto [primal, cell_gradient] = detail::scalar_sweep(e, env, cells.constant(1.0), cells);
  detail::finish(cells, stats);
  SparseGradient::Map values;
  for (const auto& [id, cell] : cell_gradient) values.emplace_hint(values.end(), id, cells.value(cell));
  return {primal, SparseGradient(std::move(values))};
}

/// Reverse mode threading one accumulator through the traversal; each Var
/// leaf inserts its multiplier with add-combination. O(N log V).
inline SparseResult rev_threaded(const Expr& e, const Env& env, ReverseStats* stats = nullptr) {
  DeferredArena cells(detail::expected_cells(e));
  SparseGradient accumulator;
  std::size_t inserts = 0;
  auto deposit = [&](VarId id, DeferredReal m) {
    ++inserts;
    cells.on_resolved(
        m,
        [](void* context, std::uint32_t index, double value) {
          static_cast<SparseGradient*>(context)->insert_with_plus(VarId(index), value);
        },
        &accumulator, id.index());
  };
  const double primal = detail::sweep(e, env, cells.constant(1.0), cells, deposit);
  detail::finish(cells, stats);
  if (stats != nullptr) stats->accumulator_inserts = inserts;
  return {primal, std::move(accumulator)};
}

/// Reverse mode over a dense gradient array allocated once and updated in
/// place at each Var leaf. O(N + V).
inline DenseResult rev_dense(const Expr& e, const Env& env, ReverseStats* stats = nullptr) {
  DenseGradient gradient(env.size());
  DeferredArena cells(detail::expected_cells(e));
  std::size_t inserts = 0;
  double* slots = gradient.values().data();
  auto deposit = [&](VarId id, DeferredReal m) {
    ++inserts;
    cells.on_resolved(
        m,
        [](void* context, std::uint32_t offset, double value) {
          double& slot = static_cast<double*>(context)[offset];
          slot = slot + value;
        },
        slots, static_cast<std::uint32_t>(id.offset()));
  };
  const double primal = detail::sweep(e, env, cells.constant(1.0), cells, deposit);
  detail::finish(cells, stats);
  if (stats != nullptr) {
    stats->accumulator_inserts = inserts;
    stats->gradient_allocations = 1;
  }
  return {primal, std::move(gradient)};
}

}  // namespace ladder
