#pragma once

#include <utility>

#include "ladder/expr.hpp"
#include "ladder/sparse_gradient.hpp"

namespace ladder {

/// Forward mode for one partial derivative: evaluates the primal and the
/// tangent with respect to `x` in a single bottom-up pass.
inline Dual fwd_partial(const Expr& e, VarId x, const Env& env) {
  switch (e.op()) {
    case Op::lit: return {e.literal(), 0.0};
    case Op::var: return {env.lookup(e.var_id()), e.var_id() == x ? 1.0 : 0.0};
    case Op::add: {
      const Dual a = fwd_partial(e.lhs(), x, env);
      const Dual b = fwd_partial(e.rhs(), x, env);
      return {a.primal + b.primal, a.tangent + b.tangent};
    }
    case Op::mul: {
      const Dual a = fwd_partial(e.lhs(), x, env);
      const Dual b = fwd_partial(e.rhs(), x, env);
      return {a.primal * b.primal, b.primal * a.tangent + a.primal * b.tangent};
    }
    case Op::pow: {
      const Dual a = fwd_partial(e.lhs(), x, env);
      const Dual b = fwd_partial(e.rhs(), x, env);
      const double f = prim::pow(a.primal, b.primal);
      const auto d = prim::pow_partials(a.primal, b.primal, f, e.rhs().has_vars());
      double df = d.base * a.tangent;
      if (e.rhs().has_vars()) df = df + d.exponent * b.tangent;
      return {f, df};
    }
    default: {
      const Dual a = fwd_partial(e.arg(), x, env);
      const double f = prim::apply(e.op(), a.primal);
      if (e.op() == Op::neg) return {f, -a.tangent};
      return {f, prim::derivative(e.op(), a.primal, f) * a.tangent};
    }
  }
}

/// Primal value together with a sparse gradient.
struct SparseResult {
  double primal;
  SparseGradient gradient;
};

/// Forward mode over whole gradients: the tangent of every node is the
/// sparse gradient of its subtree, so each node costs O(V).
inline SparseResult fwd_gradient(const Expr& e, const Env& env) {
  if (!e.has_vars()) return {eval(e, env), {}};
  switch (e.op()) {
    case Op::var: return {env.lookup(e.var_id()), SparseGradient::singleton(e.var_id(), 1.0)};
    case Op::add: {
      auto [f1, df1] = fwd_gradient(e.lhs(), env);
      auto [f2, df2] = fwd_gradient(e.rhs(), env);
      return {f1 + f2, grad_merge(std::move(df1), std::move(df2))};
    }
    case Op::mul: {
      auto [f1, df1] = fwd_gradient(e.lhs(), env);
      auto [f2, df2] = fwd_gradient(e.rhs(), env);
      return {f1 * f2,
              grad_merge(grad_scale(f2, std::move(df1)), grad_scale(f1, std::move(df2)))};
    }
    case Op::pow: {
      auto [f1, df1] = fwd_gradient(e.lhs(), env);
      auto [f2, df2] = fwd_gradient(e.rhs(), env);
      const double f = prim::pow(f1, f2);
      const auto d = prim::pow_partials(f1, f2, f, e.rhs().has_vars());
      SparseGradient df = grad_scale(d.base, std::move(df1));
      if (e.rhs().has_vars()) df = grad_merge(std::move(df), grad_scale(d.exponent, std::move(df2)));
      return {f, std::move(df)};
    }
    default: {
      auto [f1, df1] = fwd_gradient(e.arg(), env);
      const double f = prim::apply(e.op(), f1);
      return {f, grad_scale(prim::derivative(e.op(), f1, f), std::move(df1))};
    }
  }
}

}  // namespace ladder
