#pragma once

#include <utility>

#include "ladder/expr.hpp"

namespace ladder {

/// Symbolic dual number: a rebuilt copy of the input and its derivative.
struct SymbolicDual {
  Expr primal;
  Expr tangent;
};

namespace detail {

// Derivative of op(arg) given the (primal) argument and its derivative.
inline Expr unary_rule(Op op, const Expr& arg, Expr darg) {
  switch (op) {
    case Op::neg: return Expr::neg(std::move(darg));
    case Op::sin: return Expr::mul(Expr::cos(arg), std::move(darg));
    case Op::cos: return Expr::mul(Expr::neg(Expr::sin(arg)), std::move(darg));
    case Op::exp: return Expr::mul(Expr::exp(arg), std::move(darg));
    case Op::log: return Expr::mul(Expr::pow(arg, Expr::lit(-1.0)), std::move(darg));
    default: throw InternalError("not a unary operator");
  }
}

// d(f^g) = g * f^(g - 1) * df + f^g * log(f) * dg. The second term is only
// built when g mentions a variable, matching the numeric modes, which need
// log(f) exactly then.
inline Expr pow_rule(const Expr& base, const Expr& exponent, Expr dbase, Expr dexponent) {
  Expr by_base = Expr::mul(
      Expr::mul(exponent, Expr::pow(base, Expr::add(exponent, Expr::lit(-1.0)))),
      std::move(dbase));
  if (!exponent.has_vars()) return by_base;
  Expr by_exponent =
      Expr::mul(Expr::mul(Expr::pow(base, exponent), Expr::log(base)), std::move(dexponent));
  return Expr::add(std::move(by_base), std::move(by_exponent));
}

inline Expr var_rule(VarId y, VarId x) { return Expr::lit(y == x ? 1.0 : 0.0); }

}  // namespace detail

/// Textbook symbolic differentiation d e / d x, without simplification.
inline Expr symb_derive(const Expr& e, VarId x) {
  switch (e.op()) {
    case Op::lit: return Expr::lit(0.0);
    case Op::var: return detail::var_rule(e.var_id(), x);
    case Op::add: return Expr::add(symb_derive(e.lhs(), x), symb_derive(e.rhs(), x));
    case Op::mul:
      return Expr::add(Expr::mul(e.rhs(), symb_derive(e.lhs(), x)),
                       Expr::mul(e.lhs(), symb_derive(e.rhs(), x)));
    case Op::pow:
      return detail::pow_rule(e.lhs(), e.rhs(), symb_derive(e.lhs(), x),
                              symb_derive(e.rhs(), x));
    default: return detail::unary_rule(e.op(), e.arg(), symb_derive(e.arg(), x));
  }
}

/// Differentiates and rebuilds the primal in the same pass. The tangent is
/// expressed over the rebuilt primal subterms.
inline SymbolicDual symb_dual(const Expr& e, VarId x) {
  switch (e.op()) {
    case Op::lit: return {Expr::lit(e.literal()), Expr::lit(0.0)};
    case Op::var: return {Expr::var(e.var_id()), detail::var_rule(e.var_id(), x)};
    case Op::add: {
      auto [f1, df1] = symb_dual(e.lhs(), x);
      auto [f2, df2] = symb_dual(e.rhs(), x);
      return {Expr::add(std::move(f1), std::move(f2)), Expr::add(std::move(df1), std::move(df2))};
    }
    case Op::mul: {
      auto [f1, df1] = symb_dual(e.lhs(), x);
      auto [f2, df2] = symb_dual(e.rhs(), x);
      Expr df = Expr::add(Expr::mul(f2, std::move(df1)), Expr::mul(f1, std::move(df2)));
      return {Expr::mul(std::move(f1), std::move(f2)), std::move(df)};
    }
    case Op::pow: {
      auto [f1, df1] = symb_dual(e.lhs(), x);
      auto [f2, df2] = symb_dual(e.rhs(), x);
      Expr df = detail::pow_rule(f1, f2, std::move(df1), std::move(df2));
      return {Expr::pow(std::move(f1), std::move(f2)), std::move(df)};
    }
    default: {
      auto [f1, df1] = symb_dual(e.arg(), x);
      Expr df = detail::unary_rule(e.op(), f1, std::move(df1));
      return {Expr::unary(e.op(), std::move(f1)), std::move(df)};
    }
  }
}

/// Reference semantics for every AD mode: derive symbolically, then evaluate
/// primal and tangent.
inline Dual ad_spec(const Expr& e, VarId x, const Env& env) {
  const SymbolicDual dual = symb_dual(e, x);
  const double primal = eval(dual.primal, env);
  return {primal, eval(dual.tangent, env)};
}

}  // namespace ladder
