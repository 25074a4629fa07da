#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ladder/error.hpp"

namespace ladder {

/// Variable identifier. Ids are 1-based and index an Env positionally.
class VarId {
 public:
  constexpr explicit VarId(std::uint32_t index) : index_(index) {}

  constexpr std::uint32_t index() const noexcept { return index_; }
  constexpr std::size_t offset() const noexcept { return index_ - 1; }

  friend constexpr auto operator<=>(VarId, VarId) = default;

 private:
  std::uint32_t index_;
};

/// Dense positional environment: value i belongs to VarId i.
class Env {
 public:
  Env() = default;
  Env(std::initializer_list<double> values) : values_(values) {}
  explicit Env(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double operator[](VarId id) const noexcept { return values_[id.offset()]; }

  double lookup(VarId id) const {
    if (id.index() == 0 || id.index() > values_.size()) {
      throw EnvironmentError("variable x" + std::to_string(id.index()) +
                             " is not bound by an environment of size " +
                             std::to_string(values_.size()));
    }
    return values_[id.offset()];
  }

  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const Env&, const Env&) = default;

 private:
  std::vector<double> values_;
};

enum class Op : std::uint8_t { lit, var, add, mul, neg, sin, cos, exp, log, pow };

constexpr bool is_unary(Op op) noexcept {
  return op == Op::neg || op == Op::sin || op == Op::cos || op == Op::exp || op == Op::log;
}

constexpr bool is_binary(Op op) noexcept {
  return op == Op::add || op == Op::mul || op == Op::pow;
}

/// Immutable arithmetic expression tree. Copies share structure, so an Expr
/// is cheap to pass by value and safe to read from several threads.
class Expr {
 public:
  static Expr lit(double value);
  static Expr var(VarId id);
  static Expr var(std::uint32_t index) { return var(VarId(index)); }
  static Expr add(Expr lhs, Expr rhs) { return binary(Op::add, std::move(lhs), std::move(rhs)); }
  static Expr mul(Expr lhs, Expr rhs) { return binary(Op::mul, std::move(lhs), std::move(rhs)); }
  static Expr pow(Expr base, Expr exponent) {
    return binary(Op::pow, std::move(base), std::move(exponent));
  }
  static Expr neg(Expr arg) { return unary(Op::neg, std::move(arg)); }
  static Expr sin(Expr arg) { return unary(Op::sin, std::move(arg)); }
  static Expr cos(Expr arg) { return unary(Op::cos, std::move(arg)); }
  static Expr exp(Expr arg) { return unary(Op::exp, std::move(arg)); }
  static Expr log(Expr arg) { return unary(Op::log, std::move(arg)); }

  static Expr unary(Op op, Expr arg);
  static Expr binary(Op op, Expr lhs, Expr rhs);

  Op op() const noexcept;
  double literal() const noexcept;
  VarId var_id() const noexcept;
  /// Operand of a unary node, left operand of a binary node.
  const Expr& lhs() const noexcept;
  const Expr& rhs() const noexcept;
  const Expr& arg() const noexcept { return lhs(); }

  /// Number of nodes in the tree, counting shared subtrees once per occurrence.
  std::uint64_t node_count() const noexcept;
  /// True iff some Var leaf occurs in the tree.
  bool has_vars() const noexcept;
  /// Largest variable index in the tree, 0 if there is none.
  std::uint32_t max_var() const noexcept;

  friend bool operator==(const Expr& a, const Expr& b);

 private:
  struct Node;

  Expr() = default;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  std::shared_ptr<const Node> node_;
};

struct Expr::Node {
  Op op = Op::lit;
  bool has_vars = false;
  std::uint32_t var = 0;
  std::uint32_t max_var = 0;
  double value = 0.0;
  std::uint64_t count = 1;
  Expr lhs;
  Expr rhs;
};

inline Expr Expr::lit(double value) {
  if (!std::isfinite(value)) throw DomainError("literal must be a finite real");
  auto node = std::make_shared<Node>();
  node->op = Op::lit;
  node->value = value;
  return Expr(std::move(node));
}

inline Expr Expr::var(VarId id) {
  if (id.index() == 0) throw EnvironmentError("variable ids start at 1");
  auto node = std::make_shared<Node>();
  node->op = Op::var;
  node->var = id.index();
  node->max_var = id.index();
  node->has_vars = true;
  return Expr(std::move(node));
}

inline Expr Expr::unary(Op op, Expr arg) {
  auto node = std::make_shared<Node>();
  node->op = op;
  node->has_vars = arg.has_vars();
  node->max_var = arg.max_var();
  node->count = arg.node_count() + 1;
  node->lhs = std::move(arg);
  return Expr(std::move(node));
}

inline Expr Expr::binary(Op op, Expr lhs, Expr rhs) {
  auto node = std::make_shared<Node>();
  node->op = op;
  node->has_vars = lhs.has_vars() || rhs.has_vars();
  node->max_var = std::max(lhs.max_var(), rhs.max_var());
  node->count = lhs.node_count() + rhs.node_count() + 1;
  node->lhs = std::move(lhs);
  node->rhs = std::move(rhs);
  return Expr(std::move(node));
}

inline Op Expr::op() const noexcept { return node_->op; }
inline double Expr::literal() const noexcept { return node_->value; }
inline VarId Expr::var_id() const noexcept { return VarId(node_->var); }
inline const Expr& Expr::lhs() const noexcept { return node_->lhs; }
inline const Expr& Expr::rhs() const noexcept { return node_->rhs; }
inline std::uint64_t Expr::node_count() const noexcept { return node_->count; }
inline bool Expr::has_vars() const noexcept { return node_->has_vars; }
inline std::uint32_t Expr::max_var() const noexcept { return node_->max_var; }

inline bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  if (a.op() != b.op() || a.node_count() != b.node_count()) return false;
  switch (a.op()) {
    case Op::lit:
      return a.literal() == b.literal();
    case Op::var:
      return a.var_id() == b.var_id();
    case Op::add:
    case Op::mul:
    case Op::pow:
      return a.lhs() == b.lhs() && a.rhs() == b.rhs();
    default:
      return a.arg() == b.arg();
  }
}

// Primitive arithmetic shared by every evaluation and differentiation mode, so
// that domain checks and local derivatives are identical across modes.
namespace prim {

inline double log(double x) {
  if (!(x > 0.0)) throw DomainError("log of non-positive value " + std::to_string(x));
  return std::log(x);
}

inline double pow(double base, double exponent) {
  if (base < 0.0 && std::trunc(exponent) != exponent) {
    throw DomainError("fractional power of negative base " + std::to_string(base));
  }
  if (base == 0.0 && exponent < 0.0) throw DomainError("negative power of zero");
  return std::pow(base, exponent);
}

inline double apply(Op op, double x) {
  switch (op) {
    case Op::neg: return -x;
    case Op::sin: return std::sin(x);
    case Op::cos: return std::cos(x);
    case Op::exp: return std::exp(x);
    case Op::log: return prim::log(x);
    default: throw InternalError("not a unary operator");
  }
}

/// d op(x) / dx, given the argument x and the result y = op(x).
inline double derivative(Op op, double x, double y) {
  switch (op) {
    case Op::neg: return -1.0;
    case Op::sin: return std::cos(x);
    case Op::cos: return -std::sin(x);
    case Op::exp: return y;
    case Op::log: return 1.0 / x;
    default: throw InternalError("not a unary operator");
  }
}

struct PowPartials {
  double base;
  double exponent;
};

/// Partials of base^exponent. The exponent partial needs log(base), so it is
/// only formed when the exponent depends on some variable; otherwise it is 0.
inline PowPartials pow_partials(double base, double exponent, double result,
                                bool exponent_varies) {
  PowPartials p{exponent * prim::pow(base, exponent + -1.0), 0.0};
  if (exponent_varies) {
    if (!(base > 0.0)) {
      throw DomainError("pow with variable exponent needs a positive base, got " +
                        std::to_string(base));
    }
    p.exponent = result * std::log(base);
  }
  return p;
}

}  // namespace prim

/// A primal value paired with one partial derivative.
struct Dual {
  double primal;
  double tangent;
};

/// Plain recursive evaluation.
inline double eval(const Expr& e, const Env& env) {
  switch (e.op()) {
    case Op::lit: return e.literal();
    case Op::var: return env.lookup(e.var_id());
    case Op::add: {
      const double lhs = eval(e.lhs(), env);
      return lhs + eval(e.rhs(), env);
    }
    case Op::mul: {
      const double lhs = eval(e.lhs(), env);
      return lhs * eval(e.rhs(), env);
    }
    case Op::pow: {
      const double base = eval(e.lhs(), env);
      return prim::pow(base, eval(e.rhs(), env));
    }
    default: return prim::apply(e.op(), eval(e.arg(), env));
  }
}

// Convenience builders used by the model modules.
inline Expr operator+(Expr a, Expr b) { return Expr::add(std::move(a), std::move(b)); }
inline Expr operator*(Expr a, Expr b) { return Expr::mul(std::move(a), std::move(b)); }
inline Expr operator-(Expr a) { return Expr::neg(std::move(a)); }
inline Expr operator-(Expr a, Expr b) { return Expr::add(std::move(a), Expr::neg(std::move(b))); }

/// Sum of terms as a balanced tree of Add nodes, keeping the depth
/// logarithmic for objectives with many summands. Empty sums are Lit 0.
inline Expr balanced_sum(std::span<const Expr> terms) {
  if (terms.empty()) return Expr::lit(0.0);
  if (terms.size() == 1) return terms.front();
  const std::size_t half = terms.size() / 2;
  return Expr::add(balanced_sum(terms.first(half)), balanced_sum(terms.subspan(half)));
}

}  // namespace ladder
