#pragma once

// Infix text format for expressions and numbers.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?            right-associative
//   primary := number | 'x' index | func '(' expr ')'
//            | '(' '-' number ')'               negative literal
//            | '(' expr ')'
//   func    := sin | cos | exp | log | sqrt
//
// Sugar: a - b is Add(a, Neg b), a / b is Mul(a, Pow(b, -1)), sqrt(a) is
// Pow(a, 0.5). format() emits the minimal parenthesization that parses back
// to the same tree.

#include <cctype>
#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ladder/error.hpp"
#include "ladder/expr.hpp"

namespace ladder {

/// Shortest decimal text that reads back to the same double.
inline std::string format_number(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, result.ptr);
}

namespace detail {

class ExprParser {
 public:
  explicit ExprParser(std::string_view text) : text_(text) {}

  Expr parse_all() {
    Expr e = parse_expr();
    skip_space();
    if (!at_end()) fail("unexpected '" + std::string(1, peek()) + "'");
    return e;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;

  bool at_end() const { return pos_ >= text_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void skip_space() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) advance();
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw SyntaxError(message, line_, column_);
  }

  bool accept(char c) {
    skip_space();
    if (peek() == c) {
      advance();
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      fail(std::string("expected '") + c + "'" +
           (at_end() ? " but input ended" : " but found '" + std::string(1, peek()) + "'"));
    }
  }

  Expr parse_expr() {
    Expr e = parse_term();
    for (;;) {
      if (accept('+')) {
        e = Expr::add(std::move(e), parse_term());
      } else if (accept('-')) {
        e = Expr::add(std::move(e), Expr::neg(parse_term()));
      } else {
        return e;
      }
    }
  }

  Expr parse_term() {
    Expr e = parse_unary();
    for (;;) {
      if (accept('*')) {
        e = Expr::mul(std::move(e), parse_unary());
      } else if (accept('/')) {
        e = Expr::mul(std::move(e), Expr::pow(parse_unary(), Expr::lit(-1.0)));
      } else {
        return e;
      }
    }
  }

  Expr parse_unary() {
    if (accept('-')) return Expr::neg(parse_unary());
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (accept('^')) return Expr::pow(std::move(base), parse_unary());
    return base;
  }

  bool number_start(char c) const {
    return std::isdigit(static_cast<unsigned char>(c)) || c == '.';
  }

  // Lookahead for the "(-<number>)" negative-literal form.
  bool negative_literal_ahead() const {
    std::size_t i = pos_;
    auto space = [&] {
      while (i < text_.size() && std::isspace(static_cast<unsigned char>(text_[i]))) ++i;
    };
    space();
    if (i >= text_.size() || text_[i] != '-') return false;
    ++i;
    space();
    if (i >= text_.size() || !number_start(text_[i])) return false;
    i += number_length(i);
    space();
    return i < text_.size() && text_[i] == ')';
  }

  std::size_t number_length(std::size_t start) const {
    std::size_t i = start;
    auto digits = [&] {
      while (i < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i]))) ++i;
    };
    digits();
    if (i < text_.size() && text_[i] == '.') {
      ++i;
      digits();
    }
    if (i < text_.size() && (text_[i] == 'e' || text_[i] == 'E')) {
      std::size_t j = i + 1;
      if (j < text_.size() && (text_[j] == '+' || text_[j] == '-')) ++j;
      if (j < text_.size() && std::isdigit(static_cast<unsigned char>(text_[j]))) {
        i = j;
        digits();
      }
    }
    return i - start;
  }

  double parse_number() {
    const std::size_t length = number_length(pos_);
    const std::string_view lexeme = text_.substr(pos_, length);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(), value);
    if (ec != std::errc() || ptr != lexeme.data() + lexeme.size()) {
      fail("malformed number '" + std::string(lexeme) + "'");
    }
    for (std::size_t k = 0; k < length; ++k) advance();
    return value;
  }

  Expr parse_primary() {
    skip_space();
    if (at_end()) fail("expected an expression but input ended");
    const char c = peek();
    if (number_start(c)) return Expr::lit(parse_number());
    if (c == '(') {
      advance();
      if (negative_literal_ahead()) {
        expect('-');
        skip_space();
        const double value = parse_number();
        expect(')');
        return Expr::lit(-value);
      }
      Expr inner = parse_expr();
      expect(')');
      return inner;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_word();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  Expr parse_word() {
    const std::size_t line = line_;
    const std::size_t column = column_;
    std::size_t end = pos_;
    while (end < text_.size() && std::isalpha(static_cast<unsigned char>(text_[end]))) ++end;
    const std::string_view word = text_.substr(pos_, end - pos_);

    if (word == "x" && end < text_.size() && std::isdigit(static_cast<unsigned char>(text_[end]))) {
      advance();
      std::size_t digits_end = pos_;
      while (digits_end < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[digits_end]))) {
        ++digits_end;
      }
      std::uint32_t index = 0;
      const auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + digits_end, index);
      if (ec != std::errc()) throw SyntaxError("variable index out of range", line, column);
      if (index == 0) throw SyntaxError("variable ids start at x1", line, column);
      while (pos_ < digits_end) advance();
      return Expr::var(index);
    }

    Op op;
    bool is_sqrt = false;
    if (word == "sin") {
      op = Op::sin;
    } else if (word == "cos") {
      op = Op::cos;
    } else if (word == "exp") {
      op = Op::exp;
    } else if (word == "log") {
      op = Op::log;
    } else if (word == "sqrt") {
      op = Op::pow;
      is_sqrt = true;
    } else {
      throw SyntaxError("unknown identifier '" + std::string(word) + "'", line, column);
    }
    while (pos_ < end) advance();
    expect('(');
    Expr arg = parse_expr();
    expect(')');
    if (is_sqrt) return Expr::pow(std::move(arg), Expr::lit(0.5));
    return Expr::unary(op, std::move(arg));
  }
};

// Binding strength used for parenthesization.
inline int precedence(const Expr& e) {
  switch (e.op()) {
    case Op::add: return 1;
    case Op::mul: return 2;
    case Op::neg: return 3;
    case Op::pow: return 4;
    default: return 5;
  }
}

inline const char* function_name(Op op) {
  switch (op) {
    case Op::sin: return "sin";
    case Op::cos: return "cos";
    case Op::exp: return "exp";
    case Op::log: return "log";
    default: return "?";
  }
}

inline void format_into(std::string& out, const Expr& e, int min_precedence) {
  const bool parens = precedence(e) < min_precedence;
  if (parens) out += '(';
  switch (e.op()) {
    case Op::lit:
      if (std::signbit(e.literal())) {
        out += '(';
        out += format_number(e.literal());
        out += ')';
      } else {
        out += format_number(e.literal());
      }
      break;
    case Op::var:
      out += 'x';
      out += std::to_string(e.var_id().index());
      break;
    case Op::add:
      format_into(out, e.lhs(), 1);
      out += " + ";
      format_into(out, e.rhs(), 2);
      break;
    case Op::mul:
      format_into(out, e.lhs(), 2);
      out += " * ";
      format_into(out, e.rhs(), 3);
      break;
    case Op::neg:
      out += '-';
      // Inside parentheses "-3" would read back as a negative literal.
      format_into(out, e.arg(), parens && e.arg().op() == Op::lit ? 6 : 3);
      break;
    case Op::pow:
      format_into(out, e.lhs(), 5);
      out += '^';
      format_into(out, e.rhs(), 3);
      break;
    default:
      out += function_name(e.op());
      out += '(';
      format_into(out, e.arg(), 0);
      out += ')';
      break;
  }
  if (parens) out += ')';
}

}  // namespace detail

/// Parses infix text into an expression; throws SyntaxError with the position.
inline Expr parse(std::string_view text) { return detail::ExprParser(text).parse_all(); }

inline std::string format(const Expr& e) {
  std::string out;
  detail::format_into(out, e, 0);
  return out;
}

/// Parses a comma-separated list of reals ("3,4.5,-1"). Empty text is the
/// empty list.
inline std::vector<double> parse_real_list(std::string_view text) {
  std::vector<double> values;
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  if (trim(text).empty()) return values;
  std::size_t column = 1;
  for (;;) {
    const std::size_t comma = text.find(',');
    const std::string_view item = trim(text.substr(0, comma));
    double value = 0.0;
    const char* first = item.data();
    if (!item.empty() && item.front() == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, item.data() + item.size(), value);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size() ||
        !std::isfinite(value)) {
      throw SyntaxError("expected a real number, got '" + std::string(item) + "'", 1, column);
    }
    values.push_back(value);
    if (comma == std::string_view::npos) break;
    column += comma + 1;
    text.remove_prefix(comma + 1);
  }
  return values;
}

inline Env parse_env(std::string_view text) { return Env(parse_real_list(text)); }

}  // namespace ladder
