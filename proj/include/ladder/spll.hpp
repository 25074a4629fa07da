#pragma once

// Fragment of the Sum-Product Loop Language made of nested comparisons of a
// fresh Uniform[0,1] draw against parameters:
//
//   main = if Uniform >= Theta[1]
//          then if Uniform >= Theta[2] then null else [true]
//          else [false]
//
// The then-branch of `Uniform >= Theta[k]` is taken with probability
// 1 - theta_k and the else-branch with probability theta_k. A bare comparison
// `Uniform >= Theta[k]` evaluates to the boolean outcome true or false.

#include <cctype>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ladder/error.hpp"
#include "ladder/expr.hpp"
#include "ladder/optim.hpp"

namespace ladder {

/// Canonical text of an outcome: null, true, false or a bracketed list such
/// as [true,false].
using Outcome = std::string;

class SpllProgram {
 public:
  /// One step of a root-to-leaf path.
  struct Edge {
    std::uint32_t theta;
    bool then_branch;
  };

  struct Leaf {
    Outcome outcome;
    std::vector<Edge> path;
  };

  static SpllProgram outcome(Outcome value) {
    auto node = std::make_shared<Node>();
    node->outcome = std::move(value);
    return SpllProgram(std::move(node));
  }

  static SpllProgram branch(std::uint32_t theta, SpllProgram then_branch, SpllProgram else_branch) {
    if (theta < 1) throw ModelError("Theta indices start at 1");
    std::set<Outcome> seen;
    for (const SpllProgram* side : {&then_branch, &else_branch}) {
      for (const Leaf& leaf : side->leaves()) {
        if (!seen.insert(leaf.outcome).second) {
          throw ModelError("outcome " + leaf.outcome + " appears at more than one leaf");
        }
      }
    }
    auto node = std::make_shared<Node>();
    node->theta = theta;
    node->then_branch = std::move(then_branch.node_);
    node->else_branch = std::move(else_branch.node_);
    return SpllProgram(std::move(node));
  }

  bool is_outcome() const noexcept { return node_->theta == 0; }
  const Outcome& outcome_value() const noexcept { return node_->outcome; }
  std::uint32_t theta() const noexcept { return node_->theta; }
  SpllProgram then_branch() const { return SpllProgram(node_->then_branch); }
  SpllProgram else_branch() const { return SpllProgram(node_->else_branch); }

  /// Leaves in then-before-else order with their paths from the root.
  std::vector<Leaf> leaves() const {
    std::vector<Leaf> out;
    std::vector<Edge> path;
    collect(*node_, path, out);
    return out;
  }

  /// Largest Theta index used, i.e. the number of parameters.
  std::uint32_t theta_count() const { return max_theta(*node_); }

  std::size_t depth() const { return depth_of(*node_); }

 private:
  struct Node {
    std::uint32_t theta = 0;  // 0 marks a leaf
    Outcome outcome;
    std::shared_ptr<const Node> then_branch;
    std::shared_ptr<const Node> else_branch;
  };

  explicit SpllProgram(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  static void collect(const Node& n, std::vector<Edge>& path, std::vector<Leaf>& out) {
    if (n.theta == 0) {
      out.push_back({n.outcome, path});
      return;
    }
    path.push_back({n.theta, true});
    collect(*n.then_branch, path, out);
    path.back().then_branch = false;
    collect(*n.else_branch, path, out);
    path.pop_back();
  }

  static std::uint32_t max_theta(const Node& n) {
    if (n.theta == 0) return 0;
    return std::max({n.theta, max_theta(*n.then_branch), max_theta(*n.else_branch)});
  }

  static std::size_t depth_of(const Node& n) {
    if (n.theta == 0) return 0;
    return 1 + std::max(depth_of(*n.then_branch), depth_of(*n.else_branch));
  }

  std::shared_ptr<const Node> node_;
};

namespace detail {

class SpllParser {
 public:
  explicit SpllParser(std::string_view text) : text_(text) {}

  SpllProgram parse_program() {
    expect_word("main");
    expect_symbol("=");
    SpllProgram p = parse_body();
    skip_space();
    if (pos_ < text_.size()) fail("unexpected text after program");
    return p;
  }

  Outcome parse_outcome_only() {
    Outcome o = parse_outcome();
    skip_space();
    if (pos_ < text_.size()) fail("unexpected text after outcome");
    return o;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;

  [[noreturn]] void fail(const std::string& message) const {
    throw SyntaxError(message, line_, column_);
  }

  void advance(std::size_t n = 1) {
    for (std::size_t i = 0; i < n && pos_ < text_.size(); ++i, ++pos_) {
      if (text_[pos_] == '\n') {
        ++line_;
        column_ = 1;
      } else {
        ++column_;
      }
    }
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '-') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();  // -- comment
      } else {
        break;
      }
    }
  }

  std::string_view peek_word() {
    skip_space();
    std::size_t end = pos_;
    while (end < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_')) {
      ++end;
    }
    return text_.substr(pos_, end - pos_);
  }

  bool accept_word(std::string_view word) {
    if (peek_word() != word) return false;
    advance(word.size());
    return true;
  }

  void expect_word(std::string_view word) {
    if (!accept_word(word)) {
      const std::string_view found = peek_word();
      fail("expected '" + std::string(word) + "'" +
           (found.empty() ? std::string() : " but found '" + std::string(found) + "'"));
    }
  }

  bool accept_symbol(std::string_view symbol) {
    skip_space();
    if (text_.substr(pos_, symbol.size()) != symbol) return false;
    advance(symbol.size());
    return true;
  }

  void expect_symbol(std::string_view symbol) {
    if (!accept_symbol(symbol)) fail("expected '" + std::string(symbol) + "'");
  }

  std::uint32_t parse_theta_index() {
    skip_space();
    std::size_t end = pos_;
    while (end < text_.size() && std::isdigit(static_cast<unsigned char>(text_[end]))) ++end;
    std::uint32_t index = 0;
    const auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + end, index);
    if (end == pos_ || ec != std::errc()) fail("expected a Theta index");
    if (index < 1) fail("Theta indices start at 1");
    advance(end - pos_);
    return index;
  }

  // Uniform >= Theta[k]
  std::uint32_t parse_condition() {
    expect_word("Uniform");
    expect_symbol(">=");
    expect_word("Theta");
    expect_symbol("[");
    const std::uint32_t index = parse_theta_index();
    expect_symbol("]");
    return index;
  }

  Outcome parse_outcome() {
    if (accept_word("null")) return "null";
    if (accept_word("true")) return "true";
    if (accept_word("false")) return "false";
    if (!accept_symbol("[")) fail("expected an outcome (null, true, false or a list)");
    Outcome out = "[";
    if (!accept_symbol("]")) {
      for (bool first = true;; first = false) {
        if (!first) out += ',';
        if (accept_word("true")) {
          out += "true";
        } else if (accept_word("false")) {
          out += "false";
        } else {
          fail("expected true or false inside a list outcome");
        }
        if (accept_symbol("]")) break;
        expect_symbol(",");
      }
    }
    out += ']';
    return out;
  }

  SpllProgram parse_body() {
    if (accept_word("if")) {
      const std::uint32_t theta = parse_condition();
      expect_word("then");
      SpllProgram then_branch = parse_body();
      expect_word("else");
      SpllProgram else_branch = parse_body();
      return SpllProgram::branch(theta, std::move(then_branch), std::move(else_branch));
    }
    if (peek_word() == "Uniform") {
      const std::uint32_t theta = parse_condition();
      return SpllProgram::branch(theta, SpllProgram::outcome("true"),
                                 SpllProgram::outcome("false"));
    }
    if (accept_symbol("(")) {
      SpllProgram inner = parse_body();
      expect_symbol(")");
      return inner;
    }
    return SpllProgram::outcome(parse_outcome());
  }
};

}  // namespace detail

inline SpllProgram parse_spll(std::string_view text) {
  return detail::SpllParser(text).parse_program();
}

/// Canonical form of an outcome token ("[ true , false ]" -> "[true,false]").
inline Outcome parse_outcome(std::string_view text) {
  return detail::SpllParser(text).parse_outcome_only();
}

/// Probability of outcome `o` as an expression over the Theta parameters:
/// the product along the path of (1 - x_k) for then-edges and x_k for
/// else-edges.
inline Expr outcome_density(const SpllProgram& p, const Outcome& o) {
  for (const SpllProgram::Leaf& leaf : p.leaves()) {
    if (leaf.outcome != o) continue;
    std::vector<Expr> factors;
    for (const SpllProgram::Edge& edge : leaf.path) {
      Expr theta = Expr::var(edge.theta);
      factors.push_back(edge.then_branch ? Expr::add(Expr::lit(1.0), Expr::neg(theta)) : theta);
    }
    if (factors.empty()) return Expr::lit(1.0);
    Expr density = factors.front();
    for (std::size_t i = 1; i < factors.size(); ++i) density = Expr::mul(density, factors[i]);
    return density;
  }
  throw ModelError("outcome " + o + " is not produced by the program");
}

/// Uniform draw in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Runs the program once: at each branch, draw u and go to the then-branch
/// iff u >= theta_k.
inline Outcome sample(const SpllProgram& p, const Env& theta, std::mt19937_64& rng) {
  SpllProgram node = p;
  while (!node.is_outcome()) {
    const double t = theta.lookup(VarId(node.theta()));
    if (!(t >= 0.0 && t <= 1.0)) {
      throw ModelError("Theta[" + std::to_string(node.theta()) + "] = " + std::to_string(t) +
                       " is outside [0, 1]");
    }
    node = uniform01(rng) >= t ? node.then_branch() : node.else_branch();
  }
  return node.outcome_value();
}

inline Outcome sample(const SpllProgram& p, const Env& theta, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample(p, theta, rng);
}

inline std::vector<Outcome> sample_many(const SpllProgram& p, const Env& theta,
                                        std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Outcome> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sample(p, theta, rng));
  return out;
}

/// Observed outcome counts.
struct SampleSet {
  std::map<Outcome, std::uint64_t> counts;

  void add(const Outcome& o, std::uint64_t n = 1) { counts[o] += n; }
  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (const auto& entry : counts) t += entry.second;
    return t;
  }
};

/// Reads a sample set: one outcome per line, or `outcome,count` lines.
/// Blank lines and lines starting with '#' are skipped.
inline SampleSet parse_sample_set(std::string_view text) {
  SampleSet set;
  std::size_t line_number = 0;
  while (!text.empty()) {
    ++line_number;
    const std::size_t newline = text.find('\n');
    std::string_view line = text.substr(0, newline);
    text.remove_prefix(newline == std::string_view::npos ? text.size() : newline + 1);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
    if (line.empty() || line.front() == '#') continue;

    std::uint64_t count = 1;
    std::string_view token = line;
    const std::size_t comma = line.rfind(',');
    if (comma != std::string_view::npos) {
      std::string_view tail = line.substr(comma + 1);
      while (!tail.empty() && std::isspace(static_cast<unsigned char>(tail.front()))) tail.remove_prefix(1);
      std::uint64_t parsed = 0;
      const auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), parsed);
      if (!tail.empty() && ec == std::errc() && ptr == tail.data() + tail.size()) {
        count = parsed;
        token = line.substr(0, comma);
      }
    }
    try {
      set.add(parse_outcome(token), count);
    } catch (const SyntaxError& e) {
      throw SyntaxError(e.what(), line_number, e.column());
    }
  }
  if (set.total() == 0) throw ModelError("sample set is empty");
  return set;
}

/// Density terms of the samples, in the program's leaf order.
inline std::vector<DensityTerm> spll_terms(const SpllProgram& p, const SampleSet& samples) {
  std::set<Outcome> known;
  std::vector<DensityTerm> terms;
  for (const SpllProgram::Leaf& leaf : p.leaves()) {
    known.insert(leaf.outcome);
    const auto it = samples.counts.find(leaf.outcome);
    if (it != samples.counts.end() && it->second > 0) {
      terms.push_back({outcome_density(p, leaf.outcome), it->second});
    }
  }
  for (const auto& [o, n] : samples.counts) {
    if (!known.contains(o)) throw ModelError("sampled outcome " + o + " is not a program leaf");
  }
  return terms;
}

/// Maximum-likelihood fit of the Theta parameters by gradient descent on the
/// negative log-likelihood of the samples.
inline FitResult fit_spll(const SpllProgram& p, const SampleSet& samples, const Env& initial,
                          const FitConfig& config) {
  if (initial.size() < p.theta_count()) {
    throw ModelError("program uses " + std::to_string(p.theta_count()) +
                     " parameters but the initial guess has " + std::to_string(initial.size()));
  }
  const std::vector<DensityTerm> terms = spll_terms(p, samples);
  return gradient_descent(nll(terms), initial, config);
}

}  // namespace ladder
