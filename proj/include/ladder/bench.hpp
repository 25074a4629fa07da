#pragma once

// Random expression trees and a timing harness for the gradient modes.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ladder/expr.hpp"
#include "ladder/gradient.hpp"
#include "ladder/text.hpp"

namespace ladder {

struct BenchSpec {
  std::size_t node_count = 1001;
  std::size_t variable_count = 10;
  std::size_t repetitions = 10;
  std::vector<GradientMode> modes{kAllGradientModes.begin(), kAllGradientModes.end()};
  std::uint64_t seed = 1;

  void validate() const {
    if (node_count < 1) throw std::invalid_argument("node count must be at least 1");
    if (variable_count < 1) throw std::invalid_argument("variable count must be at least 1");
    if (variable_count > node_count) {
      throw std::invalid_argument("cannot place " + std::to_string(variable_count) +
                                  " variables in " + std::to_string(node_count) + " nodes");
    }
    if (repetitions < 1) throw std::invalid_argument("repetitions must be at least 1");
    if (modes.empty()) throw std::invalid_argument("no gradient modes selected");
  }
};

struct GeneratedExpr {
  Expr expr;
  Env env;
};

namespace detail {

class TreeGenerator {
 public:
  TreeGenerator(std::mt19937_64& rng, std::vector<std::uint32_t> leaf_vars, const Env& env)
      : rng_(rng), leaf_vars_(std::move(leaf_vars)), env_(env) {}

  struct Built {
    Expr expr;
    double value;
  };

  // Binary tree with exactly n nodes (n odd): (n - 1) / 2 Add/Mul nodes and
  // (n + 1) / 2 leaves, filled left to right from leaf_vars_ (0 = literal).
  // Each internal node is whichever of Add and Mul keeps its value closer to
  // 1 on a log scale, so deep trees neither overflow nor underflow.
  Built build(std::size_t n) {
    if (n == 1) return leaf();
    const std::size_t internal = (n - 1) / 2;
    const std::size_t left_internal =
        std::uniform_int_distribution<std::size_t>(0, internal - 1)(rng_);
    Built lhs = build(2 * left_internal + 1);
    Built rhs = build(2 * (internal - 1 - left_internal) + 1);
    const double sum = lhs.value + rhs.value;
    const double product = lhs.value * rhs.value;
    if (std::abs(std::log(product)) < std::abs(std::log(sum))) {
      return {Expr::mul(std::move(lhs.expr), std::move(rhs.expr)), product};
    }
    return {Expr::add(std::move(lhs.expr), std::move(rhs.expr)), sum};
  }

 private:
  Built leaf() {
    const std::uint32_t v = leaf_vars_[next_++];
    if (v != 0) return {Expr::var(v), env_[VarId(v)]};
    const double value = std::uniform_real_distribution<double>(0.5, 1.5)(rng_);
    return {Expr::lit(value), value};
  }

  std::mt19937_64& rng_;
  std::vector<std::uint32_t> leaf_vars_;
  const Env& env_;
  std::size_t next_ = 0;
};

}  // namespace detail

/// Seeded random Add/Mul tree with exactly `node_count` nodes over x1..xV,
/// with variable values drawn from [0.5, 1.5].
/// An even node count gets a Neg at the root. Every variable occurs at least
/// once when the tree has at least V leaves.
inline GeneratedExpr gen_expr(const BenchSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const bool negate = spec.node_count % 2 == 0;
  const std::size_t tree_nodes = negate ? spec.node_count - 1 : spec.node_count;
  const std::size_t leaves = (tree_nodes + 1) / 2;
  const auto v = static_cast<std::uint32_t>(spec.variable_count);

  std::vector<std::uint32_t> leaf_vars(leaves, 0);
  std::uniform_int_distribution<std::uint32_t> any_var(1, v);
  std::uniform_int_distribution<int> coin(0, 3);
  for (std::size_t i = 0; i < leaves; ++i) {
    if (i < v) {
      leaf_vars[i] = static_cast<std::uint32_t>(i + 1);
    } else {
      leaf_vars[i] = coin(rng) == 0 ? 0 : any_var(rng);  // one leaf in four is a literal
    }
  }
  std::shuffle(leaf_vars.begin(), leaf_vars.end(), rng);

  std::uniform_real_distribution<double> value(0.5, 1.5);
  std::vector<double> values(spec.variable_count);
  for (double& x : values) x = value(rng);
  Env env(std::move(values));

  detail::TreeGenerator generator(rng, std::move(leaf_vars), env);
  Expr e = generator.build(tree_nodes).expr;
  if (negate) e = Expr::neg(std::move(e));
  return {std::move(e), std::move(env)};
}

/// sum_i g_i * i over the dense gradient.
inline double gradient_checksum(const std::vector<double>& g) {
  double sum = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) sum += g[i] * static_cast<double>(i + 1);
  return sum;
}

struct BenchRow {
  GradientMode mode;
  double total_seconds = 0.0;
  double mean_seconds = 0.0;
  double median_seconds = 0.0;
  double checksum = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  bool valid = true;
  std::string message;

  const BenchRow* find(GradientMode mode) const {
    for (const BenchRow& row : rows) {
      if (row.mode == mode) return &row;
    }
    return nullptr;
  }
};

namespace detail {

inline bool close(double a, double b) {
  return std::abs(a - b) <= std::max(1e-9 * std::max(std::abs(a), std::abs(b)), 1e-12);
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Times `repetitions` gradient calls per mode on one (expr, env). Rounds are
/// interleaved across modes so slow drift affects every mode alike.
inline BenchReport time_modes(const Expr& e, const Env& env, std::span<const GradientMode> modes,
                              std::size_t repetitions) {
  using Clock = std::chrono::steady_clock;
  std::vector<std::vector<double>> samples(modes.size());
  std::vector<std::vector<double>> gradients(modes.size());
  for (std::size_t r = 0; r < repetitions; ++r) {
    for (std::size_t m = 0; m < modes.size(); ++m) {
      const auto start = Clock::now();
      GradientResult g = gradient(modes[m], e, env);
      const auto stop = Clock::now();
      samples[m].push_back(std::chrono::duration<double>(stop - start).count());
      if (r == 0) gradients[m] = std::move(g.gradient);
    }
  }

  BenchReport report;
  for (std::size_t m = 0; m < modes.size(); ++m) {
    BenchRow row;
    row.mode = modes[m];
    for (double s : samples[m]) row.total_seconds += s;
    row.mean_seconds = row.total_seconds / static_cast<double>(repetitions);
    row.median_seconds = detail::median(samples[m]);
    row.checksum = gradient_checksum(gradients[m]);
    report.rows.push_back(row);
  }
  for (std::size_t m = 1; m < modes.size(); ++m) {
    for (std::size_t i = 0; i < gradients[m].size(); ++i) {
      if (!detail::close(gradients[m][i], gradients[0][i])) {
        report.valid = false;
        report.message = std::string(mode_name(modes[m])) + " disagrees with " +
                         std::string(mode_name(modes[0])) + " at x" + std::to_string(i + 1);
        return report;
      }
    }
  }
  return report;
}

inline BenchReport run_bench(const BenchSpec& spec) {
  spec.validate();
  const GeneratedExpr g = gen_expr(spec);
  return time_modes(g.expr, g.env, spec.modes, spec.repetitions);
}

inline void print_report(std::ostream& out, const BenchReport& report) {
  auto seconds = [](double v) {
    char buffer[32];
    const auto end = std::to_chars(buffer, buffer + sizeof buffer, v, std::chars_format::scientific, 4).ptr;
    std::string s(buffer, end);
    s.resize(std::max<std::size_t>(s.size() + 2, 14), ' ');
    return s;
  };
  out << "mode  total_s       mean_s        median_s      checksum\n";
  for (const BenchRow& row : report.rows) {
    std::string name(mode_name(row.mode));
    name.resize(6, ' ');
    out << name << seconds(row.total_seconds) << seconds(row.mean_seconds)
        << seconds(row.median_seconds) << format_number(row.checksum) << '\n';
  }
  out << (report.valid ? "valid" : "INVALID: " + report.message) << '\n';
}

inline void print_csv(std::ostream& out, const BenchReport& report) {
  out << "mode,mean_s,median_s,total_s,checksum\n";
  for (const BenchRow& row : report.rows) {
    out << mode_name(row.mode) << ',' << format_number(row.mean_seconds) << ','
        << format_number(row.median_seconds) << ',' << format_number(row.total_seconds) << ','
        << format_number(row.checksum) << '\n';
  }
}

}  // namespace ladder
