#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "ladder/ladder.hpp"

namespace ladder::testing {

/// |a - b| <= max(rel * max(|a|, |b|), abs)
inline bool close(double a, double b, double rel = 1e-9, double abs = 1e-12) {
  if (a == b) return true;
  return std::abs(a - b) <= std::max(rel * std::max(std::abs(a), std::abs(b)), abs);
}

struct RandomExprOptions {
  int max_depth = 12;
  std::uint32_t variables = 8;
  double leaf_probability = 0.3;
  bool transcendental = true;  // sin, cos, exp, log, pow
};

/// Random expressions over every constructor. Log and fractional powers are
/// applied to c + a*a with c > 0 so most draws are inside the real domain.
class RandomExpr {
 public:
  RandomExpr(std::uint64_t seed, RandomExprOptions options = {}) : rng_(seed), options_(options) {}

  Expr next() { return gen(options_.max_depth); }

  Env env() {
    std::vector<double> values(options_.variables);
    std::uniform_real_distribution<double> value(-2.0, 2.0);
    for (double& v : values) {
      do {
        v = value(rng_);
      } while (std::abs(v) < 0.1);
    }
    return Env(std::move(values));
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
  RandomExprOptions options_;

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

  Expr leaf() {
    if (pick(3) == 0) return Expr::lit(std::round(uniform(-3.0, 3.0) * 4.0) / 4.0);
    return Expr::var(static_cast<std::uint32_t>(pick(static_cast<int>(options_.variables)) + 1));
  }

  Expr positive(int depth) {
    Expr a = gen(depth);
    return Expr::add(Expr::lit(uniform(0.5, 2.0)), Expr::mul(a, a));
  }

  Expr gen(int depth) {
    if (depth <= 0 || uniform(0.0, 1.0) < options_.leaf_probability) return leaf();
    const int kinds = options_.transcendental ? 9 : 3;
    switch (pick(kinds)) {
      case 0: return Expr::add(gen(depth - 1), gen(depth - 1));
      case 1: return Expr::mul(gen(depth - 1), gen(depth - 1));
      case 2: return Expr::neg(gen(depth - 1));
      case 3: return Expr::sin(gen(depth - 1));
      case 4: return Expr::cos(gen(depth - 1));
      case 5: return Expr::exp(Expr::sin(gen(depth - 2)));
      case 6: return Expr::log(positive(depth - 2));
      case 7: {
        static constexpr double kExponents[] = {-2.0, -1.0, 0.5, 2.0, 3.0, 1.5};
        const double k = kExponents[pick(6)];
        const bool integral = k == std::round(k);
        return Expr::pow(integral && pick(2) == 0 ? gen(depth - 1) : positive(depth - 2),
                         Expr::lit(k));
      }
      default: return Expr::pow(positive(depth - 2), Expr::sin(gen(depth - 2)));
    }
  }
};

/// Central difference (f(x + h) - f(x - h)) / 2h with h = step * max(1, |x|).
inline double central_difference(const Expr& e, const Env& env, VarId x, double step = 1e-6) {
  std::vector<double> plus(env.values().begin(), env.values().end());
  std::vector<double> minus = plus;
  const double h = step * std::max(1.0, std::abs(plus[x.offset()]));
  plus[x.offset()] += h;
  minus[x.offset()] -= h;
  const double actual_h = 0.5 * (plus[x.offset()] - minus[x.offset()]);
  return (eval(e, Env(plus)) - eval(e, Env(minus))) / (2.0 * actual_h);
}

/// Central differences with h and 10h; empty when they disagree, i.e. when the
/// difference quotient itself is not trustworthy at this point.
inline std::optional<std::vector<double>> trusted_fd_gradient(const Expr& e, const Env& env,
                                                               double step = 1e-6) {
  std::vector<double> out;
  for (std::uint32_t k = 1; k <= env.size(); ++k) {
    double fine;
    double coarse;
    try {
      fine = central_difference(e, env, VarId(k), step);
      coarse = central_difference(e, env, VarId(k), 10 * step);
    } catch (const DomainError&) {
      return std::nullopt;
    }
    if (!std::isfinite(fine) || !close(fine, coarse, 1e-7, 1e-8)) return std::nullopt;
    out.push_back(fine);
  }
  return out;
}

}  // namespace ladder::testing
