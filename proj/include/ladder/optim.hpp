#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ladder/error.hpp"
#include "ladder/expr.hpp"
#include "ladder/gradient.hpp"

namespace ladder {

struct FitConfig {
  double learning_rate = 0.02;
  std::size_t max_iterations = 1000;
  /// Stop once the max-norm of an applied update is at most this.
  double convergence_tolerance = 1e-14;
  GradientMode gradient_mode = GradientMode::reverse_dense;

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (max_iterations < 1) throw std::invalid_argument("max_iterations must be at least 1");
    if (!(convergence_tolerance >= 0.0)) {
      throw std::invalid_argument("convergence tolerance must be non-negative");
    }
  }
};

struct FitResult {
  Env parameters;
  std::size_t iterations_used = 0;
  /// Objective before every step, then once more at the final parameters.
  std::vector<double> objective_trace;
  bool converged = false;
};

/// A fit aborted at `iteration` (0-based) by a domain error or a non-finite
/// gradient.
class OptimizationError : public Error {
 public:
  OptimizationError(std::size_t iteration, const std::string& what)
      : Error("iteration " + std::to_string(iteration) + ": " + what), iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

struct DensityTerm {
  Expr density;
  std::uint64_t count;
};

/// Negative log-likelihood sum count * -log(density) over the terms.
inline Expr nll(std::span<const DensityTerm> terms) {
  std::vector<Expr> summands;
  summands.reserve(terms.size());
  for (const DensityTerm& term : terms) {
    if (term.count == 0) throw std::invalid_argument("sample counts must be positive");
    summands.push_back(Expr::mul(Expr::lit(static_cast<double>(term.count)),
                                 Expr::neg(Expr::log(term.density))));
  }
  return balanced_sum(summands);
}

/// Plain gradient descent theta := theta - lr * grad(objective).
inline FitResult gradient_descent(const Expr& objective, const Env& initial,
                                  const FitConfig& config) {
  config.validate();
  std::vector<double> theta(initial.values().begin(), initial.values().end());
  FitResult result;
  std::size_t iteration = 0;
  try {
    for (; iteration < config.max_iterations; ++iteration) {
      const GradientResult g = gradient(config.gradient_mode, objective, Env(theta));
      result.objective_trace.push_back(g.primal);
      double step_norm = 0.0;
      for (std::size_t i = 0; i < theta.size(); ++i) {
        if (!std::isfinite(g.gradient[i])) {
          throw OptimizationError(iteration, "non-finite gradient for x" + std::to_string(i + 1));
        }
        const double step = config.learning_rate * g.gradient[i];
        theta[i] = theta[i] - step;
        step_norm = std::max(step_norm, std::abs(step));
      }
      result.iterations_used = iteration + 1;
      if (step_norm <= config.convergence_tolerance) {
        result.converged = true;
        break;
      }
    }
    iteration = result.iterations_used;
    result.objective_trace.push_back(eval(objective, Env(theta)));
  } catch (const OptimizationError&) {
    throw;
  } catch (const Error& e) {
    throw OptimizationError(iteration, e.what());
  }
  result.parameters = Env(std::move(theta));
  return result;
}

}  // namespace ladder
