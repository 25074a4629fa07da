#pragma once

// Gaussian mixtures from probabilistic logic programs, and a score-function
// gradient estimator for variational inference.
//
// The widget program: machine a (probability 0.3) or b produces a widget whose
// feature is X = Y + Z with Z ~ N(2, 1) for a, N(3, 1) for b, and
// Y ~ N(mu, sigma^2). Its density is
//   p(x) = 0.3 N(x; 2 + mu, 1 + sigma^2) + 0.7 N(x; 3 + mu, 1 + sigma^2)
// and is fitted over (mu, W) with sigma^2 = e^W, so x1 = mu and x2 = W.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ladder/error.hpp"
#include "ladder/expr.hpp"
#include "ladder/optim.hpp"
#include "ladder/reverse.hpp"

namespace ladder {

struct GaussComponent {
  double weight;
  Expr mean;
  Expr variance;
};

struct MixtureModel {
  std::vector<GaussComponent> components;

  void validate() const {
    if (components.empty()) throw ModelError("mixture has no components");
    double total = 0.0;
    for (const GaussComponent& c : components) {
      if (!(c.weight > 0.0 && c.weight <= 1.0)) {
        throw ModelError("mixture weight " + std::to_string(c.weight) + " is outside (0, 1]");
      }
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw ModelError("mixture weights sum to " + std::to_string(total) + ", not 1");
    }
  }
};

inline constexpr std::uint32_t kWidgetMu = 1;
inline constexpr std::uint32_t kWidgetW = 2;

/// Normal density at the constant x: 1/(sigma sqrt(2 pi)) exp(-((x - mean)/sigma)^2 / 2)
/// with sigma = variance^0.5.
inline Expr gaussian_pdf_expr(double x, const Expr& mean, const Expr& variance) {
  const Expr sigma = Expr::pow(variance, Expr::lit(0.5));
  const Expr scale = Expr::pow(Expr::mul(sigma, Expr::lit(std::sqrt(2.0 * std::numbers::pi))),
                               Expr::lit(-1.0));
  const Expr z = Expr::mul(Expr::add(Expr::lit(x), Expr::neg(mean)),
                           Expr::pow(sigma, Expr::lit(-1.0)));
  return Expr::mul(scale, Expr::exp(Expr::mul(Expr::lit(-0.5), Expr::pow(z, Expr::lit(2.0)))));
}

/// Sum of weight * N(x; mean, variance) over the components.
inline Expr mixture_density_expr(double x, const MixtureModel& model) {
  Expr density = Expr::lit(0.0);
  bool first = true;
  for (const GaussComponent& c : model.components) {
    Expr term = Expr::mul(Expr::lit(c.weight), gaussian_pdf_expr(x, c.mean, c.variance));
    density = first ? term : Expr::add(density, term);
    first = false;
  }
  return density;
}

/// Negative log-likelihood of the samples under the mixture.
inline Expr mixture_nll(std::span<const double> samples, const MixtureModel& model) {
  model.validate();
  if (samples.empty()) throw ModelError("no samples");
  std::vector<Expr> terms;
  terms.reserve(samples.size());
  for (double x : samples) terms.push_back(Expr::neg(Expr::log(mixture_density_expr(x, model))));
  return balanced_sum(terms);
}

/// The widget mixture over x1 = mu and x2 = W.
inline MixtureModel widget_model() {
  const Expr mu = Expr::var(kWidgetMu);
  const Expr variance = Expr::add(Expr::lit(1.0), Expr::exp(Expr::var(kWidgetW)));
  return MixtureModel{{
      {0.3, Expr::add(Expr::lit(2.0), mu), variance},
      {0.7, Expr::add(Expr::lit(3.0), mu), variance},
  }};
}

inline Expr widget_nll(std::span<const double> samples, const MixtureModel& model = widget_model()) {
  return mixture_nll(samples, model);
}

struct WidgetFit {
  double mu;
  double sigma2;
  FitResult fit;
};

/// Fits (mu, W) by gradient descent and reports sigma^2 = e^W. The gradient is
/// always computed with dense reverse mode.
inline WidgetFit fit_widget(std::span<const double> samples, double mu0, double w0,
                            FitConfig config) {
  config.gradient_mode = GradientMode::reverse_dense;
  FitResult fit = gradient_descent(widget_nll(samples), Env({mu0, w0}), config);
  const double mu = fit.parameters[VarId(kWidgetMu)];
  const double sigma2 = std::exp(fit.parameters[VarId(kWidgetW)]);
  return {mu, sigma2, std::move(fit)};
}

struct WidgetDraw {
  double value;
  bool machine_a;
};

/// One run of the widget program with Y ~ N(mu, sigma2).
inline WidgetDraw widget_draw(double mu, double sigma2, std::mt19937_64& rng) {
  const bool machine_a = static_cast<double>(rng() >> 11) * 0x1.0p-53 < 0.3;
  std::normal_distribution<double> z(machine_a ? 2.0 : 3.0, 1.0);
  std::normal_distribution<double> y(mu, std::sqrt(sigma2));
  const double zv = z(rng);
  return {y(rng) + zv, machine_a};
}

inline std::vector<double> widget_sample(double mu, double sigma2, std::uint64_t seed,
                                         std::size_t count) {
  if (!(sigma2 > 0.0)) throw DomainError("widget variance must be positive");
  std::mt19937_64 rng(seed);
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(widget_draw(mu, sigma2, rng).value);
  return out;
}

// Variational inference ----------------------------------------------------

struct VIConfig {
  std::size_t sample_count = 1000;
  double baseline = 0.0;  // K
  std::uint64_t seed = 0;

  void validate() const {
    if (sample_count < 1) throw std::invalid_argument("sample count must be at least 1");
  }
};

/// A Monte Carlo estimate failed at draw `sample_index` (0-based).
class EstimationError : public Error {
 public:
  EstimationError(std::size_t sample_index, const std::string& what)
      : Error("sample " + std::to_string(sample_index) + ": " + what), index_(sample_index) {}

  std::size_t sample_index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

using LogDensity = std::function<double(double)>;
using LogDensityGradient = std::function<std::vector<double>(double)>;
using Sampler = std::function<double(std::mt19937_64&)>;

struct ScalarEstimate {
  double mean;
  double standard_error;
};

struct VectorEstimate {
  std::vector<double> mean;
  std::vector<double> standard_error;
};

namespace detail {

// Running mean and variance (Welford).
struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    ++n;
    const double delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
  }

  double standard_error() const {
    if (n < 2) return 0.0;
    return std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  }
};

inline double checked(double v, std::size_t j, const char* what) {
  if (!std::isfinite(v)) throw EstimationError(j, std::string("non-finite ") + what);
  return v;
}

}  // namespace detail

/// Score-function estimate of the gradient of KL(p_theta || posterior), i.e.
/// of -L(theta):
///   (1/N) sum_j grad log p_theta(x_j) * (log p_theta(x_j) - log_joint(x_j) + K)
/// with x_j drawn by `sampler`.
inline VectorEstimate vi_gradient_estimate(const LogDensity& log_q,
                                           const LogDensityGradient& grad_log_q,
                                           const LogDensity& log_joint, const Sampler& sampler,
                                           const VIConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::vector<detail::Moments> moments;
  for (std::size_t j = 0; j < config.sample_count; ++j) {
    const double x = detail::checked(sampler(rng), j, "sample");
    const double bracket = detail::checked(log_q(x), j, "log density") -
                           detail::checked(log_joint(x), j, "log joint") + config.baseline;
    const std::vector<double> score = grad_log_q(x);
    if (moments.empty()) moments.resize(score.size());
    if (score.size() != moments.size()) {
      throw EstimationError(j, "score length changed between draws");
    }
    for (std::size_t i = 0; i < score.size(); ++i) {
      moments[i].add(detail::checked(detail::checked(score[i], j, "score") * bracket, j, "term"));
    }
  }
  VectorEstimate out;
  for (const detail::Moments& m : moments) {
    out.mean.push_back(m.mean);
    out.standard_error.push_back(m.standard_error());
  }
  return out;
}

/// Monte Carlo estimate of L(theta) = E[log_joint(x) - log p_theta(x)].
inline ScalarEstimate kl_objective_value(const LogDensity& log_q, const LogDensity& log_joint,
                                         const Sampler& sampler, const VIConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  detail::Moments m;
  for (std::size_t j = 0; j < config.sample_count; ++j) {
    const double x = detail::checked(sampler(rng), j, "sample");
    m.add(detail::checked(log_joint(x), j, "log joint") -
          detail::checked(log_q(x), j, "log density"));
  }
  return {m.mean, m.standard_error()};
}

/// log N(x; theta_1, 1) with its gradient in theta from dense reverse mode.
struct GaussianFamily {
  double theta;

  double log_density(double x) const {
    return eval(log_expr(x), Env({theta}));
  }

  std::vector<double> score(double x) const {
    return rev_dense(log_expr(x), Env({theta})).gradient.values();
  }

  double draw(std::mt19937_64& rng) const {
    return std::normal_distribution<double>(theta, 1.0)(rng);
  }

  static Expr log_expr(double x) {
    return Expr::log(gaussian_pdf_expr(x, Expr::var(1), Expr::lit(1.0)));
  }
};

inline double standard_normal_log_pdf(double x) {
  return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi);
}

struct VIDemoResult {
  VectorEstimate gradient;
  ScalarEstimate objective;
};

/// q = N(theta, 1) against the target N(0, 1). The exact values are
/// gradient = theta and objective = -theta^2 / 2.
inline VIDemoResult vi_demo(double theta, const VIConfig& config) {
  const GaussianFamily q{theta};
  const LogDensity log_q = [&q](double x) { return q.log_density(x); };
  const LogDensityGradient score = [&q](double x) { return q.score(x); };
  const Sampler sampler = [&q](std::mt19937_64& rng) { return q.draw(rng); };
  return {vi_gradient_estimate(log_q, score, standard_normal_log_pdf, sampler, config),
          kl_objective_value(log_q, standard_normal_log_pdf, sampler, config)};
}

}  // namespace ladder
