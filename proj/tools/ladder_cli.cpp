#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ladder/ladder.hpp"

namespace {

using namespace ladder;

constexpr int kUsageError = 1;
constexpr int kInputError = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

GradientMode mode_from(const std::string& name) {
  if (auto mode = parse_mode(name)) return *mode;
  throw CLI::ValidationError("--mode", "unknown gradient mode '" + name + "' (fwd, rev1, rev2, rev)");
}

std::vector<GradientMode> modes_from(const std::string& list) {
  std::vector<GradientMode> modes;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) modes.push_back(mode_from(item));
  return modes;
}

void print_value(const std::string& key, double value) {
  std::cout << key << '=' << format_number(value) << '\n';
}

void print_sparse(const SparseGradient& g) {
  for (const auto& [id, value] : g) print_value("x" + std::to_string(id.index()), value);
}

void run_grad(const std::string& text, const std::string& env_text, const std::string& mode_text) {
  const Expr e = parse(text);
  const Env env = parse_env(env_text);
  switch (mode_from(mode_text)) {
    case GradientMode::forward: {
      const auto r = fwd_gradient(e, env);
      print_value("primal", r.primal);
      print_sparse(r.gradient);
      break;
    }
    case GradientMode::reverse_scalar: {
      const auto r = rev_scalar(e, env);
      print_value("primal", r.primal);
      print_sparse(r.gradient);
      break;
    }
    case GradientMode::reverse_threaded: {
      const auto r = rev_threaded(e, env);
      print_value("primal", r.primal);
      print_sparse(r.gradient);
      break;
    }
    case GradientMode::reverse_dense: {
      const auto r = rev_dense(e, env);
      print_value("primal", r.primal);
      for (std::size_t i = 0; i < r.gradient.size(); ++i) {
        print_value("x" + std::to_string(i + 1), r.gradient.values()[i]);
      }
      break;
    }
  }
}

void print_fit(const FitResult& fit) {
  for (std::size_t i = 0; i < fit.parameters.size(); ++i) {
    print_value("theta" + std::to_string(i + 1), fit.parameters.values()[i]);
  }
  std::cout << "steps=" << fit.iterations_used << '\n';
  std::cout << "converged=" << (fit.converged ? "true" : "false") << '\n';
  print_value("nll", fit.objective_trace.back());
}

std::vector<double> read_reals(const std::string& path) {
  std::vector<double> out;
  std::istringstream lines(read_file(path));
  std::string line;
  std::size_t number = 0;
  while (std::getline(lines, line)) {
    ++number;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const std::vector<double> values = [&] {
      try {
        return parse_real_list(line);
      } catch (const SyntaxError& e) {
        throw SyntaxError(e.what(), number, e.column());
      }
    }();
    out.insert(out.end(), values.begin(), values.end());
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Automatic differentiation over expression trees"};
  app.require_subcommand(1);

  std::string expr_text;
  std::string env_text;

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate an expression");
  eval_cmd->add_option("-e,--expr", expr_text, "Expression, e.g. \"x1*sin(x2)\"")->required();
  eval_cmd->add_option("-x,--env", env_text, "Comma separated values of x1..xn")->required();

  std::uint32_t deriv_var = 1;
  auto* deriv_cmd = app.add_subcommand("deriv", "Print the symbolic partial derivative");
  deriv_cmd->add_option("-e,--expr", expr_text, "Expression")->required();
  deriv_cmd->add_option("-v,--var", deriv_var, "Variable index k of xk")
      ->required()
      ->check(CLI::PositiveNumber);

  std::string mode_text = "rev";
  auto* grad_cmd = app.add_subcommand("grad", "Print the primal and the gradient");
  grad_cmd->add_option("-e,--expr", expr_text, "Expression")->required();
  grad_cmd->add_option("-x,--env", env_text, "Comma separated values of x1..xn")->required();
  grad_cmd->add_option("--mode", mode_text, "fwd, rev1, rev2 or rev")->capture_default_str();

  std::string program_path;
  std::string samples_path;
  std::string init_text;
  double learning_rate = 0.02;
  std::size_t iterations = 0;
  double tolerance = FitConfig{}.convergence_tolerance;
  std::size_t max_iterations = FitConfig{}.max_iterations;
  auto* fit_spll_cmd = app.add_subcommand("fit-spll", "Fit SPLL parameters to samples");
  fit_spll_cmd->add_option("-p,--program", program_path, "Program file")->required();
  fit_spll_cmd->add_option("-d,--data", samples_path, "Sample file")->required();
  fit_spll_cmd->add_option("--init", init_text, "Initial theta list")->required();
  fit_spll_cmd->add_option("--lr", learning_rate, "Learning rate")->capture_default_str();
  auto* iters_opt =
      fit_spll_cmd->add_option("--iters", iterations, "Run exactly this many steps")
          ->check(CLI::PositiveNumber);
  auto* tol_opt = fit_spll_cmd->add_option("--tol", tolerance, "Stop when the update max-norm is at most this")
                      ->capture_default_str();
  fit_spll_cmd->add_option("--max-iters", max_iterations, "Step budget with --tol")
      ->capture_default_str()
      ->excludes(iters_opt);
  iters_opt->excludes(tol_opt);
  fit_spll_cmd->add_option("--mode", mode_text, "Gradient mode")->capture_default_str();

  std::string theta_text;
  std::size_t count = 1;
  std::uint64_t seed = 0;
  auto* sample_spll_cmd = app.add_subcommand("sample-spll", "Sample outcomes of an SPLL program");
  sample_spll_cmd->add_option("-p,--program", program_path, "Program file")->required();
  sample_spll_cmd->add_option("--theta", theta_text, "Theta list")->required();
  sample_spll_cmd->add_option("-n,--count", count, "Number of samples")->capture_default_str();
  sample_spll_cmd->add_option("--seed", seed, "Random seed")->capture_default_str();

  double mu0 = 0.0;
  double w0 = 0.0;
  double widget_lr = 5e-5;
  double widget_tol = 2e-4;
  std::size_t widget_max = 500;
  auto* fit_widget_cmd = app.add_subcommand("fit-widget", "Fit the widget mixture to samples");
  fit_widget_cmd->add_option("-d,--data", samples_path, "File with one real per line")->required();
  fit_widget_cmd->add_option("--init-mu", mu0, "Initial mu")->capture_default_str();
  fit_widget_cmd->add_option("--init-w", w0, "Initial W (sigma^2 = e^W)")->capture_default_str();
  fit_widget_cmd->add_option("--lr", widget_lr, "Learning rate")->capture_default_str();
  fit_widget_cmd->add_option("--tol", widget_tol, "Update max-norm tolerance")->capture_default_str();
  fit_widget_cmd->add_option("--max-iters", widget_max, "Step budget")->capture_default_str();

  double mu = 0.5;
  double sigma2 = 0.1;
  auto* sample_widget_cmd = app.add_subcommand("sample-widget", "Sample the widget program");
  sample_widget_cmd->add_option("--mu", mu, "mu")->capture_default_str();
  sample_widget_cmd->add_option("--sigma2", sigma2, "sigma^2")->capture_default_str();
  sample_widget_cmd->add_option("-n,--count", count, "Number of samples")->capture_default_str();
  sample_widget_cmd->add_option("--seed", seed, "Random seed")->capture_default_str();

  VIConfig vi;
  double vi_theta = 1.0;
  auto* vi_cmd = app.add_subcommand("vi-demo", "Score-function VI gradient for q = N(theta, 1) against N(0, 1)");
  vi_cmd->add_option("--seed", vi.seed, "Random seed")->capture_default_str();
  vi_cmd->add_option("-n,--samples", vi.sample_count, "Monte Carlo draws")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  vi_cmd->add_option("-K,--baseline", vi.baseline, "Baseline constant K")->capture_default_str();
  vi_cmd->add_option("--theta", vi_theta, "Mean of q")->capture_default_str();

  BenchSpec bench;
  std::string modes_text = "fwd,rev1,rev2,rev";
  bool csv = false;
  auto* bench_cmd = app.add_subcommand("bench", "Time the gradient modes");
  bench_cmd->add_option("-N,--nodes", bench.node_count, "Node count")->capture_default_str();
  bench_cmd->add_option("-V,--vars", bench.variable_count, "Variable count")->capture_default_str();
  bench_cmd->add_option("-r,--reps", bench.repetitions, "Repetitions")->capture_default_str();
  bench_cmd->add_option("--modes", modes_text, "Comma separated modes")->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed, "Random seed")->capture_default_str();
  bench_cmd->add_option("-p,--program", program_path, "Time an SPLL NLL instead (needs -d)");
  bench_cmd->add_option("-d,--data", samples_path, "Sample file for --program");
  bench_cmd->add_option("--theta", theta_text, "Evaluation point for --program");
  bench_cmd->add_flag("--csv", csv, "Print CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (eval_cmd->parsed()) {
      std::cout << format_number(eval(parse(expr_text), parse_env(env_text))) << '\n';
    } else if (deriv_cmd->parsed()) {
      std::cout << format(symb_derive(parse(expr_text), VarId(deriv_var))) << '\n';
    } else if (grad_cmd->parsed()) {
      run_grad(expr_text, env_text, mode_text);
    } else if (fit_spll_cmd->parsed()) {
      const SpllProgram program = parse_spll(read_file(program_path));
      const SampleSet samples = parse_sample_set(read_file(samples_path));
      FitConfig config;
      config.learning_rate = learning_rate;
      config.gradient_mode = mode_from(mode_text);
      if (iters_opt->count() > 0) {
        config.max_iterations = iterations;
        config.convergence_tolerance = 0.0;
      } else {
        config.max_iterations = max_iterations;
        config.convergence_tolerance = tolerance;
      }
      print_fit(fit_spll(program, samples, parse_env(init_text), config));
    } else if (sample_spll_cmd->parsed()) {
      const SpllProgram program = parse_spll(read_file(program_path));
      for (const Outcome& o : sample_many(program, parse_env(theta_text), count, seed)) {
        std::cout << o << '\n';
      }
    } else if (fit_widget_cmd->parsed()) {
      const std::vector<double> samples = read_reals(samples_path);
      FitConfig config;
      config.learning_rate = widget_lr;
      config.convergence_tolerance = widget_tol;
      config.max_iterations = widget_max;
      const WidgetFit fit = fit_widget(samples, mu0, w0, config);
      print_value("mu", fit.mu);
      print_value("sigma2", fit.sigma2);
      std::cout << "iterations=" << fit.fit.iterations_used << '\n';
      std::cout << "converged=" << (fit.fit.converged ? "true" : "false") << '\n';
      print_value("nll_initial", fit.fit.objective_trace.front());
      print_value("nll_final", fit.fit.objective_trace.back());
    } else if (sample_widget_cmd->parsed()) {
      for (double x : widget_sample(mu, sigma2, seed, count)) std::cout << format_number(x) << '\n';
    } else if (vi_cmd->parsed()) {
      const VIDemoResult r = vi_demo(vi_theta, vi);
      print_value("gradient", r.gradient.mean[0]);
      print_value("gradient_se", r.gradient.standard_error[0]);
      print_value("gradient_exact", vi_theta);
      print_value("objective", r.objective.mean);
      print_value("objective_se", r.objective.standard_error);
      print_value("objective_exact", -0.5 * vi_theta * vi_theta);
    } else if (bench_cmd->parsed()) {
      bench.modes = modes_from(modes_text);
      BenchReport report;
      if (!program_path.empty()) {
        if (samples_path.empty()) throw CLI::ValidationError("--program", "needs --data");
        const SpllProgram program = parse_spll(read_file(program_path));
        const Expr objective = nll(spll_terms(program, parse_sample_set(read_file(samples_path))));
        const Env at = theta_text.empty()
                           ? Env(std::vector<double>(program.theta_count(), 0.25))
                           : parse_env(theta_text);
        report = time_modes(objective, at, bench.modes, bench.repetitions);
      } else {
        report = run_bench(bench);
      }
      if (csv) {
        print_csv(std::cout, report);
      } else {
        print_report(std::cout, report);
      }
      if (!report.valid) return kInputError;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
  return 0;
}
