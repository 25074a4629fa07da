#include <iostream>

#include "ladder/ladder.hpp"

int main() {
  using namespace ladder;

  const Expr f = parse("x1 * sin(x2) + exp(x1 * x2)");
  const Env at({0.5, 2.0});

  std::cout << "f        = " << format(f) << '\n';
  std::cout << "df/dx1   = " << format(symb_derive(f, VarId(1))) << '\n';

  const DenseResult r = rev_dense(f, at);
  std::cout << "f(at)    = " << format_number(r.primal) << '\n';
  for (std::size_t i = 0; i < r.gradient.size(); ++i) {
    std::cout << "grad[x" << i + 1 << "] = " << format_number(r.gradient.values()[i]) << '\n';
  }

  const SpllProgram program = parse_spll("main = Uniform >= Theta[1]");
  SampleSet samples;
  samples.add("false", 3);
  samples.add("true", 7);
  const FitResult fit = fit_spll(program, samples, Env({0.5}), FitConfig{});
  std::cout << "theta1   = " << format_number(fit.parameters.values()[0]) << " after "
            << fit.iterations_used << " steps\n";
}
