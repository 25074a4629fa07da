#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "ladder/spll.hpp"
#include "ladder/text.hpp"
#include "support.hpp"

namespace ladder {
namespace {

const char* const kSingle = "main = if Uniform >= Theta[1] then [true] else [false]";

const char* const kSix = R"(
main = if Uniform >= Theta[1]
       then if Uniform >= Theta[2]
            then if Uniform >= Theta[3] then null    else [true]
            else if Uniform >= Theta[4] then [false] else [true,true]
       else if Uniform >= Theta[5]
            then if Uniform >= Theta[6] then [true,false] else [false,true]
            else [false,false]
)";

const char* const kSixOutcomes[] = {"null",         "[true]",       "[false]",      "[true,true]",
                                    "[true,false]", "[false,true]", "[false,false]"};

TEST(ParseSpll, SingleBranch) {
  const SpllProgram p = parse_spll(kSingle);
  ASSERT_FALSE(p.is_outcome());
  EXPECT_EQ(p.theta(), 1u);
  EXPECT_EQ(p.then_branch().outcome_value(), "[true]");
  EXPECT_EQ(p.else_branch().outcome_value(), "[false]");
}

TEST(ParseSpll, SixParameterProgram) {
  const SpllProgram p = parse_spll(kSix);
  EXPECT_EQ(p.depth(), 3u);
  EXPECT_EQ(p.theta_count(), 6u);
  const auto leaves = p.leaves();
  ASSERT_EQ(leaves.size(), 7u);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(leaves[i].outcome, kSixOutcomes[i]);
}

TEST(ParseSpll, SingleLeafAndBareComparison) {
  const SpllProgram leaf = parse_spll("main = null");
  EXPECT_TRUE(leaf.is_outcome());
  EXPECT_EQ(leaf.outcome_value(), "null");
  const SpllProgram bare = parse_spll("main = Uniform >= Theta[1]");
  EXPECT_EQ(bare.then_branch().outcome_value(), "true");
  EXPECT_EQ(bare.else_branch().outcome_value(), "false");
}

TEST(ParseSpll, Errors) {
  EXPECT_THROW(parse_spll("main = if Uniform >= Theta[0] then null else [true]"), SyntaxError);
  EXPECT_THROW(parse_spll("main = if Uniform >= Theta[1] then null"), SyntaxError);
  EXPECT_THROW(parse_spll("main = [maybe]"), SyntaxError);
  EXPECT_THROW(parse_spll("man = null"), SyntaxError);
  EXPECT_THROW(parse_spll("main = null null"), SyntaxError);
  EXPECT_THROW(parse_spll("main = if Uniform >= Theta[1] then null else null"), ModelError);
  try {
    parse_spll("main =\n  if Uniform >= Theta[x] then null else [true]");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(ParseOutcome, Canonical) {
  EXPECT_EQ(parse_outcome(" [ true , false ] "), "[true,false]");
  EXPECT_EQ(parse_outcome("[]"), "[]");
  EXPECT_EQ(parse_outcome("null"), "null");
  EXPECT_THROW(parse_outcome("[true,]"), SyntaxError);
}

TEST(OutcomeDensity, SingleParameter) {
  const SpllProgram p = parse_spll("main = Uniform >= Theta[1]");
  EXPECT_EQ(outcome_density(p, "false"), Expr::var(1));
  EXPECT_EQ(outcome_density(p, "true"), Expr::add(Expr::lit(1), Expr::neg(Expr::var(1))));
  EXPECT_THROW(outcome_density(p, "null"), ModelError);
}

TEST(OutcomeDensity, SixParameter) {
  const SpllProgram p = parse_spll(kSix);
  EXPECT_EQ(outcome_density(p, "[false,false]"), Expr::mul(Expr::var(1), Expr::var(5)));
  EXPECT_EQ(outcome_density(p, "null"), parse("(1 - x1) * (1 - x2) * (1 - x3)"));
  EXPECT_EQ(outcome_density(parse_spll("main = null"), "null"), Expr::lit(1));
}

TEST(OutcomeDensity, Normalization) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const char* text : {kSingle, kSix}) {
    const SpllProgram p = parse_spll(text);
    for (int i = 0; i < 100; ++i) {
      std::vector<double> theta(p.theta_count());
      for (double& t : theta) t = u(rng);
      double total = 0;
      for (const auto& leaf : p.leaves()) total += eval(outcome_density(p, leaf.outcome), Env(theta));
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(Sample, Boundaries) {
  const SpllProgram p = parse_spll(kSingle);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_EQ(sample(p, Env{0.0}, rng), "[true]");
    EXPECT_EQ(sample(p, Env{1.0}, rng), "[false]");
  }
  EXPECT_THROW(sample(p, Env{1.5}, rng), ModelError);
  EXPECT_THROW(sample(p, Env{-0.1}, rng), ModelError);
}

TEST(Sample, DeterministicGivenSeed) {
  const SpllProgram p = parse_spll(kSix);
  const Env theta{0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  EXPECT_EQ(sample_many(p, theta, 100, 9), sample_many(p, theta, 100, 9));
  EXPECT_EQ(sample(p, theta, std::uint64_t{5}), sample(p, theta, std::uint64_t{5}));
}

TEST(Sample, FrequencyOfFalse) {
  const SpllProgram p = parse_spll(kSingle);
  const auto draws = sample_many(p, Env{0.3}, 100000, 2);
  const double freq = static_cast<double>(std::count(draws.begin(), draws.end(), "[false]")) / 1e5;
  EXPECT_NEAR(freq, 0.3, 0.01);
}

TEST(Sample, AgreesWithDensities) {
  const SpllProgram p = parse_spll(kSix);
  const Env theta{0.3, 0.4, 0.5, 0.6, 0.7, 0.2};
  const std::size_t n = 100000;
  std::map<Outcome, double> counts;
  for (const Outcome& o : sample_many(p, theta, n, 3)) counts[o] += 1;
  for (const auto& leaf : p.leaves()) {
    const double prob = eval(outcome_density(p, leaf.outcome), theta);
    const double se = std::sqrt(prob * (1 - prob) / n);
    EXPECT_NEAR(counts[leaf.outcome] / n, prob, 3 * se) << leaf.outcome;
  }
}

TEST(SampleSet, Parsing) {
  const SampleSet s = parse_sample_set("# comment\nfalse\n\n[true, false],4\ntrue\nfalse\n");
  EXPECT_EQ(s.counts.at("false"), 2u);
  EXPECT_EQ(s.counts.at("[true,false]"), 4u);
  EXPECT_EQ(s.counts.at("true"), 1u);
  EXPECT_EQ(s.total(), 7u);
  EXPECT_THROW(parse_sample_set("# nothing\n"), ModelError);
  try {
    parse_sample_set("true\nmaybe\n");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(FitSpll, UnknownOutcomeIsRejected) {
  SampleSet s;
  s.add("null");
  EXPECT_THROW(fit_spll(parse_spll(kSingle), s, Env{0.5}, FitConfig{}), ModelError);
}

TEST(FitSpll, SixParameterRun) {
  SampleSet s;
  for (const char* o : kSixOutcomes) s.add(o, 3);
  FitConfig config;
  config.max_iterations = 100;
  config.convergence_tolerance = 0;
  const FitResult r = fit_spll(parse_spll(kSix), s, Env{0.5, 0.25, 0.25, 0.25, 0.25, 0.25}, config);
  const double expected[] = {3.0 / 7, 0.5, 0.5, 0.5, 1.0 / 3, 0.5};
  EXPECT_EQ(r.iterations_used, 100u);
  for (int k = 0; k < 6; ++k) EXPECT_NEAR(r.parameters.values()[k], expected[k], 1e-9);
  for (std::size_t i = 1; i < r.objective_trace.size(); ++i) {
    EXPECT_LE(r.objective_trace[i], r.objective_trace[i - 1] + 1e-12);
  }
}

TEST(FitSpll, SymmetricCountsGiveOneHalf) {
  for (double start : {0.3, 0.45, 0.7}) {
    SampleSet s;
    s.add("false", 5);
    s.add("true", 5);
    FitConfig config;
    config.max_iterations = 5000;
    const FitResult r = fit_spll(parse_spll("main = Uniform >= Theta[1]"), s, Env{start}, config);
    EXPECT_NEAR(r.parameters.values()[0], 0.5, 1e-12);
  }
}

// Closed-form MLE on a decision tree: theta_k = (count through k's else
// side) / (count reaching k).
std::vector<double> brute_force_mle(const SpllProgram& p, const SampleSet& s) {
  std::map<std::uint32_t, std::pair<double, double>> mass;  // k -> (else, total)
  for (const auto& leaf : p.leaves()) {
    const auto it = s.counts.find(leaf.outcome);
    const double c = it == s.counts.end() ? 0.0 : static_cast<double>(it->second);
    for (const auto& edge : leaf.path) {
      mass[edge.theta].second += c;
      if (!edge.then_branch) mass[edge.theta].first += c;
    }
  }
  std::vector<double> out(p.theta_count());
  for (const auto& [k, m] : mass) out[k - 1] = m.first / m.second;
  return out;
}

TEST(FitSpll, MleConsistencyOnTrees) {
  const SpllProgram p = parse_spll(kSix);
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> count(1, 6);
  for (int round = 0; round < 5; ++round) {
    SampleSet s;
    for (const char* o : kSixOutcomes) s.add(o, count(rng));
    FitConfig config;
    config.learning_rate = 0.01;
    config.max_iterations = 20000;
    config.convergence_tolerance = 1e-15;
    const FitResult r = fit_spll(p, s, Env{0.5, 0.5, 0.5, 0.5, 0.5, 0.5}, config);
    const auto mle = brute_force_mle(p, s);
    for (int k = 0; k < 6; ++k) EXPECT_NEAR(r.parameters.values()[k], mle[k], 1e-6);
  }
}

}  // namespace
}  // namespace ladder
