#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

struct CliRun {
  int code;
  std::string out;
};

CliRun run(const std::string& args) {
  const std::string command = std::string(LADDER_CLI) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(command.c_str(), "r");
  if (pipe == nullptr) return {-1, ""};
  std::string out;
  char buffer[4096];
  std::size_t n;
  while ((n = fread(buffer, 1, sizeof buffer, pipe)) > 0) out.append(buffer, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string data(const std::string& name) { return std::string(LADDER_DATA_DIR) + "/" + name; }

std::string value_of(const std::string& out, const std::string& key) {
  std::istringstream lines(out);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.rfind(key + "=", 0) == 0) return line.substr(key.size() + 1);
  }
  return "";
}

std::string temp_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << content;
  return path.string();
}

TEST(Cli, Eval) {
  const CliRun r = run("eval -e \"x1*sin(x2)\" -x 2,0.5");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "0.958851077208406\n");
}

TEST(Cli, Deriv) {
  const CliRun r = run("deriv -e \"x1*x2\" -v 1");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "x2 * 1 + x1 * 0\n");
}

TEST(Cli, GradDenseListsEveryVariable) {
  const CliRun r = run("grad -e \"x1*x2\" -x 3,4,5");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "primal=12\nx1=4\nx2=3\nx3=0\n");
}

TEST(Cli, GradSparseModesOmitAbsentVariables) {
  for (const char* mode : {"fwd", "rev1", "rev2"}) {
    const CliRun r = run(std::string("grad --mode ") + mode + " -e \"x1*x2\" -x 3,4,5");
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "primal=12\nx1=4\nx2=3\n") << mode;
  }
}

TEST(Cli, FitSpllSingle) {
  const CliRun r = run("fit-spll -p " + data("single.spll") + " -d " + data("single_samples.txt") +
                    " --init 0.5");
  ASSERT_EQ(r.code, 0);
  EXPECT_NEAR(std::stod(value_of(r.out, "theta1")), 0.3, 1e-12);
  const int steps = std::stoi(value_of(r.out, "steps"));
  EXPECT_GE(steps, 11);
  EXPECT_LE(steps, 15);
  EXPECT_EQ(value_of(r.out, "converged"), "true");
  EXPECT_EQ(run("fit-spll -p " + data("single.spll") + " -d " + data("single_samples.txt") +
                " --init 0.5").out,
            r.out);
}

TEST(Cli, FitSpllSix) {
  const CliRun r = run("fit-spll -p " + data("six.spll") + " -d " + data("six_samples.txt") +
                    " --init 0.5,0.25,0.25,0.25,0.25,0.25 --iters 100");
  ASSERT_EQ(r.code, 0);
  const double expected[] = {3.0 / 7, 0.5, 0.5, 0.5, 1.0 / 3, 0.5};
  for (int k = 0; k < 6; ++k) {
    EXPECT_NEAR(std::stod(value_of(r.out, "theta" + std::to_string(k + 1))), expected[k], 1e-9);
  }
  EXPECT_EQ(value_of(r.out, "steps"), "100");
}

TEST(Cli, SampleSpll) {
  const CliRun a = run("sample-spll -p " + data("single.spll") + " --theta 0.3 -n 20 --seed 4");
  const CliRun b = run("sample-spll -p " + data("single.spll") + " --theta 0.3 -n 20 --seed 4");
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(std::count(a.out.begin(), a.out.end(), '\n'), 20);
  EXPECT_EQ(run("sample-spll -p " + data("single.spll") + " --theta 1.5").code, 2);
}

TEST(Cli, WidgetRoundTrip) {
  const CliRun s = run("sample-widget -n 2000 --seed 3");
  ASSERT_EQ(s.code, 0);
  const std::string path = temp_file("ladder_widget_samples.txt", s.out);
  const CliRun r = run("fit-widget -d " + path + " --lr 5e-4 --max-iters 40");
  ASSERT_EQ(r.code, 0);
  for (const char* key : {"mu", "sigma2", "iterations", "converged", "nll_initial", "nll_final"}) {
    EXPECT_FALSE(value_of(r.out, key).empty()) << key;
  }
  EXPECT_LT(std::stod(value_of(r.out, "nll_final")), std::stod(value_of(r.out, "nll_initial")));
  EXPECT_GT(std::stod(value_of(r.out, "sigma2")), 0.0);
}

TEST(Cli, ViDemo) {
  const CliRun r = run("vi-demo --seed 1 -n 4000");
  ASSERT_EQ(r.code, 0);
  const double g = std::stod(value_of(r.out, "gradient"));
  const double se = std::stod(value_of(r.out, "gradient_se"));
  EXPECT_NEAR(g, 1.0, 3 * se);
  EXPECT_EQ(value_of(r.out, "objective_exact"), "-0.5");
  EXPECT_EQ(run("vi-demo --seed 1 -n 4000").out, r.out);
}

TEST(Cli, Bench) {
  const CliRun r = run("bench -N 501 -V 5 -r 2 --csv");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("mode,mean_s,median_s,total_s,checksum\n", 0), 0u);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 5);
  const CliRun p = run("bench -p " + data("six.spll") + " -d " + data("six_samples.txt") + " -r 3");
  EXPECT_EQ(p.code, 0);
  EXPECT_NE(p.out.find("valid"), std::string::npos);
}

TEST(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("eval -e x1").code, 1);
  EXPECT_EQ(run("grad --mode sideways -e x1 -x 1").code, 1);
  EXPECT_EQ(run("bench -N 3 -V 5").code, 1);
}

TEST(Cli, InputErrorsExitWithTwo) {
  EXPECT_EQ(run("eval -e \"x1 +\" -x 1").code, 2);
  EXPECT_EQ(run("eval -e \"log(x1)\" --env=-1").code, 2);
  EXPECT_EQ(run("eval -e x3 -x 1").code, 2);
  EXPECT_EQ(run("fit-spll -p /nonexistent -d /nonexistent --init 0.5").code, 2);
}

TEST(Cli, HelpExitsWithZero) { EXPECT_EQ(run("--help").code, 0); }

}  // namespace
