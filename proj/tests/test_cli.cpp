// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <sys/wait.h>

#include "dmft/cli.hpp"

using namespace dmft;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

json run_json(std::vector<std::string> args) {
  const auto r = run(std::move(args));
  EXPECT_EQ(r.code, 0) << r.err;
  return json::parse(r.out);
}

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("dmft_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct ScopedUnsetOutputDir {
  ScopedUnsetOutputDir() { ::unsetenv("DMFT_OUTPUT_DIR"); }
  ~ScopedUnsetOutputDir() { ::unsetenv("DMFT_OUTPUT_DIR"); }
};

}  // namespace

TEST(CliFixedPoint, ReluFieldAndSusceptibility) {
  ScopedUnsetOutputDir guard;
  const auto j = run_json({"fixed-point", "--activation", "relu", "--sigma-w-sq", "2", "--rho", "0.9"});
  EXPECT_NEAR(j["h"].get<double>(), 0.1, 1e-12);
  EXPECT_NEAR(j["chi"].get<double>(), 0.9, 1e-12);
  EXPECT_EQ(j["class"], "kinked");
  EXPECT_TRUE(j["converged"].get<bool>());
  EXPECT_NEAR(j["kappa"].get<double>(), relu_kappa(), 0.0);
}

TEST(CliFixedPoint, ConfigFileAndExplicitFlagPrecedence) {
  ScopedUnsetOutputDir guard;
  const auto d = scratch_dir("config");
  write_text(d / "tp.json", R"({"activation": "tanh", "sigma_w_sq": 1.5, "sigma_b_sq": 0.05, "rho": 0.95})");
  const auto j = run_json({"fixed-point", "--config", (d / "tp.json").string(), "--rho", "0.9"});
  EXPECT_EQ(j["theory_point"]["activation"], "tanh");
  EXPECT_EQ(j["theory_point"]["sigma_w_sq"].get<double>(), 1.5);
  EXPECT_EQ(j["theory_point"]["rho"].get<double>(), 0.9);
  EXPECT_TRUE(j.contains("g"));
}

TEST(CliFixedPoint, CsvCarriesMetaBlock) {
  ScopedUnsetOutputDir guard;
  const auto r = run({"fixed-point", "--activation", "tanh", "--sigma-w-sq", "1.2", "--sigma-b-sq", "0.05", "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("# command = fixed-point\n# activation = tanh\n", 0), 0u);
  EXPECT_NE(r.out.find("\nkey,value\n"), std::string::npos);
}

TEST(CliSchedule, BigStepTableValue) {
  ScopedUnsetOutputDir guard;
  const auto j = run_json({"schedule", "--kind", "big_step", "--h-bar", "0.1", "--h-max", "0.3", "--depth", "6"});
  EXPECT_NEAR(j["xi_eff"].get<double>(), 6.67, 0.005);
  const auto keep = j["keep_prob_per_layer"].get<std::vector<double>>();
  ASSERT_EQ(keep.size(), 6u);
  EXPECT_NEAR(keep[0], 0.7, 1e-12);
  EXPECT_EQ(keep[5], 1.0);
}

TEST(CliSchedule, FrontloadLpIsEarlyStep) {
  ScopedUnsetOutputDir guard;
  const auto lp = run_json({"schedule", "--kind", "frontload_lp", "--h-bar", "0.1", "--h-max", "0.2", "--depth", "6"});
  const auto st = run_json({"schedule", "--kind", "step_early", "--h-bar", "0.1", "--h-max", "0.2", "--depth", "6"});
  EXPECT_EQ(lp["h_per_layer"], st["h_per_layer"]);
}

TEST(CliExitCodes, ConfigPhysicsAndIo) {
  ScopedUnsetOutputDir guard;
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"fixed-point", "--activation", "swish", "--sigma-w-sq", "1"}).code, 2);
  EXPECT_EQ(run({"fixed-point", "--bogus"}).code, 2);
  EXPECT_EQ(run({"schedule", "--kind", "constant", "--h-bar", "0.5", "--h-max", "0.3"}).code, 3);
  EXPECT_EQ(run({"fixed-point", "--config", "/nonexistent/tp.json"}).code, 5);
  EXPECT_EQ(run({"report", "--no-compute", "--inputs", "/nonexistent/criteria"}).code, 5);
}

TEST(CliExitCodes, ErrorRecordIsOneJsonLine) {
  ScopedUnsetOutputDir guard;
  const auto r = run({"schedule", "--kind", "constant", "--h-bar", "0.5", "--h-max", "0.3"});
  ASSERT_EQ(r.code, 3);
  ASSERT_FALSE(r.err.empty());
  EXPECT_EQ(r.err.find('\n'), r.err.size() - 1);
  const auto j = json::parse(r.err);
  EXPECT_EQ(j["error"]["kind"], "infeasible-budget");
  EXPECT_EQ(j["error"]["exit_code"], 3);
}

TEST(CliReport, AggregatesExistingCriterionFiles) {
  ScopedUnsetOutputDir guard;
  const auto d = scratch_dir("report");
  write_text(d / "criterion_1.json", R"({"id": 1, "title": "a", "passed": true})");
  write_text(d / "criterion_3.json", R"({"id": 3, "title": "b", "passed": false})");
  auto r = run({"report", "--no-compute", "--inputs", d.string(), "--only", "1"});
  EXPECT_EQ(r.code, 0) << r.err;
  r = run({"report", "--no-compute", "--inputs", d.string(), "--only", "1,3"});
  EXPECT_EQ(r.code, 4);
  const auto j = json::parse(r.out);
  EXPECT_FALSE(j["passed"].get<bool>());
  EXPECT_EQ(j["failed"], json::array({3}));
}

TEST(CliReport, ComputesAndWritesCriterionFiles) {
  ScopedUnsetOutputDir guard;
  const auto d = scratch_dir("report_compute");
  const auto r = run({"report", "--inputs", d.string(), "--only", "1,3"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(d / "criterion_1.json"));
  EXPECT_TRUE(fs::exists(d / "criterion_3.json"));
}

TEST(CliOutput, EnvironmentDirectoryAndByteIdenticalReruns) {
  const auto d = scratch_dir("env");
  ::setenv("DMFT_OUTPUT_DIR", d.c_str(), 1);
  const std::vector<std::string> args{"phase-diagram", "--sigma-w-sq-points", "4", "--rho", "1,0.9"};
  auto r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  const auto first = read_text(d / "phase-diagram.csv");
  r = run(args);
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(read_text(d / "phase-diagram.csv"), first);
  r = run({"hermite", "--activation", "relu", "--n-max", "20", "--closed-form", "--out", "sub/h.json", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(d / "sub" / "h.json"));
  ::unsetenv("DMFT_OUTPUT_DIR");
  EXPECT_NE(first.find("sigma_w_sq,rho,q_star,h,chi,phase_without_dropout,m,c_star,xi,status\n"), std::string::npos);
}

TEST(CliValidate, SmallRunReportsZScores) {
  ScopedUnsetOutputDir guard;
  const auto j = run_json({"validate", "--width", "256", "--depth", "3", "--trials", "20"});
  ASSERT_EQ(j["layers"].size(), 3u);
  EXPECT_LT(j["max_abs_z"].get<double>(), 5.0);
  EXPECT_EQ(j["seed"], 7);
}

TEST(CliBinary, ExitCodeAndStdoutThroughProcess) {
  const std::string cmd = std::string(DMFT_CLI_PATH) + " schedule --kind constant --h-bar 0.1 --h-max 0.2 --depth 6 2>/dev/null";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  ASSERT_NE(pipe, nullptr);
  std::string text;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe) != nullptr) text += buf.data();
  const int status = ::pclose(pipe);
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
  EXPECT_NEAR(json::parse(text)["xi_eff"].get<double>(), 3.20, 0.005);
  const int bad = std::system((std::string(DMFT_CLI_PATH) + " schedule --h-bar 0.5 --h-max 0.3 >/dev/null 2>&1").c_str());
  ASSERT_TRUE(WIFEXITED(bad));
  EXPECT_EQ(WEXITSTATUS(bad), 3);
}
