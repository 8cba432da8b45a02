#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qpa/cli.hpp"

namespace qpa {
namespace {

using cli::parse_args;
using cli::UsageError;
using cli::Verb;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("qpa_test_" + name);
}

int run_cli(const std::vector<std::string>& args, std::string* out_text = nullptr,
            std::string* err_text = nullptr) {
  std::vector<const char*> argv{"qpa"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int rc = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return rc;
}

TEST(ParseArgs, SweepDefaults) {
  const auto cfg = parse_args({"sweep", "--n", "2", "--families", "exp,pow"});
  EXPECT_EQ(cfg.verb, Verb::sweep);
  EXPECT_EQ(cfg.n, 2);
  EXPECT_EQ(cfg.iters, 100);
  EXPECT_EQ(cfg.start, 0.5);
  EXPECT_EQ(cfg.alphas, alpha_grid());
  EXPECT_EQ(cfg.c_grid.points(), default_steepness_grid());
  EXPECT_EQ(cfg.refine, 2);
  EXPECT_EQ(cfg.families, (std::vector<Family>{Family::exponential, Family::power}));
}

TEST(ParseArgs, Dynamics) {
  const auto cfg = parse_args({"dynamics", "--n", "2", "--alpha", "3", "--weight", "exp:c=2"});
  EXPECT_EQ(cfg.verb, Verb::dynamics);
  EXPECT_EQ(cfg.values, (std::vector<double>{3.0, 1.0}));
  EXPECT_EQ(*cfg.weight, WeightSpec::exponential(2.0));
  EXPECT_EQ(cfg.tol, 0.0);
  EXPECT_EQ(cfg.iters, 100);
}

TEST(ParseArgs, UsageErrors) {
  EXPECT_THROW(parse_args({"run", "--weight", "pow:p=-1", "--bids", "0.5,0.5"}), UsageError);
  EXPECT_THROW(parse_args({"run", "--weight", "pow:p=1", "--bids", "0.5"}), UsageError);
  EXPECT_THROW(parse_args({"sweep", "--bogus"}), UsageError);
  EXPECT_THROW(parse_args({"launch"}), UsageError);
  EXPECT_THROW(parse_args({}), UsageError);
  EXPECT_THROW(parse_args({"dynamics", "--weight", "exp:c=1", "--iters", "0"}), UsageError);
  EXPECT_THROW(parse_args({"dynamics", "--weight", "exp:c=1", "--start", "2"}), UsageError);
  EXPECT_THROW(parse_args({"sweep", "--families", "exp,poly"}), UsageError);
  EXPECT_THROW(parse_args({"sweep", "--c-grid", "1:0.5:10"}), UsageError);
  EXPECT_THROW(parse_args({"bounds", "--c", "-1"}), UsageError);
  EXPECT_THROW(parse_args({"verify", "--values", "1"}), UsageError);
}

TEST(Cli, ExitCodes) {
  std::string err;
  EXPECT_EQ(run_cli({"run", "--weight", "pow:p=-1", "--bids", "0.5,0.5"}, nullptr, &err), 2);
  EXPECT_NE(err.find("p > 0"), std::string::npos);
  std::string help;
  EXPECT_EQ(run_cli({"--help"}, &help), 0);
  EXPECT_NE(help.find("dynamics"), std::string::npos);
  EXPECT_EQ(run_cli({"verify", "--values", "2,1", "--c", "1"}, nullptr, &err), 3);
}

TEST(Cli, RunPrintsOutcome) {
  std::string out;
  ASSERT_EQ(run_cli({"run", "--weight", "pow:p=1", "--values", "2,1", "--bids", "1,0.5"}, &out),
            0);
  EXPECT_NE(out.find("revenue=0.833333333333\n"), std::string::npos);
  EXPECT_NE(out.find("allocations=0.666666666667,0.333333333333\n"), std::string::npos);
}

TEST(Cli, DynamicsCsv) {
  std::string out;
  ASSERT_EQ(run_cli({"dynamics", "--weight", "pow:p=1", "--n", "2", "--alpha", "1"}, &out), 0);
  std::istringstream in(out);
  std::string line, last;
  std::getline(in, line);
  EXPECT_EQ(line, "iter,b_1,b_2,revenue,residual");
  int rows = 0;
  while (std::getline(in, line)) {
    last = line;
    ++rows;
  }
  EXPECT_EQ(rows, 101);
  const auto cells = qpa::detail::split(last, ',');
  ASSERT_EQ(cells.size(), 5u);
  EXPECT_EQ(cells[0], "100");
  EXPECT_EQ(cells[3], "0.333333333333");
}

TEST(Cli, SweepCsvHeaderOnlyWhenEmpty) {
  std::ostringstream os;
  write_sweep_csv(os, {});
  EXPECT_EQ(os.str(), std::string(kSweepHeader) + "\n");
  std::istringstream in(os.str());
  EXPECT_TRUE(read_sweep_csv(in).empty());
}

TEST(Cli, SweepCsvRoundTripAndDeterminism) {
  const auto path = temp_path("sweep.csv");
  const std::vector<std::string> args = {
      "sweep", "--n", "2", "--alphas", "3,1.4", "--c-grid", "0.05:500:15",
      "--p-grid", "0.05:500:15", "--refine", "1", "-o", path.string()};
  ASSERT_EQ(run_cli(args), 0);
  const std::string first = slurp(path);
  ASSERT_EQ(run_cli(args), 0);
  EXPECT_EQ(slurp(path), first);

  std::istringstream in(first);
  const auto rows = read_sweep_csv(in);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].alpha, 1.4);
  EXPECT_EQ(rows[0].family, Family::exponential);
  EXPECT_EQ(rows[1].family, Family::power);
  EXPECT_EQ(rows[2].alpha, 3.0);
  std::ostringstream again;
  write_sweep_csv(again, rows);
  EXPECT_EQ(again.str(), first);
  std::filesystem::remove(path);
}

TEST(Cli, BoundsAndVerify) {
  std::string out;
  ASSERT_EQ(run_cli({"bounds", "--values", "2,1", "--c", "4"}, &out), 0);
  EXPECT_NE(out.find("bounds=0.5,0.5\n"), std::string::npos);
  EXPECT_NE(out.find("premise_ok=1\n"), std::string::npos);

  const auto path = temp_path("verify.txt");
  ASSERT_EQ(run_cli({"verify", "--values", "2,1", "--c", "4", "--samples", "300", "--seed",
                     "9", "-o", path.string()}),
            0);
  const std::string report = slurp(path);
  EXPECT_NE(report.find("violations=0\n"), std::string::npos);
  EXPECT_NE(report.find("samples=300\n"), std::string::npos);
  std::filesystem::remove(path);

  ASSERT_EQ(run_cli({"verify", "--values", "2,1", "--c", "4", "--samples", "0"}, &out), 0);
  EXPECT_NE(out.find("worst_margin=undefined\n"), std::string::npos);
}

TEST(Cli, UnwritablePathReportsIt) {
  std::string err;
  EXPECT_EQ(run_cli({"bounds", "--values", "2,1", "--c", "4", "-o",
                     "/nonexistent-dir/x.txt"},
                    nullptr, &err),
            3);
  EXPECT_NE(err.find("/nonexistent-dir/x.txt"), std::string::npos);
}

}  // namespace
}  // namespace qpa
