#include "gchan/cli.hpp"
#include "gchan/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace gchan;
using namespace gchan::cli;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = std::filesystem::temp_directory_path() / ("gchan_cli_" + std::string(info->name()));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::filesystem::path write_config(const Json& j, const std::string& name = "config.json") {
    const auto p = dir_ / name;
    std::ofstream(p) << j.dump();
    return p;
  }

  int run_cmd(const std::string& command, const Json& j, std::optional<std::uint64_t> seed = {}) {
    RunOptions opts;
    opts.config = write_config(j);
    opts.out = dir_ / "out";
    opts.seed = seed;
    log_.str("");
    err_.str("");
    return run(command, opts, log_, err_);
  }

  std::vector<std::vector<std::string>> read_csv(const std::string& name) {
    std::ifstream in(dir_ / "out" / name);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
      std::vector<std::string> cells;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      rows.push_back(cells);
    }
    return rows;
  }

  Json read_json(const std::string& name) {
    std::ifstream in(dir_ / "out" / name);
    return Json::parse(in);
  }

  std::filesystem::path dir_;
  std::ostringstream log_, err_;
};

int exit_status(const std::string& cmd) {
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

}  // namespace

TEST(Output, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0, 4.0 / (M_PI * M_PI)}) {
    const std::string s = format_double(v);
    EXPECT_EQ(std::stod(s), v) << s;
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(1.0 / 3.0), "0.33333333333333331");
}

TEST(Output, CsvQuoting) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  CsvTable t({"x", "y"});
  t.add_row({"1", "a,b"});
  EXPECT_EQ(t.str(), "x,y\n1,\"a,b\"\n");
}

TEST(Config, GridKernelAndGammaParsing) {
  const TimeGrid g = parse_grid(Json{{"T", 2.0}, {"n", 10}});
  EXPECT_EQ(g.size(), 10u);
  EXPECT_THROW(parse_grid(Json{{"T", 2.0}}), ConfigError);
  EXPECT_THROW(parse_grid(Json{{"T", 2.0}, {"n", 10}, {"m", 1}}), ConfigError);
  EXPECT_THROW(parse_grid(Json{{"T", -2.0}, {"n", 10}}), ConfigError);

  const KernelSpec k = parse_kernel(Json{{"family", "exponential"}, {"variance", 1.0}, {"rate", 2.0}}, g);
  EXPECT_NEAR(k.eval(0.0, 1.0)(0, 0), std::exp(-2.0), 1e-15);
  EXPECT_THROW(parse_kernel(Json{{"family", "exponential"}, {"variance", 1.0}}, g), ConfigError);
  EXPECT_THROW(parse_kernel(Json{{"family", "brownian_motion"}, {"rate", 1.0}}, g), ConfigError);
  EXPECT_THROW(parse_kernel(Json{{"family", "matern"}}, g), ConfigError);
  const KernelSpec m = parse_kernel(
      Json::parse(R"({"family":"matrix_stationary","channels":[[{"variance":1,"rate":1}],[{"variance":1,"rate":2}]]})"),
      g);
  EXPECT_EQ(m.channels(), 2);
  EXPECT_THROW(parse_kernel(Json::parse(R"({"family":"finite_rank","eigenvalues":[1,-1]})"), g), ConfigError);

  EXPECT_EQ(parse_gamma_grid(Json::array({0.5, 1.0})).size(), 2u);
  EXPECT_EQ(parse_gamma_grid(Json{{"min", 1e-3}, {"max", 1e2}, {"points", 50}}).size(), 50u);
  EXPECT_THROW(parse_gamma_grid(Json::array({0.0, 1.0})), ConfigError);
  EXPECT_THROW(parse_gamma_grid(Json::array({-1.0})), ConfigError);
  EXPECT_THROW(parse_gamma_grid(Json{{"min", 1.0}, {"max", 2.0}, {"points", 3}, {"spacing", "cubic"}}), ConfigError);
}

TEST(Config, OverridesApplyToSeedAndOutput) {
  RunOptions opts;
  opts.seed = 99;
  opts.out = "/tmp/x";
  const auto c = parse_simulate_config(
      Json::parse(R"({"signal":"binary","gamma":1,"paths":10,"grid":{"T":1,"n":5},"seed":3})"), opts);
  EXPECT_EQ(c.common.seed, 99u);
  EXPECT_EQ(c.common.output_dir, "/tmp/x");
  EXPECT_EQ(c.common.effective["seed"], 99u);
}

TEST_F(CliTest, SpectrumBrownian) {
  ASSERT_EQ(run_cmd("spectrum", Json::parse(R"({"kernel":{"family":"brownian_motion"},"grid":{"T":1,"n":200}})")),
            kExitOk);
  const auto rows = read_csv("spectrum.csv");
  ASSERT_EQ(rows.size(), 201u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"index", "eigenvalue"}));
  EXPECT_EQ(rows[1][0], "1");
  EXPECT_NEAR(std::stod(rows[1][1]), 4.0 / (M_PI * M_PI), 5e-3 * 4.0 / (M_PI * M_PI));
  const Json meta = read_json("spectrum.json");
  EXPECT_NEAR(meta["trace"].get<double>(), meta["eigenvalue_sum"].get<double>(), 1e-10);
}

TEST_F(CliTest, SpectrumFiniteRankHasTwoNonzeroRows) {
  ASSERT_EQ(run_cmd("spectrum", Json::parse(R"({"kernel":{"family":"finite_rank","eigenvalues":[1,0.5]},
                                               "grid":{"T":1,"n":50}})")),
            kExitOk);
  const auto rows = read_csv("spectrum.csv");
  int nonzero = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) nonzero += std::stod(rows[i][1]) != 0.0;
  EXPECT_EQ(nonzero, 2);
  EXPECT_NEAR(std::stod(rows[1][1]), 1.0, 1e-12);
  EXPECT_NEAR(std::stod(rows[2][1]), 0.5, 1e-12);
}

TEST_F(CliTest, MissingKernelIsExitTwo) {
  EXPECT_EQ(run_cmd("spectrum", Json::parse(R"({"grid":{"T":1,"n":10}})")), kExitConfig);
  EXPECT_NE(err_.str().find("kernel"), std::string::npos);
  EXPECT_EQ(run_cmd("spectrum", Json::parse(R"({"kernel":{"family":"brownian_motion"},"grid":{"T":1,"n":10},
                                               "colour":"red"})")),
            kExitConfig);
  EXPECT_NE(err_.str().find("unknown key 'colour'"), std::string::npos);
}

TEST_F(CliTest, CurvesRankOne) {
  ASSERT_EQ(run_cmd("curves", Json::parse(R"({"eigenvalues":[1],"gamma":[0.5,1,2]})")), kExitOk);
  const auto rows = read_csv("curves.csv");
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"gamma", "causal_mmse", "noncausal_mmse", "mutual_info", "res_duncan",
                                               "res_immse", "res_link"}));
  EXPECT_NEAR(std::stod(rows[2][1]), 0.693147, 1e-6);
  EXPECT_NEAR(std::stod(rows[2][2]), 0.5, 1e-15);
  EXPECT_NEAR(std::stod(rows[2][3]), 0.346574, 1e-6);
}

TEST_F(CliTest, CurvesFiftyPointGrid) {
  ASSERT_EQ(run_cmd("curves", Json::parse(R"({"kernel":{"family":"exponential","variance":1,"rate":1},
                                             "grid":{"T":1,"n":100},
                                             "gamma":{"min":1e-3,"max":100,"points":50,"spacing":"log"}})")),
            kExitOk);
  const auto rows = read_csv("curves.csv");
  ASSERT_EQ(rows.size(), 51u);
  for (std::size_t i = 1; i < rows.size(); ++i)
    for (std::size_t c = 4; c < 7; ++c) EXPECT_LE(std::abs(std::stod(rows[i][c])), 1e-10);
  EXPECT_NE(read_json("curves.json")["causal_convention"].get<std::string>().find("including"), std::string::npos);
}

TEST_F(CliTest, CurvesRejectsNonPositiveGamma) {
  EXPECT_EQ(run_cmd("curves", Json::parse(R"({"eigenvalues":[1],"gamma":[0,1]})")), kExitConfig);
  EXPECT_EQ(run_cmd("curves", Json::parse(R"({"eigenvalues":[1],"gamma":{"min":-1,"max":1,"points":3}})")),
            kExitConfig);
}

TEST_F(CliTest, VerifySmallConfigPassesAndRoundTrips) {
  const Json cfg = Json::parse(R"({"n":60,"innovation_n":[25,50,100],"paths":2000,"binary_n":40,
                                   "horizons":[4,8,16],"step":0.2})");
  ASSERT_EQ(run_cmd("verify", cfg), kExitOk) << log_.str() << err_.str();
  const Json report = read_json("verify_report.json");
  EXPECT_TRUE(report["pass"].get<bool>());
  bool all = true;
  for (const auto& c : report["checks"]) {
    all = all && c["pass"].get<bool>();
    EXPECT_TRUE(c.contains("check_name") && c.contains("paper_eq") && c.contains("max_residual") &&
                c.contains("tolerance"));
  }
  EXPECT_EQ(all, report["pass"].get<bool>());
  EXPECT_EQ(Json::parse(report.dump()), report);
  EXPECT_TRUE(report["metadata"].contains("timestamps"));
}

TEST_F(CliTest, VerifyWithZeroToleranceFails) {
  const Json cfg = Json::parse(R"({"n":30,"innovation_n":[10,20],"paths":200,"binary_n":20,
                                   "horizons":[2,4],"step":0.2,"tolerance_scale":0})");
  EXPECT_EQ(run_cmd("verify", cfg), kExitFailure);
  const Json report = read_json("verify_report.json");
  EXPECT_FALSE(report["pass"].get<bool>());
  double largest = 0.0;
  for (const auto& c : report["checks"]) {
    if (c["max_residual"].is_number()) largest = std::max(largest, c["max_residual"].get<double>());
  }
  EXPECT_GT(largest, 0.0);
}

TEST_F(CliTest, SimulateBinaryIsDeterministic) {
  const Json cfg = Json::parse(R"({"signal":"binary","gamma":1,"paths":20000,"grid":{"T":1,"n":100},"seed":7})");
  ASSERT_EQ(run_cmd("simulate", cfg), kExitOk);
  Json first = read_json("simulate.json");
  EXPECT_TRUE(first["duncan"]["within_3_stderr"].get<bool>());
  EXPECT_FALSE(first["gap_ratio"]["gated"].get<bool>());
  ASSERT_EQ(run_cmd("simulate", cfg), kExitOk);
  Json second = read_json("simulate.json");
  for (Json* j : {&first, &second}) {
    j->erase("timestamp");
    j->erase("runtime_ms");
  }
  EXPECT_EQ(first.dump(), second.dump());
  ASSERT_EQ(run_cmd("simulate", cfg, 8), kExitOk);
  EXPECT_EQ(read_json("simulate.json")["seed"], 8u);
}

TEST_F(CliTest, SimulateZeroGammaHasNoInformation) {
  ASSERT_EQ(run_cmd("simulate", Json::parse(R"({"signal":"binary","gamma":0,"paths":500,"grid":{"T":1,"n":20}})")),
            kExitOk);
  const Json out = read_json("simulate.json");
  const auto& mi = out["estimates"][2];
  EXPECT_EQ(mi["name"], "mutual_information_duncan");
  EXPECT_LE(std::abs(mi["mean"].get<double>()), 3.0 * mi["stderr"].get<double>() + 1e-15);
}

TEST_F(CliTest, SimulateGaussian) {
  ASSERT_EQ(run_cmd("simulate", Json::parse(R"({"signal":"gaussian","gamma":1,"paths":3000,"grid":{"T":1,"n":40},
                                               "kernel":{"family":"exponential","variance":1,"rate":1}})")),
            kExitOk);
  EXPECT_TRUE(read_json("simulate.json")["duncan"]["within_3_stderr"].get<bool>());
}

TEST_F(CliTest, SimulateNeedsTwoPaths) {
  EXPECT_EQ(run_cmd("simulate", Json::parse(R"({"signal":"binary","gamma":1,"paths":1,"grid":{"T":1,"n":10}})")),
            kExitConfig);
}

TEST_F(CliTest, YjStudyScalarAndDiagonal) {
  ASSERT_EQ(run_cmd("yj", Json::parse(R"({"kernel":{"family":"exponential","variance":1,"rate":1},"gamma":1,
                                         "horizons":[5,10,20],"step":0.1})")),
            kExitOk);
  const auto rows = read_csv("yj.csv");
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"T", "n", "average", "target", "gap"}));
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_NEAR(std::stod(rows[i][3]), 0.732051, 1e-6);
  for (std::size_t i = 2; i < rows.size(); ++i) EXPECT_LT(std::stod(rows[i][4]), std::stod(rows[i - 1][4]));
  EXPECT_TRUE(read_json("yj.json")["monotone"].get<bool>());

  ASSERT_EQ(run_cmd("yj", Json::parse(R"({"channels":[[{"variance":1,"rate":1}],[{"variance":1,"rate":2}]],
                                         "gamma":1,"horizons":[4,8],"step":0.2})")),
            kExitOk);
  const Json header = read_json("yj.json");
  EXPECT_NEAR(header["target"].get<double>(), header["sum_channel_targets"].get<double>(), 1e-8);
}

TEST_F(CliTest, YjBudgetIsExitTwoWithSuggestion) {
  EXPECT_EQ(run_cmd("yj", Json::parse(R"({"kernel":{"family":"exponential","variance":1,"rate":1},"gamma":1,
                                         "horizons":[200],"step":0.05})")),
            kExitConfig);
  EXPECT_NE(err_.str().find("use step >="), std::string::npos);
}

TEST_F(CliTest, BinaryExitCodes) {
  const std::string exe = GCHAN_CLI_PATH;
  const auto good = write_config(Json::parse(R"({"eigenvalues":[1,0.5],"gamma":[1]})"), "good.json");
  const auto bad = write_config(Json::parse(R"({"gamma":[1]})"), "bad.json");
  const std::string out = " --out " + (dir_ / "bin").string() + " > /dev/null 2>&1";
  EXPECT_EQ(exit_status(exe + " curves --config " + good.string() + out), 0);
  EXPECT_EQ(exit_status(exe + " curves --config " + bad.string() + out), 2);
  EXPECT_EQ(exit_status(exe + " frobnicate" + out), 2);
  EXPECT_EQ(exit_status(exe + " --version > /dev/null"), 0);
  EXPECT_TRUE(std::filesystem::exists(dir_ / "bin" / "curves.csv"));
}
