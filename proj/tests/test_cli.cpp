#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(ALGOPRICING_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("algopricing_cli_" + std::string(::testing::UnitTest::GetInstance()
                                                      ->current_test_info()
                                                      ->name()));
        fs::remove_all(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string out(const std::string& sub = "") const { return (dir_ / sub).string(); }
    fs::path dir_;
};

} // namespace

TEST_F(CliTest, SolveEquilibrium) {
    EXPECT_EQ(run_cli("solve-eq"), 0);
    EXPECT_EQ(run_cli("solve-eq --agents 5"), 0);
    EXPECT_EQ(run_cli("solve-eq --mu 0"), 2);
    EXPECT_EQ(run_cli("solve-eq --grid-size 1"), 2);
}

TEST_F(CliTest, UsageErrors) {
    EXPECT_EQ(run_cli(""), 2);
    EXPECT_EQ(run_cli("frobnicate"), 2);
    EXPECT_EQ(run_cli("run --no-such-flag"), 2);
    EXPECT_EQ(run_cli("--help"), 0);
}

TEST_F(CliTest, ConfigErrorsExitWithTwo) {
    EXPECT_EQ(run_cli("run --config " + out("missing.json") + " --out " + out("o")), 2);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "bad.json") << R"({"schema_version": 1, "horizon": 10, "agnets": []})";
    EXPECT_EQ(run_cli("run --config " + out("bad.json") + " --out " + out("o")), 2);
    EXPECT_EQ(run_cli("run --replicas 0 --out " + out("o")), 2);
    EXPECT_FALSE(fs::exists(dir_ / "o"));
}

TEST_F(CliTest, DryRunWritesNothing) {
    for (const char* name : {"pd.json", "duopoly.json", "respond.json", "sweep.json",
                             "newcomer.json"}) {
        const std::string cfg = std::string(ALGOPRICING_CONFIGS) + "/" + name;
        EXPECT_EQ(run_cli("run --dry-run --config " + cfg + " --out " + out("dry")), 0) << name;
    }
    EXPECT_EQ(run_cli("sweep --dry-run --out " + out("dry")), 0);
    EXPECT_EQ(run_cli("respond --dry-run --out " + out("dry")), 0);
    EXPECT_EQ(run_cli("dual-buffer --dry-run --out " + out("dry")), 0);
    EXPECT_FALSE(fs::exists(dir_ / "dry"));
}

TEST_F(CliTest, RunAndPlotAreReproducible) {
    fs::create_directories(dir_);
    std::ofstream(dir_ / "tiny.json")
        << R"({"schema_version": 1, "horizon": 2000, "replicas": 2, "seed": 3, "evaluation": {"periods": 20},
              "convergence": {"enabled": false}})";
    const std::string cfg = out("tiny.json");
    ASSERT_EQ(run_cli("run --config " + cfg + " --out " + out("a")), 0);
    ASSERT_EQ(run_cli("run --config " + cfg + " --out " + out("b")), 0);
    const std::string csv = slurp(dir_ / "a" / "results.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "replica,period,agent,action,price,reward,epsilon,p_online");
    EXPECT_EQ(csv, slurp(dir_ / "b" / "results.csv"));
    EXPECT_TRUE(fs::exists(dir_ / "a" / "summary.txt"));
    EXPECT_TRUE(fs::exists(dir_ / "a" / "effective_config.json"));

    // The echoed configuration reproduces the run.
    ASSERT_EQ(run_cli("run --config " + out("a/effective_config.json") + " --out " + out("c")), 0);
    EXPECT_EQ(csv, slurp(dir_ / "c" / "results.csv"));

    ASSERT_EQ(run_cli("run --config " + cfg + " --seed 4 --out " + out("d")), 0);
    EXPECT_NE(csv, slurp(dir_ / "d" / "results.csv"));

    const std::string input = " --input " + out("a/results.csv") + " --config " + cfg;
    ASSERT_EQ(run_cli("plot --kind reward-trajectory" + input + " --out " + out("p1.svg")), 0);
    ASSERT_EQ(run_cli("plot --kind reward-trajectory" + input + " --out " + out("p2.svg")), 0);
    EXPECT_EQ(slurp(dir_ / "p1.svg"), slurp(dir_ / "p2.svg"));
    EXPECT_EQ(run_cli("plot --kind pie-chart" + input + " --out " + out("p3.svg")), 2);
    EXPECT_EQ(run_cli("plot --kind reward-trajectory --input " + out("none.csv") + " --out " +
                      out("p4.svg")),
              2);
}

TEST_F(CliTest, ZeroHorizonIsNotAnError) {
    fs::create_directories(dir_);
    std::ofstream(dir_ / "zero.json") << R"({"schema_version": 1, "horizon": 0, "replicas": 2})";
    ASSERT_EQ(run_cli("run --config " + out("zero.json") + " --out " + out("z")), 0);
    EXPECT_EQ(slurp(dir_ / "z" / "results.csv"),
              "replica,period,agent,action,price,reward,epsilon,p_online\n");
}
