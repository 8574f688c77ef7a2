#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"

namespace wdje::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
  protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("wdje_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string write(const std::string& name, const std::string& text) {
        const auto path = dir_ / name;
        std::ofstream(path) << text;
        return path.string();
    }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

TEST_F(Cli, WassersteinTwoAtoms) {
    const auto u = write("u.csv", "x\n0\n1\n");
    const auto v = write("v.csv", "x\n2\n3\n");
    const auto r = invoke({"wasserstein", "--u", u, "--v", v, "--p", "1", "--solver", "exact"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_NEAR(j["distance"].get<double>(), 2.0, 1e-12);
    EXPECT_EQ(j["solver"], "exact");
}

TEST_F(Cli, WassersteinWeightsAndPlan) {
    const auto u = write("u.csv", "x,weight\n0,1\n2,3\n");
    const auto v = write("v.csv", "x\n1\n");
    const auto r = invoke({"wasserstein", "--u", u, "--v", v, "--plan", "--solver", "auto"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_NEAR(j["distance"].get<double>(), 1.0, 1e-12);
    EXPECT_EQ(j["coupling"].size(), 2u);
}

TEST_F(Cli, ScoreSignRule) {
    const auto r = invoke({"score", "--bound-total", "0.5", "--risk-without", "1.0"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_EQ(j["tr_score"].get<double>(), -0.5);
    EXPECT_EQ(j["decision"], "transfer");
    EXPECT_TRUE(j["empirical_tr"].is_null());
}

TEST_F(Cli, ConsistencyCounts) {
    const auto r = invoke({"consistency", "--counts", "3,0,22,24"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_NEAR(j["ci_table"].get<double>(), 0.5217, 5e-5);
    EXPECT_EQ(j["ci_definition"].get<double>(), 1.0);
    EXPECT_EQ(j["confusion"]["total"], 49);
    EXPECT_EQ(invoke({"consistency", "--counts", "3,0,22"}).code, 1);
}

TEST_F(Cli, HelpListsFlagsWithDefaults) {
    for (const std::string cmd : {"wasserstein", "bound", "score", "baseline", "sweep", "consistency", "synth"}) {
        const auto r = invoke({cmd, "--help"});
        EXPECT_EQ(r.code, 0) << cmd;
        EXPECT_NE(r.out.find("--output"), std::string::npos) << cmd;
    }
    const auto bound = invoke({"bound", "--help"});
    EXPECT_NE(bound.out.find("--k-lambda"), std::string::npos);
    EXPECT_NE(bound.out.find("0.001"), std::string::npos);
    EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST_F(Cli, RangeErrorsFailBeforeReading) {
    // The input files do not exist; the range check must fire regardless.
    auto r = invoke({"sweep", "--r", "1.5"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("error:"), std::string::npos);
    r = invoke({"bound", "--p", "0.5", "--source-features", path("missing.csv"), "--target-features",
                path("missing.csv")});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(invoke({"score", "--bound-total", "1", "--risk-without", "-2"}).code, 1);
    EXPECT_EQ(invoke({"sweep", "--k-lambda", "0"}).code, 1);
}

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(invoke({}).code, 1);
    EXPECT_EQ(invoke({"frobnicate"}).code, 1);
    EXPECT_EQ(invoke({"score", "--risk-without", "1", "--unknown"}).code, 1);
    const auto missing = invoke({"wasserstein", "--u", path("nope.csv"), "--v", path("nope.csv")});
    EXPECT_EQ(missing.code, 1);
    EXPECT_EQ(std::count(missing.err.begin(), missing.err.end(), '\n'), 1);
}

TEST_F(Cli, MalformedInputIsValidationError) {
    const auto u = write("u.csv", "x\n0\nnan\n");
    const auto r = invoke({"wasserstein", "--u", u, "--v", u});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("row 1"), std::string::npos) << r.err;
}

TEST_F(Cli, SynthThenBoundThenScore) {
    auto r = invoke({"synth", "--seed", "3", "--samples", "40", "--feature-dim", "3", "--mean-shift", "1",
                     "--source-out", path("s.csv"), "--target-out", path("t.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    r = invoke({"bound", "--source-features", path("s.csv"), "--target-features", path("t.csv"), "--task",
                "classification", "--classes", "4", "--n-t1", "10", "-o", path("bound.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(path("bound.json"));
    const auto j = json::parse(in);
    EXPECT_EQ(j["bound"]["mode"], "supervised");
    EXPECT_GT(j["bound"]["total"].get<double>(), 0.0);

    r = invoke({"score", "--bound-json", path("bound.json"), "--risk-without", "0.1"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(json::parse(r.out)["tr_score"].get<double>(), j["bound"]["total"].get<double>() - 0.1, 1e-12);

    r = invoke({"baseline", "--target-features", path("t.csv"), "--task", "classification", "--classes", "4",
                "--metric", "hscore"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_GE(json::parse(r.out)["hscore"].get<double>(), 0.0);
}

TEST_F(Cli, SweepIsDeterministic) {
    const std::vector<std::string> base{"sweep", "--samples", "40", "--feature-dim", "3", "--r", "0.5,1",
                                        "--seeds", "1,2", "--mean-shift", "1"};
    auto csv_args = base;
    csv_args.insert(csv_args.end(), {"--format", "csv"});
    const auto a = invoke(csv_args);
    const auto b = invoke(csv_args);
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(std::count(a.out.begin(), a.out.end(), '\n'), 5);

    const auto ja = invoke(base);
    const auto jb = invoke(base);
    ASSERT_EQ(ja.code, 0) << ja.err;
    EXPECT_EQ(ja.out, jb.out);
    const auto j = json::parse(ja.out);
    EXPECT_EQ(j["rows"].size(), 4u);
    EXPECT_TRUE(j["config"].contains("pipeline"));

    const auto scores = write("sweep.csv", a.out);
    const auto c = invoke({"consistency", "--scores", scores});
    ASSERT_EQ(c.code, 0) << c.err;
    EXPECT_EQ(json::parse(c.out)["confusion"]["total"], 4);
}

}  // namespace
}  // namespace wdje::cli
