#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "recband");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = recband::cli::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("recband_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Cli, HelpExitsZero) {
    const auto r = run({"--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("simulate"), std::string::npos);
}

TEST(Cli, NoSubcommandIsUsageError) { EXPECT_NE(run({}).code, 0); }

TEST(Cli, Version) {
    const auto r = run({"--version"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("0.1.0"), std::string::npos);
}

TEST(Cli, MissingConfigNamesPath) {
    const auto r = run({"simulate", "/nonexistent/cfg.json"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("/nonexistent/cfg.json"), std::string::npos);
}

TEST(Cli, MalformedConfigIsConfigError) {
    const auto path = scratch("bad.json");
    std::ofstream(path) << R"({"env": {"fixture": "logistic"}, "policy": {"kind": "nope"}})";
    const auto r = run({"simulate", path.string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("nope"), std::string::npos);
}

TEST(Cli, Table1HeaderAndRows) {
    const auto r = run({"table1", "--setting", "logistic", "--reps", "2", "--horizon", "30", "-j", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "policy,mean_reward,ci_lo,ci_hi");
    EXPECT_NE(r.out.find("\n1RGP-UCB,"), std::string::npos);
    EXPECT_NE(r.out.find("\nUCB-Z,"), std::string::npos);
}

TEST(Cli, UnknownSettingRejected) {
    EXPECT_EQ(run({"table1", "--setting", "cosine", "--reps", "1"}).code, 2);
}

TEST(Cli, SimulateWritesCsvRepsAndSidecar) {
    const auto cfg = scratch("sim.json");
    std::ofstream(cfg) << R"({"env": {"fixture": "logistic", "z_max": 30, "noise_sd": 0.1},
        "policy": {"kind": "rgp_ts", "d": 2, "kernel": {"family": "se", "lengthscale": 5}},
        "run": {"horizon": 20, "replications": 2, "seed": 9}})";
    const auto out = scratch("sim_out.csv");
    const auto r = run({"simulate", cfg.string(), "--out", out.string(), "-j", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto csv = slurp(out);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "metric,mean,ci_lo,ci_hi");
    EXPECT_TRUE(fs::exists(scratch("sim_out.reps.csv")));
    const auto meta = nlohmann::json::parse(slurp(out.string() + ".json"));
    EXPECT_EQ(meta.at("command"), "simulate");
    EXPECT_EQ(meta.at("config").at("run").at("horizon"), 20);
    EXPECT_TRUE(meta.contains("confidence_interval"));
}

TEST(Cli, PosteriorDumpRejectsCheckpointPastHorizon) {
    EXPECT_EQ(run({"posterior-dump", "--t", "5000"}).code, 2);
}

TEST(Cli, PosteriorDumpRows) {
    const auto r = run({"posterior-dump", "--t", "5"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "t,arm,z,mean,sd,true_f,n_obs");
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1 + 10 * 31);
}

TEST(Cli, Figure3Rows) {
    const auto r = run({"figure3", "--k", "3", "--d", "2", "--budgets", "2,50", "--reps", "1", "--horizon", "10"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 4);
    EXPECT_NE(r.out.find("\nexhaustive,"), std::string::npos);
}

TEST(Cli, SampleConfigsLoad) {
    const fs::path dir = fs::path(RECBAND_TEST_DIR).parent_path() / "configs";
    int seen = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".json") continue;
        EXPECT_NO_THROW((void)recband::load_experiment(entry.path().string())) << entry.path();
        ++seen;
    }
    EXPECT_GE(seen, 4);
}
