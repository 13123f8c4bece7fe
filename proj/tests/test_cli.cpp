#include <gtest/gtest.h>

#include <json.hpp>

#include "subprocess.hpp"
#include "support.hpp"

using namespace testing_support;
using nlohmann::json;

namespace {

const std::string kCli = MCE_CLI_PATH;

RunResult cli(const std::string& args) { return run_command(kCli + " " + args); }

class Cli : public ::testing::Test {
protected:
    std::string dir = scratch_dir("cli_test");
    std::string data = dir + "/data.csv";

    void SetUp() override {
        ASSERT_EQ(cli("gen --theta 0.5,-1,0.2 --n-samples 300 --epsilon 0.05 --outlier-frac 0.1 --seed 1 --out " + data)
                      .exit_code,
                  0);
    }
};

}  // namespace

TEST_F(Cli, GenWritesCsvAndSidecar) {
    const auto csv = read_file(data);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "y,x1,x2,x3");
    const auto meta = json::parse(read_file(data + ".meta.json"));
    EXPECT_EQ(meta["theta_true"], json({0.5, -1.0, 0.2}));
    EXPECT_EQ(meta["seed"], 1);
    const auto again = cli("gen --theta 0.5,-1,0.2 --n-samples 300 --epsilon 0.05 --outlier-frac 0.1 --seed 1");
    EXPECT_EQ(again.out, csv);
}

TEST_F(Cli, FitReportsIndependentlyCheckableError) {
    const auto r = cli("fit --input " + data + " --method mce --p 2 --gamma 0.25 --seed 1");
    ASSERT_EQ(r.exit_code, 0);
    const auto j = json::parse(r.out);
    for (const char* key : {"theta", "objective", "iterations", "converged", "err"}) EXPECT_TRUE(j.contains(key)) << key;
    const auto theta = j["theta"].get<std::vector<double>>();
    const std::vector<double> truth{0.5, -1.0, 0.2};
    double s = 0;
    for (std::size_t i = 0; i < 3; ++i) s += (theta[i] - truth[i]) * (theta[i] - truth[i]);
    EXPECT_NEAR(j["err"].get<double>(), std::sqrt(s), 1e-15);
    EXPECT_LT(j["err"].get<double>(), 0.1);

    const auto ds = mce::read_dataset(data);
    mce::EstimatorConfig cfg;
    cfg.seed = 1;
    const auto direct = mce::mce_fit(ds, mce::LossSpec(2, 0.25), cfg);
    EXPECT_EQ(theta, direct.theta);
}

TEST_F(Cli, FitMethods) {
    for (const char* m : {"ols", "lad", "mce"}) EXPECT_EQ(cli("fit --input " + data + " --method " + m).exit_code, 0);
    EXPECT_EQ(cli("fit --input " + data + " --method foo").exit_code, 1);
    EXPECT_EQ(cli("fit --input " + data + " --method mce --p 1.5").exit_code, 1);
}

TEST_F(Cli, RichnessReport) {
    const auto r = cli("richness --input " + data + " --alpha 0.5 --heuristic-sigma --rho-samples 500");
    ASSERT_EQ(r.exit_code, 0);
    const auto j = json::parse(r.out);
    EXPECT_EQ(j["alpha"], 0.5);
    EXPECT_FALSE(j["certified"].get<bool>());
    EXPECT_TRUE(j["v_alpha"].is_number());
    const auto cert = json::parse(cli("richness --input " + data + " --alpha 0.5 --certified --rho-samples 500").out);
    EXPECT_TRUE(cert["certified"].get<bool>());
    const auto grid = json::parse(cli("richness --input " + data + " --alpha-grid 0.1,0.3 --rho-samples 100").out);
    EXPECT_EQ(grid.size(), 2u);
    EXPECT_EQ(cli("richness --input " + data + " --certified --heuristic-sigma").exit_code, 1);
}

TEST_F(Cli, BoundArithmeticAndDataMode) {
    const auto r = cli("bound --p 1 --gamma 0.5 --epsilon 0.05 --inlier-frac 0.9 --rho 0.8 --alpha 0.6 --rx 1.0");
    ASSERT_EQ(r.exit_code, 0);
    const auto j = json::parse(r.out);
    const auto ref = mce::bound_mce_l(0.5, 0.05, 0.9, 0.8, 0.6, 1.0);
    EXPECT_EQ(j["bound"].get<double>(), *ref.bound);
    EXPECT_EQ(j["mu"].get<double>(), ref.mu);

    const auto v = json::parse(cli("bound --p 2 --gamma 1 --epsilon 0.5 --inlier-frac 0.5 --rho 0.5").out);
    EXPECT_FALSE(v["condition_ok"].get<bool>());
    EXPECT_TRUE(v["bound"].is_null());

    const auto g = json::parse(cli("bound --p 1 --gamma 4 --epsilon 0.05 --input " + data +
                                   " --rho-mode midpoint --alpha-grid 0.3,0.45,0.6 --rx 1")
                                   .out);
    EXPECT_NEAR(g["inlier_frac"].get<double>(), 0.9, 1e-12);
    EXPECT_TRUE(g["condition_ok"].get<bool>());
    EXPECT_EQ(cli("bound --p 1 --gamma 4").exit_code, 1);
}

TEST_F(Cli, McFig3MatchesLibrary) {
    const auto out = dir + "/fig3.csv";
    ASSERT_EQ(cli("mc --figure fig3 --out " + out).exit_code, 0);
    mce::ExperimentSpec spec;
    spec.figure = mce::Figure::fig3;
    EXPECT_EQ(read_file(out), mce::run_fig3(spec).to_string());
}

TEST_F(Cli, ConfigFileFlagsWin) {
    const auto cfg = dir + "/cfg.json";
    mce::write_text_file(cfg, R"({"figure": "fig1", "trials": 2, "grid": [0.0, 0.3], "seed": 5})");
    const auto a = cli("mc --config " + cfg);
    ASSERT_EQ(a.exit_code, 0);
    EXPECT_EQ(a.out, cli("mc --figure fig1 --trials 2 --grid 0,0.3 --seed 5").out);
    const auto b = cli("mc --config " + cfg + " --seed 6");
    EXPECT_EQ(b.out, cli("mc --figure fig1 --trials 2 --grid 0,0.3 --seed 6").out);
    EXPECT_NE(a.out, b.out);
    mce::write_text_file(cfg, R"({"figure": "fig3", "bogus-key": 1})");
    EXPECT_EQ(cli("mc --config " + cfg).exit_code, 1);
}

TEST_F(Cli, ExitCodes) {
    EXPECT_EQ(cli("").exit_code, 1);
    EXPECT_EQ(cli("nonsense").exit_code, 1);
    EXPECT_EQ(cli("--help").exit_code, 0);
    EXPECT_EQ(cli("mc").exit_code, 1);
    EXPECT_EQ(cli("mc --figure fig9").exit_code, 1);
    EXPECT_EQ(cli("mc --figure fig1 --trials 0").exit_code, 1);
    EXPECT_EQ(cli("fit --input " + dir + "/does_not_exist.csv").exit_code, 2);
    const auto bad = dir + "/bad.csv";
    mce::write_text_file(bad, "y,x1\n1,oops\n");
    EXPECT_EQ(cli("fit --input " + bad).exit_code, 2);
    const auto singular = dir + "/singular.csv";
    mce::write_text_file(singular, "y,x1,x2\n1,1,2\n2,2,4\n3,3,6\n");
    EXPECT_EQ(cli("fit --input " + singular + " --method ols").exit_code, 2);
}

TEST_F(Cli, ThreadCountDoesNotChangeOutput) {
    const std::string base = "mc --figure fig4 --trials 3 --grid 200,400 --seed 9";
    const auto one = cli(base + " --threads 1");
    ASSERT_EQ(one.exit_code, 0);
    EXPECT_EQ(cli(base + " --threads 2").out, one.out);
    EXPECT_EQ(cli(base + " --threads 8").out, one.out);
}
