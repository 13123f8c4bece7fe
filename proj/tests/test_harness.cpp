#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <sstream>

#include "support.hpp"

using namespace mce;

namespace {

std::vector<std::vector<double>> numeric_rows(const CsvTable& t) {
    std::vector<std::vector<double>> out;
    for (const auto& r : t.rows) {
        std::vector<double> row;
        for (const auto& c : r) row.push_back(c.empty() ? std::nan("") : std::stod(c));
        out.push_back(row);
    }
    return out;
}

std::size_t column(const CsvTable& t, const std::string& name) {
    for (std::size_t i = 0; i < t.header.size(); ++i)
        if (t.header[i] == name) return i;
    ADD_FAILURE() << "missing column " << name;
    return 0;
}

}  // namespace

TEST(ParallelFor, VisitsEveryIndexOnce) {
    for (int threads : {1, 2, 8}) {
        std::vector<std::atomic<int>> hits(1000);
        parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i]++; });
        for (auto& h : hits) EXPECT_EQ(h.load(), 1);
    }
    parallel_for(0, 4, [](std::size_t) { FAIL(); });
}

TEST(ParallelFor, RethrowsLowestFailingIndex) {
    for (int threads : {1, 3}) {
        try {
            parallel_for(100, threads, [](std::size_t i) {
                if (i == 17 || i == 60) throw std::runtime_error(std::to_string(i));
            });
            FAIL();
        } catch (const std::runtime_error& e) {
            EXPECT_STREQ(e.what(), "17");
        }
    }
}

TEST(Summaries, QuantilesAndMean) {
    EXPECT_EQ(quantile({3, 1, 2}, 0.5), 2.0);
    EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 0.1), 1.3);
    EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 0.9), 3.7);
    EXPECT_EQ(quantile({5}, 0.9), 5.0);
    EXPECT_TRUE(std::isnan(quantile({}, 0.5)));
    std::mt19937_64 eng(1);
    std::exponential_distribution<double> ex(1.0);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> v(1 + rep);
        for (double& x : v) x = ex(eng);
        const auto s = summarize(v);
        EXPECT_GE(s.mean, *std::min_element(v.begin(), v.end()));
        EXPECT_LE(s.mean, *std::max_element(v.begin(), v.end()));
        EXPECT_LE(s.q10, s.q50);
        EXPECT_LE(s.q50, s.q90);
    }
}

TEST(Fig1, SchemaAndNoiseFreeRow) {
    ExperimentSpec spec;
    spec.figure = Figure::fig1;
    spec.trials = 10;
    spec.grid = {0.0, 0.4, 0.8, 1.2, 1.6};
    const auto t = run_fig1(spec);
    ASSERT_GE(t.header.size(), 5u);
    EXPECT_EQ(std::vector<std::string>(t.header.begin(), t.header.begin() + 5),
              (std::vector<std::string>{"epsilon", "snr_db", "err_mce_l", "err_mce_g", "err_lad"}));
    EXPECT_EQ(t.rows.size(), 5u);
    const auto rows = numeric_rows(t);
    EXPECT_TRUE(std::isinf(rows[0][1]));
    for (std::size_t c = 2; c <= 4; ++c) EXPECT_LT(rows[0][c], 0.05);
}

TEST(Fig1, ErrorsGrowWithNoise) {
    ExperimentSpec spec;
    spec.figure = Figure::fig1;
    spec.trials = 30;
    spec.grid = {0.0, 0.4, 0.8, 1.2, 1.6};
    const auto t = run_fig1(spec);
    const auto rows = numeric_rows(t);
    // mean error nondecreasing up to two standard errors, using the q10-q90
    // spread as a crude dispersion proxy
    const std::vector<std::pair<std::string, std::string>> cols{
        {"err_mce_l", "q90_mce_l"}, {"err_mce_g", "q90_mce_g"}, {"err_lad", "q90_lad"}};
    for (const auto& [mean_col, q90_col] : cols) {
        const auto m = column(t, mean_col), q = column(t, q90_col);
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const double se = rows[i][q] / std::sqrt(spec.trials);
            EXPECT_GE(rows[i][m], rows[i - 1][m] - 2 * se) << mean_col << " row " << i;
        }
    }
}

TEST(Fig1, DeterministicAcrossThreads) {
    ExperimentSpec spec;
    spec.figure = Figure::fig1;
    spec.trials = 3;
    spec.grid = {0.0, 0.5};
    const auto a = run_fig1(spec).to_string();
    spec.threads = 4;
    EXPECT_EQ(run_fig1(spec).to_string(), a);
    spec.trials = 1;
    EXPECT_EQ(run_fig1(spec).to_string(), run_fig1(spec).to_string());
}

TEST(Fig2, SandwichOnTwoDimensionalDesign) {
    ExperimentSpec spec;
    spec.figure = Figure::fig2;
    spec.sigma = SigmaSource::certified_lower;
    const auto t = run_fig2(spec);
    EXPECT_EQ(std::vector<std::string>(t.header.begin(), t.header.begin() + 6),
              (std::vector<std::string>{"alpha", "v_alpha", "rho_upper", "rho_exact", "sigma_lower", "sigma_heuristic"}));
    const auto rows = numeric_rows(t);
    EXPECT_EQ(rows.front()[2], 1.0);  // alpha near 0
    for (const auto& r : rows) {
        if (!std::isnan(r[1])) {
            EXPECT_LE(r[1], r[3]);
        }
        EXPECT_LE(r[3], r[2]);
    }
}

TEST(Fig2, GapWiderInThreeDimensions) {
    ExperimentSpec spec;
    spec.figure = Figure::fig2;
    spec.grid = {0.1, 0.2, 0.3, 0.4, 0.5};
    const auto gap = [&](std::size_t dim) {
        spec.dim = dim;
        double s = 0;
        const auto rows = numeric_rows(run_fig2(spec));
        for (const auto& r : rows) s += r[2] - r[1];
        return s / rows.size();
    };
    EXPECT_GT(gap(3), gap(2));
}

TEST(Fig2, EmptyCellAboveSigma) {
    ExperimentSpec spec;
    spec.figure = Figure::fig2;
    spec.sigma = SigmaSource::certified_lower;
    spec.grid = {0.99};
    const auto t = run_fig2(spec);
    EXPECT_EQ(t.rows[0][1], "");
}

TEST(Fig3, LinearBoundsAndOrdering) {
    ExperimentSpec spec;
    spec.figure = Figure::fig3;
    const auto t = run_fig3(spec);
    EXPECT_EQ(t.header, (std::vector<std::string>{"epsilon", "bound_mce_l", "bound_mce_g"}));
    EXPECT_EQ(t.rows.size(), 16u);
    for (const auto& r : numeric_rows(t)) {
        EXPECT_NEAR(r[1] / r[0], 10.387292575064571, 1e-10);
        EXPECT_NEAR(r[2] / r[0], 5.8842423967362671, 1e-10);
        EXPECT_GT(r[1], r[2]);
    }
}

TEST(Fig4, BoundsAboveErrorsAndDeterministic) {
    ExperimentSpec spec;
    spec.figure = Figure::fig4;
    spec.trials = 4;
    spec.grid = {300, 600};
    const auto t = run_fig4(spec);
    EXPECT_EQ(std::vector<std::string>(t.header.begin(), t.header.begin() + 5),
              (std::vector<std::string>{"N", "err_mce_l", "err_mce_g", "bound_mce_l", "bound_mce_g"}));
    for (const auto& r : numeric_rows(t)) {
        EXPECT_GT(r[3], r[1]);
        EXPECT_GT(r[4], r[2]);
        EXPECT_NEAR(r[5], std::log10(r[1]), 1e-12);
    }
    spec.threads = 3;
    EXPECT_EQ(run_fig4(spec).to_string(), t.to_string());
}

TEST(Fig4, TrialBoundsUseMeasuredInlierFraction) {
    ExperimentSpec spec;
    spec.figure = Figure::fig4;
    const auto tr = fig4_trial(spec, 500, 123);
    EXPECT_NEAR(tr.inlier_frac, 0.9, 1e-12);
    EXPECT_TRUE(tr.ascent_ok);
    ASSERT_TRUE(tr.bound_mce_l.has_value());
    const auto expect = bound_mce_l(0.2 / 0.05, 0.05, tr.inlier_frac, tr.rho, 0.6, 1.0);
    EXPECT_EQ(*tr.bound_mce_l, *expect.bound);
}

TEST(Experiment, Validation) {
    ExperimentSpec spec;
    spec.trials = 0;
    EXPECT_THROW(run_experiment(spec), InvalidConfig);
    spec.trials = 1;
    spec.figure = Figure::fig2;
    spec.dim = 4;
    EXPECT_THROW(run_experiment(spec), InvalidConfig);
    EXPECT_EQ(parse_figure("fig3"), Figure::fig3);
    EXPECT_FALSE(parse_figure("fig5").has_value());
}
