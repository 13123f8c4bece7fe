#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace mce;

namespace {

SymMatrix from_rows(const std::vector<std::vector<double>>& r) {
    SymMatrix a(r.size());
    for (std::size_t i = 0; i < r.size(); ++i)
        for (std::size_t j = i; j < r.size(); ++j) a.set(i, j, r[i][j]);
    return a;
}

SymMatrix random_spd(std::size_t n, std::mt19937_64& eng) {
    const auto m = testing_support::gaussian_matrix(n + 2, n, eng);
    SymMatrix a(n);
    for (std::size_t t = 0; t < m.rows(); ++t) a.add_outer(m.row(t), 1.0);
    for (std::size_t i = 0; i < n; ++i) a.add(i, i, 1e-3);
    return a;
}

}  // namespace

TEST(SolveSym, IdentityReturnsRhs) {
    const Vector b{3.0, -1.0};
    EXPECT_EQ(solve_sym(SymMatrix::identity(2), b), b);
}

TEST(SolveSym, Diagonal) {
    const Vector d{2.0, 4.0};
    const auto x = solve_sym(SymMatrix::diagonal(d), Vector{2.0, 4.0});
    EXPECT_DOUBLE_EQ(x[0], 1.0);
    EXPECT_DOUBLE_EQ(x[1], 1.0);
}

TEST(SolveSym, TwoByTwoCoupled) {
    const auto x = solve_sym(from_rows({{2, 1}, {1, 2}}), Vector{3.0, 3.0});
    EXPECT_NEAR(x[0], 1.0, 1e-15);
    EXPECT_NEAR(x[1], 1.0, 1e-15);
}

TEST(SolveSym, RejectsIndefinite) {
    EXPECT_THROW(solve_sym(from_rows({{1, 2}, {2, 1}}), Vector{1.0, 1.0}), SingularMatrix);
    EXPECT_THROW(solve_sym(from_rows({{1, 1}, {1, 1}}), Vector{1.0, 1.0}), SingularMatrix);
    EXPECT_THROW(solve_sym(SymMatrix(2), Vector{1.0, 1.0}), SingularMatrix);
}

TEST(SolveSym, ResidualOnRandomSpd) {
    std::mt19937_64 eng(11);
    std::normal_distribution<double> g;
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 1 + rep % 12;
        const auto a = random_spd(n, eng);
        Vector b(n);
        for (double& v : b) v = g(eng);
        const auto x = solve_sym(a, b);
        const auto ax = a.multiply(x);
        EXPECT_LE(norm2(subtract(ax, b)), 1e-10 * (a.frobenius_norm() * norm2(x) + norm2(b)));
    }
}

TEST(EigExtremes, Examples) {
    const auto i3 = eig_extremes(SymMatrix::identity(3));
    EXPECT_DOUBLE_EQ(i3.lambda_min, 1.0);
    EXPECT_DOUBLE_EQ(i3.lambda_max, 1.0);
    const Vector d{0.5, 2.0};
    const auto dg = eig_extremes(SymMatrix::diagonal(d));
    EXPECT_DOUBLE_EQ(dg.lambda_min, 0.5);
    EXPECT_DOUBLE_EQ(dg.lambda_max, 2.0);
    const auto c = eig_extremes(from_rows({{2, 1}, {1, 2}}));
    EXPECT_NEAR(c.lambda_min, 1.0, 1e-14);
    EXPECT_NEAR(c.lambda_max, 3.0, 1e-14);
}

TEST(EigSym, ReconstructsMatrix) {
    std::mt19937_64 eng(5);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 1 + rep % 10;
        const auto a = random_spd(n, eng);
        const auto e = eig_sym(a);
        for (std::size_t i = 1; i < n; ++i) EXPECT_LE(e.values[i - 1], e.values[i]);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < n; ++k) s += e.vectors(i, k) * e.values[k] * e.vectors(j, k);
                EXPECT_NEAR(s, a(i, j), 1e-11 * a.frobenius_norm());
            }
    }
}

// Characteristic polynomial of a 2x2 as an independent route.
TEST(EigExtremes, MatchesClosedForm2x2) {
    std::mt19937_64 eng(9);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int rep = 0; rep < 500; ++rep) {
        const double a = u(eng), b = u(eng), c = u(eng);
        const double mid = 0.5 * (a + c);
        const double rad = std::hypot(0.5 * (a - c), b);
        const auto e = eig_extremes(from_rows({{a, b}, {b, c}}));
        EXPECT_NEAR(e.lambda_min, mid - rad, 1e-12 * (std::fabs(mid) + rad));
        EXPECT_NEAR(e.lambda_max, mid + rad, 1e-12 * (std::fabs(mid) + rad));
    }
}

TEST(EigExtremes, RayleighSandwichAndTrace) {
    std::mt19937_64 eng(3);
    std::normal_distribution<double> g;
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 2 + rep % 8;
        auto a = random_spd(n, eng);
        a.add(0, n - 1, -3.0);  // make it indefinite sometimes
        const auto ex = eig_extremes(a);
        const double slack = 1e-12 * a.frobenius_norm();
        for (int k = 0; k < 1000; ++k) {
            Vector eta(n);
            for (double& v : eta) v = g(eng);
            const double q = dot(eta, a.multiply(eta)) / dot(eta, eta);
            EXPECT_GE(q, ex.lambda_min - slack);
            EXPECT_LE(q, ex.lambda_max + slack);
        }
        EXPECT_GE(a.trace(), n * ex.lambda_min - slack);
        EXPECT_LE(a.trace(), n * ex.lambda_max + slack);
    }
}

TEST(SymMatrix, StaysSymmetric) {
    SymMatrix a(3);
    a.set(0, 2, 4.0);
    a.add(2, 1, -1.5);
    a.add_outer(Vector{1.0, 2.0, 3.0}, 0.5);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(a(i, j), a(j, i));
}
