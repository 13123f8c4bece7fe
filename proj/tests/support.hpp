#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mce/mce.hpp"

namespace testing_support {

inline mce::RegressionDataset make_dataset(const std::vector<std::vector<double>>& rows,
                                           const std::vector<double>& y) {
    mce::RegressionDataset ds;
    ds.x = mce::Matrix(rows.size(), rows.front().size());
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t i = 0; i < rows[t].size(); ++i) ds.x(t, i) = rows[t][i];
    ds.y = y;
    return ds;
}

inline mce::Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& eng) {
    std::normal_distribution<double> g(0.0, 1.0);
    mce::Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = g(eng);
    return m;
}

// Dataset with Gaussian regressors, y = X theta + noise.
inline mce::RegressionDataset random_dataset(std::size_t count, const std::vector<double>& theta,
                                             double noise_sd, std::mt19937_64& eng) {
    mce::RegressionDataset ds;
    ds.x = gaussian_matrix(count, theta.size(), eng);
    std::normal_distribution<double> g(0.0, noise_sd);
    ds.y.resize(count);
    for (std::size_t t = 0; t < count; ++t) ds.y[t] = ds.predict(t, theta) + (noise_sd > 0 ? g(eng) : 0.0);
    ds.theta_true = theta;
    return ds;
}

// N x 2 matrix with unit rows at the given angles (radians).
inline mce::Matrix angle_design(const std::vector<double>& angles) {
    mce::Matrix m(angles.size(), 2);
    for (std::size_t t = 0; t < angles.size(); ++t) {
        m(t, 0) = std::cos(angles[t]);
        m(t, 1) = std::sin(angles[t]);
    }
    return m;
}

}  // namespace testing_support
