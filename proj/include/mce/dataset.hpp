#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mce/numkit.hpp"

namespace mce {

/// Noise recipe of a synthetic dataset: dense uniform noise on [-epsilon,
/// epsilon], a fixed fraction of Gaussian-amplitude outliers, and optional
/// Gaussian noise on the regressors (errors-in-variables).
struct NoiseModel {
    double epsilon = 0.0;
    double outlier_frac = 0.0;
    double outlier_mean = 50.0;
    double outlier_sd = 10.0;
    double eiv_sd = 0.0;
    bool symmetric_outliers = false;  // extension: random outlier sign

    void validate() const {
        if (!(epsilon >= 0.0)) throw InvalidConfig("epsilon must be >= 0");
        if (!(outlier_frac >= 0.0 && outlier_frac < 1.0))
            throw InvalidConfig("outlier_frac must lie in [0, 1)");
        if (!(outlier_sd >= 0.0)) throw InvalidConfig("outlier_sd must be >= 0");
        if (!(eiv_sd >= 0.0)) throw InvalidConfig("eiv_sd must be >= 0");
    }
};

/// Regression data y_t = x_t^T theta + v_t.
///
/// `x` stores one regressor per row (N x n), i.e. the transpose of the
/// column-per-sample convention; row t is x_t. The optional fields are
/// populated by the generators and by sidecar metadata.
struct RegressionDataset {
    Matrix x;
    Vector y;
    std::optional<Vector> theta_true;
    std::optional<Vector> v;
    std::optional<std::vector<bool>> outlier_mask;
    std::optional<NoiseModel> noise;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return x.rows(); }
    std::size_t dim() const noexcept { return x.cols(); }

    double predict(std::size_t t, std::span<const double> theta) const noexcept {
        return dot(x.row(t), theta);
    }
    double residual(std::size_t t, std::span<const double> theta) const noexcept {
        return y[t] - predict(t, theta);
    }
    Vector residuals(std::span<const double> theta) const {
        Vector r(size());
        for (std::size_t t = 0; t < size(); ++t) r[t] = residual(t, theta);
        return r;
    }

    void validate() const {
        if (size() == 0) throw EmptyDataset();
        if (y.size() != size()) throw DimensionError("y length differs from regressor count");
        if (theta_true && theta_true->size() != dim())
            throw DimensionError("theta_true has wrong dimension");
        if (v && v->size() != size()) throw DimensionError("noise record has wrong length");
    }
};

}  // namespace mce
