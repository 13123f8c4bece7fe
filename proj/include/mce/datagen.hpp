#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>

#include "mce/dataset.hpp"
#include "mce/rng.hpp"

namespace mce {

namespace detail {

// Dense uniform noise plus exactly round(frac * N) outliers at positions drawn
// without replacement. Writes v and the outlier mask.
inline void draw_noise(std::size_t count, const NoiseModel& noise, std::uint64_t seed, Vector& v,
                       std::vector<bool>& mask) {
    v.assign(count, 0.0);
    mask.assign(count, false);

    auto dense = make_engine(seed, "dense-noise");
    if (noise.epsilon > 0.0) {
        std::uniform_real_distribution<double> unif(-noise.epsilon, noise.epsilon);
        for (double& vt : v) vt = unif(dense);
    }

    const auto n_out =
        static_cast<std::size_t>(std::llround(noise.outlier_frac * static_cast<double>(count)));
    if (n_out == 0) return;

    auto pick = make_engine(seed, "outlier-positions");
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // partial Fisher-Yates
    for (std::size_t i = 0; i < n_out; ++i) {
        std::uniform_int_distribution<std::size_t> d(i, count - 1);
        std::swap(idx[i], idx[d(pick)]);
    }

    auto amp = make_engine(seed, "outlier-amplitudes");
    std::normal_distribution<double> gauss(noise.outlier_mean, noise.outlier_sd);
    std::bernoulli_distribution coin(0.5);
    for (std::size_t i = 0; i < n_out; ++i) {
        double f = noise.outlier_sd > 0.0 ? gauss(amp) : noise.outlier_mean;
        if (noise.symmetric_outliers && coin(amp)) f = -f;
        v[idx[i]] += f;
        mask[idx[i]] = true;
    }
}

// y_t = x_t^T theta + v_t, after which v_t is re-derived as y_t - x_t^T theta
// so that the stored record satisfies the model equation bit for bit.
inline void fill_outputs(RegressionDataset& ds) {
    ds.y.resize(ds.size());
    auto& v = *ds.v;
    for (std::size_t t = 0; t < ds.size(); ++t) {
        const double pred = ds.predict(t, *ds.theta_true);
        ds.y[t] = pred + v[t];
        v[t] = ds.y[t] - pred;
    }
}

}  // namespace detail

/// Errors-in-variables: replace x_t by x_t + w_t with w_t ~ N(0, eiv_sd^2 I),
/// keeping y. When theta_true is known the stored noise becomes the
/// effective v_t - w_t^T theta_true, so y = x^T theta + v still holds for the
/// observed regressors.
inline RegressionDataset apply_eiv(const RegressionDataset& ds, double eiv_sd, std::uint64_t seed) {
    if (!(eiv_sd >= 0.0)) throw InvalidConfig("eiv_sd must be >= 0");
    RegressionDataset out = ds;
    if (eiv_sd == 0.0) return out;

    auto eng = make_engine(seed, "eiv");
    std::normal_distribution<double> gauss(0.0, eiv_sd);
    for (std::size_t t = 0; t < out.size(); ++t) {
        for (double& xi : out.x.row(t)) xi += gauss(eng);
        // v_t - w_t^T theta, evaluated as the residual of the observed regressor
        if (out.theta_true && out.v) (*out.v)[t] = out.y[t] - out.predict(t, *out.theta_true);
    }
    if (out.noise) out.noise->eiv_sd = eiv_sd;
    return out;
}

/// FIR data y_t = sum_k theta0[k] u_{t-k} + v_t with u iid N(0, 1). The n-1
/// warm-up inputs preceding the first sample come from the same stream, so
/// every regressor is fully populated.
inline RegressionDataset gen_fir_dataset(std::span<const double> theta0, std::size_t count,
                                         const NoiseModel& noise, std::uint64_t seed) {
    noise.validate();
    const std::size_t n = theta0.size();
    if (n == 0) throw InvalidConfig("theta must be nonempty");
    if (count < n) throw InvalidConfig("need at least as many samples as parameters");

    auto input_eng = make_engine(seed, "fir-input");
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector u(count + n - 1);
    for (double& ut : u) ut = gauss(input_eng);

    RegressionDataset ds;
    ds.x = Matrix(count, n);
    for (std::size_t t = 0; t < count; ++t)
        for (std::size_t k = 0; k < n; ++k) ds.x(t, k) = u[t + n - 1 - k];
    for (std::size_t t = 0; t < count; ++t)
        if (norm2(ds.x.row(t)) == 0.0) throw InvalidConfig("generated a zero regressor");

    ds.theta_true = Vector(theta0.begin(), theta0.end());
    ds.noise = noise;
    ds.seed = seed;
    ds.v.emplace();
    ds.outlier_mask.emplace();
    detail::draw_noise(count, noise, seed, *ds.v, *ds.outlier_mask);
    detail::fill_outputs(ds);

    if (noise.eiv_sd > 0.0) ds = apply_eiv(ds, noise.eiv_sd, seed);
    return ds;
}

/// Static design with iid regressors drawn uniformly on the unit sphere.
inline RegressionDataset gen_unit_sphere_dataset(std::span<const double> theta0, std::size_t count,
                                                 const NoiseModel& noise, std::uint64_t seed) {
    noise.validate();
    const std::size_t n = theta0.size();
    if (n == 0) throw InvalidConfig("theta must be nonempty");
    if (count < n) throw InvalidConfig("need at least as many samples as parameters");

    auto eng = make_engine(seed, "sphere-regressors");
    std::normal_distribution<double> gauss(0.0, 1.0);
    RegressionDataset ds;
    ds.x = Matrix(count, n);
    for (std::size_t t = 0; t < count; ++t) {
        auto row = ds.x.row(t);
        double nn = 0.0;
        while (nn == 0.0) {
            for (double& xi : row) xi = gauss(eng);
            nn = norm2(row);
        }
        for (double& xi : row) xi /= nn;
    }

    ds.theta_true = Vector(theta0.begin(), theta0.end());
    ds.noise = noise;
    ds.seed = seed;
    ds.v.emplace();
    ds.outlier_mask.emplace();
    detail::draw_noise(count, noise, seed, *ds.v, *ds.outlier_mask);
    detail::fill_outputs(ds);
    if (noise.eiv_sd > 0.0) ds = apply_eiv(ds, noise.eiv_sd, seed);
    return ds;
}

struct NoiseStatistics {
    double inlier_frac;         // |{t : |v_t| <= epsilon}| / N
    std::size_t outlier_count;  // N - inliers
};

inline NoiseStatistics noise_statistics(const RegressionDataset& ds, double epsilon) {
    if (!ds.v) throw MissingNoiseRecord();
    if (ds.v->empty()) throw EmptyDataset();
    std::size_t inliers = 0;
    for (double vt : *ds.v)
        if (std::fabs(vt) <= epsilon) ++inliers;
    return {static_cast<double>(inliers) / static_cast<double>(ds.v->size()), ds.v->size() - inliers};
}

/// 10 log10(var(x^T theta) / var(e)) for FIR data with unit-variance input
/// and e ~ U[-eps, eps]: signal variance ||theta||^2, noise variance eps^2/3.
inline double fir_snr_db(std::span<const double> theta, double epsilon) {
    if (epsilon == 0.0) return std::numeric_limits<double>::infinity();
    const double signal = dot(theta, theta);
    return 10.0 * std::log10(signal / (epsilon * epsilon / 3.0));
}

}  // namespace mce
