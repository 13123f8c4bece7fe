#pragma once

#include <cmath>
#include <span>

#include "mce/dataset.hpp"

namespace mce {

/// The loss l_p(a) = |a|^p and its correntropy kernel exp(-gamma l_p(y - yhat)).
/// For p >= 1 the loss satisfies the relaxed triangle inequality
/// l(a - b) >= alpha_ell l(a) - l(b) with alpha_ell = 2^(1-p).
struct LossSpec {
    double p = 2.0;
    double gamma = 1.0;

    LossSpec() = default;
    LossSpec(double p_, double gamma_) : p(p_), gamma(gamma_) { validate(); }

    void validate() const {
        if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidConfig("loss exponent p must be >= 1");
        if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidConfig("gamma must be > 0");
    }

    double alpha_ell() const noexcept { return std::exp2(1.0 - p); }
};

inline double loss(const LossSpec& spec, double a) noexcept {
    const double m = std::fabs(a);
    if (spec.p == 1.0) return m;
    if (spec.p == 2.0) return m * m;
    return std::pow(m, spec.p);
}

inline double loss_inverse(const LossSpec& spec, double v) {
    if (!(v >= 0.0)) throw DomainError("loss_inverse: argument must be nonnegative");
    if (spec.p == 1.0) return v;
    if (spec.p == 2.0) return std::sqrt(v);
    return std::pow(v, 1.0 / spec.p);
}

/// exp(-gamma l(y - yhat)). Underflows to exactly 0 for huge residuals,
/// which is what removes gross outliers from the fit.
inline double kernel(const LossSpec& spec, double y, double yhat) noexcept {
    return std::exp(-spec.gamma * loss(spec, y - yhat));
}

/// (1/N) sum_k exp(-gamma l(y_k - x_k^T theta)).
inline double sample_correntropy(const LossSpec& spec, const RegressionDataset& ds,
                                 std::span<const double> theta) {
    if (ds.size() == 0) throw EmptyDataset();
    double s = 0.0;
    for (std::size_t t = 0; t < ds.size(); ++t) s += kernel(spec, ds.y[t], ds.predict(t, theta));
    return s / static_cast<double>(ds.size());
}

/// Gradient of sample_correntropy with respect to theta, with r = y - x^T theta:
///   (gamma p / N) sum_k exp(-gamma |r_k|^p) |r_k|^(p-1) sign(r_k) x_k.
/// For p = 1 this is the subgradient element obtained with sign(0) = 0.
inline Vector correntropy_gradient(const LossSpec& spec, const RegressionDataset& ds,
                                   std::span<const double> theta) {
    if (ds.size() == 0) throw EmptyDataset();
    Vector g(ds.dim(), 0.0);
    for (std::size_t t = 0; t < ds.size(); ++t) {
        const double r = ds.residual(t, theta);
        if (r == 0.0) continue;
        const double m = std::fabs(r);
        const double slope = spec.p == 1.0 ? 1.0 : std::pow(m, spec.p - 1.0);
        const double c = std::exp(-spec.gamma * loss(spec, r)) * slope * std::copysign(1.0, r);
        const auto xt = ds.x.row(t);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += c * xt[i];
    }
    const double scale = spec.gamma * spec.p / static_cast<double>(ds.size());
    for (double& gi : g) gi *= scale;
    return g;
}

}  // namespace mce
