#pragma once

// Stability condition and parametric error bound for the maximum correntropy
// estimator with an l_p loss, together with the closed forms for the
// Laplacian (p = 1) and Gaussian (p = 2) kernels.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>

#include "mce/kernels.hpp"

namespace mce {

struct BoundInputs {
    LossSpec spec;
    double epsilon = 0.0;      // dense-noise level
    double inlier_frac = 1.0;  // |{t : |v_t| <= epsilon}| / N
    double rho = 1.0;          // value used for rho_alpha(X)
    double alpha = 1.0;
    double r_x = 1.0;

    void validate() const {
        spec.validate();
        if (!(epsilon >= 0.0)) throw DomainError("epsilon must be >= 0");
        if (!(inlier_frac >= 0.0 && inlier_frac <= 1.0)) throw DomainError("inlier_frac must lie in [0, 1]");
        if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("rho must lie in [0, 1]");
        if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
        if (!(r_x > 0.0)) throw DomainError("r_x must be > 0");
    }
};

struct BoundReport {
    bool condition_ok = false;
    double mu = 0.0;
    std::optional<double> bound;  // empty: condition violated
};

/// Stability margin as a function of z = gamma l(epsilon):
///   (1 + e^-z) / (f + rho - 1) * [rho / (1 + e^-z) + e^-z f - 1]
/// when the bracket is positive, 0 otherwise. Clamped to [0, 1].
inline double mu_general(double z, double inlier_frac, double rho) {
    const double e = std::exp(-z);
    // grouped so that z = 0, f = 1 gives rho/2 and rho without cancellation
    const double margin = rho / (1.0 + e) + (e * inlier_frac - 1.0);
    if (!(margin > 0.0)) return 0.0;
    const double mu = (1.0 + e) / (rho + (inlier_frac - 1.0)) * margin;
    return std::clamp(mu, 0.0, 1.0);
}

inline bool stability_condition(const BoundInputs& in) {
    in.validate();
    const double e = std::exp(-in.spec.gamma * loss(in.spec, in.epsilon));
    return in.rho / (1.0 + e) + e * in.inlier_frac > 1.0;
}

/// ||theta* - theta|| <= (1/(alpha r_x)) [ (2^(p-1)/gamma) ln(1/mu) ]^(1/p).
inline BoundReport error_bound(const BoundInputs& in) {
    in.validate();
    BoundReport rep;
    rep.mu = mu_general(in.spec.gamma * loss(in.spec, in.epsilon), in.inlier_frac, in.rho);
    rep.condition_ok = rep.mu > 0.0;
    if (!rep.condition_ok) return rep;
    const double level = std::log(1.0 / rep.mu) / (in.spec.gamma * in.spec.alpha_ell());
    rep.bound = loss_inverse(in.spec, level) / (in.alpha * in.r_x);
    return rep;
}

/// Laplacian kernel: (1/(gamma1 alpha r_x)) ln(1/mu(gamma1 epsilon)).
inline BoundReport bound_mce_l(double gamma1, double epsilon, double inlier_frac, double rho,
                               double alpha, double r_x) {
    BoundInputs{LossSpec(1.0, gamma1), epsilon, inlier_frac, rho, alpha, r_x}.validate();
    BoundReport rep;
    rep.mu = mu_general(gamma1 * epsilon, inlier_frac, rho);
    rep.condition_ok = rep.mu > 0.0;
    if (rep.condition_ok) rep.bound = std::log(1.0 / rep.mu) / (gamma1 * alpha * r_x);
    return rep;
}

/// Gaussian kernel: (1/(alpha r_x)) sqrt((2/gamma2) ln(1/mu(gamma2 epsilon^2))).
inline BoundReport bound_mce_g(double gamma2, double epsilon, double inlier_frac, double rho,
                               double alpha, double r_x) {
    BoundInputs{LossSpec(2.0, gamma2), epsilon, inlier_frac, rho, alpha, r_x}.validate();
    BoundReport rep;
    rep.mu = mu_general(gamma2 * epsilon * epsilon, inlier_frac, rho);
    rep.condition_ok = rep.mu > 0.0;
    if (rep.condition_ok) rep.bound = std::sqrt(2.0 / gamma2 * std::log(1.0 / rep.mu)) / (alpha * r_x);
    return rep;
}

struct AlphaChoice {
    double alpha = 0.0;
    std::size_t index = 0;
    BoundReport report;
};

/// Grid search for the alpha giving the smallest finite bound. `rho_at(i)`
/// returns the rho value for alphas[i], or nullopt when none is available
/// there (e.g. alpha above the certified sigma). Ties keep the lower index.
/// Without any finite bound the first grid point is returned with
/// condition_ok = false.
template <class RhoAt>
AlphaChoice optimize_alpha(const LossSpec& spec, double epsilon, double inlier_frac, double r_x,
                           std::span<const double> alphas, RhoAt&& rho_at) {
    if (alphas.empty()) throw EmptyGrid();
    std::optional<AlphaChoice> best;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        const std::optional<double> rho = rho_at(i);
        if (!rho) continue;
        const auto rep = error_bound({spec, epsilon, inlier_frac, *rho, alphas[i], r_x});
        if (!rep.bound) continue;
        if (!best || *rep.bound < *best->report.bound) best = AlphaChoice{alphas[i], i, rep};
    }
    if (best) return *best;
    return AlphaChoice{alphas.front(), 0, BoundReport{}};
}

inline AlphaChoice optimize_alpha(const LossSpec& spec, double epsilon, double inlier_frac, double r_x,
                                  std::span<const double> alphas, double rho) {
    return optimize_alpha(spec, epsilon, inlier_frac, r_x, alphas,
                          [rho](std::size_t) { return std::optional<double>(rho); });
}

}  // namespace mce
