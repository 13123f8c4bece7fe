#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "mce/dataset.hpp"
#include "mce/kernels.hpp"
#include "mce/rng.hpp"

namespace mce {

enum class InitKind { ols, lad, given };

struct EstimatorConfig {
    int max_iter = 200;
    double tol = 1e-10;
    int multistart = 4;
    std::uint64_t seed = 0;
    InitKind init = InitKind::lad;
    Vector theta0;  // used when init == given

    void validate(std::size_t dim) const {
        if (max_iter < 1) throw InvalidConfig("max_iter must be >= 1");
        if (!(tol > 0.0)) throw InvalidConfig("tol must be > 0");
        if (multistart < 0) throw InvalidConfig("multistart must be >= 0");
        if (init == InitKind::given && theta0.size() != dim)
            throw InvalidConfig("initial theta has wrong dimension");
    }
};

struct FitResult {
    Vector theta;
    double objective = 0.0;  // sample correntropy for MCE, mean loss otherwise
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace;
};

namespace detail {

inline constexpr double kLadSmoothing = 1e-8;
inline constexpr int kLadMaxIter = 500;
inline constexpr double kRidgeScale = 1e-10;

struct WeightedSolve {
    Vector theta;
    bool ridged = false;
};

inline void check_weights(const RegressionDataset& ds, std::span<const double> w) {
    if (w.size() != ds.size()) throw DimensionError("weight vector has wrong length");
    for (double wt : w)
        if (!(wt >= 0.0)) throw DomainError("weights must be nonnegative");
}

// argmin sum_t a_t (y_t - x_t^T theta)^2. With allow_ridge, a Gram matrix that
// fails the definiteness check is regularized by 1e-10 trace/n; a Gram matrix
// with zero trace still throws.
inline WeightedSolve weighted_normal_solve(const RegressionDataset& ds, std::span<const double> a,
                                           bool allow_ridge) {
    const std::size_t n = ds.dim();
    SymMatrix gram(n);
    Vector rhs(n, 0.0);
    for (std::size_t t = 0; t < ds.size(); ++t) {
        if (a[t] == 0.0) continue;
        const auto xt = ds.x.row(t);
        gram.add_outer(xt, a[t]);
        for (std::size_t i = 0; i < n; ++i) rhs[i] += a[t] * ds.y[t] * xt[i];
    }
    try {
        return {solve_sym(gram, rhs), false};
    } catch (const SingularMatrix&) {
        const double tr = gram.trace();
        if (!allow_ridge || !(tr > 0.0)) throw DegenerateWeights();
        const double ridge = kRidgeScale * tr / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) gram.add(i, i, ridge);
        try {
            return {solve_sym(gram, rhs), true};
        } catch (const SingularMatrix&) {
            throw DegenerateWeights();
        }
    }
}

inline double weighted_abs_objective(const RegressionDataset& ds, std::span<const double> w,
                                     std::span<const double> theta) {
    double s = 0.0;
    for (std::size_t t = 0; t < ds.size(); ++t)
        if (w[t] != 0.0) s += w[t] * std::fabs(ds.residual(t, theta));
    return s;
}

// Basic solution through the n positively weighted samples with the smallest
// residuals that are linearly independent; empty when no such set exists.
inline std::optional<Vector> vertex_through_smallest(const RegressionDataset& ds,
                                                     std::span<const double> w,
                                                     std::span<const double> theta) {
    const std::size_t n = ds.dim();
    std::vector<std::size_t> order;
    order.reserve(ds.size());
    for (std::size_t t = 0; t < ds.size(); ++t)
        if (w[t] > 0.0) order.push_back(t);
    const Vector r = ds.residuals(theta);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return std::fabs(r[i]) < std::fabs(r[j]); });

    std::vector<Vector> basis;  // orthonormalized rows picked so far
    SymMatrix gram(n);
    Vector rhs(n, 0.0);
    for (std::size_t t : order) {
        if (basis.size() == n) break;
        const auto xt = ds.x.row(t);
        Vector q(xt.begin(), xt.end());
        const double scale = norm2(q);
        if (scale == 0.0) continue;
        for (const auto& b : basis) {
            const double c = dot(q, b);
            for (std::size_t i = 0; i < n; ++i) q[i] -= c * b[i];
        }
        const double qn = norm2(q);
        if (qn <= 1e-8 * scale) continue;
        for (double& qi : q) qi /= qn;
        basis.push_back(std::move(q));
        gram.add_outer(xt, 1.0);
        for (std::size_t i = 0; i < n; ++i) rhs[i] += ds.y[t] * xt[i];
    }
    if (basis.size() < n) return std::nullopt;
    try {
        return solve_sym(gram, rhs);
    } catch (const SingularMatrix&) {
        return std::nullopt;
    }
}

struct LadRun {
    Vector theta;
    double objective = 0.0;  // sum_t w_t |r_t|
    int iterations = 0;
    bool converged = false;
    bool ridged = false;
    std::vector<double> trace;
};

// IRLS on the smoothed absolute value: weights w_t / max(|r_t|, delta).
// Returns the best iterate seen (the start included), then tries the basic
// solution through the smallest residuals, which is exact when IRLS has
// identified the optimal vertex.
inline LadRun weighted_lad_irls(const RegressionDataset& ds, std::span<const double> w,
                                Vector start, double tol, bool allow_ridge) {
    LadRun run;
    run.theta = std::move(start);
    run.objective = weighted_abs_objective(ds, w, run.theta);
    run.trace.push_back(run.objective);

    Vector theta = run.theta;
    Vector a(ds.size());
    for (int it = 0; it < kLadMaxIter; ++it) {
        for (std::size_t t = 0; t < ds.size(); ++t)
            a[t] = w[t] == 0.0 ? 0.0 : w[t] / std::max(std::fabs(ds.residual(t, theta)), kLadSmoothing);
        auto next = weighted_normal_solve(ds, a, allow_ridge);
        run.ridged = next.ridged;
        const double step = distance2(next.theta, theta);
        theta = std::move(next.theta);
        run.iterations = it + 1;
        const double obj = weighted_abs_objective(ds, w, theta);
        run.trace.push_back(obj);
        if (obj < run.objective) {
            run.objective = obj;
            run.theta = theta;
        }
        if (step <= tol) {
            run.converged = true;
            break;
        }
    }

    if (auto vertex = vertex_through_smallest(ds, w, run.theta)) {
        const double obj = weighted_abs_objective(ds, w, *vertex);
        if (obj <= run.objective) {
            run.objective = obj;
            run.theta = std::move(*vertex);
        }
    }
    return run;
}

inline double mean_abs(const RegressionDataset& ds, std::span<const double> theta) {
    double s = 0.0;
    for (std::size_t t = 0; t < ds.size(); ++t) s += std::fabs(ds.residual(t, theta));
    return s / static_cast<double>(ds.size());
}

}  // namespace detail

/// Ordinary least squares through the normal equations.
inline FitResult ols_fit(const RegressionDataset& ds) {
    ds.validate();
    const Vector ones(ds.size(), 1.0);
    FitResult out;
    try {
        out.theta = detail::weighted_normal_solve(ds, ones, false).theta;
    } catch (const DegenerateWeights&) {
        throw SingularMatrix("regressors do not span the parameter space");
    }
    double s = 0.0;
    for (std::size_t t = 0; t < ds.size(); ++t) {
        const double r = ds.residual(t, out.theta);
        s += r * r;
    }
    out.objective = s / static_cast<double>(ds.size());
    out.iterations = 1;
    out.converged = true;
    out.objective_trace = {out.objective};
    return out;
}

/// argmin sum_t w_t (y_t - x_t^T theta)^2.
inline Vector wls_fit(const RegressionDataset& ds, std::span<const double> w) {
    ds.validate();
    detail::check_weights(ds, w);
    return detail::weighted_normal_solve(ds, w, false).theta;
}

/// Least absolute deviations, started from OLS. `converged` is false when the
/// IRLS step never dropped below cfg.tol; the best iterate is still returned.
inline FitResult lad_fit(const RegressionDataset& ds, const EstimatorConfig& cfg = {}) {
    ds.validate();
    cfg.validate(ds.dim());
    const Vector ones(ds.size(), 1.0);
    auto run = detail::weighted_lad_irls(ds, ones, ols_fit(ds).theta, cfg.tol, false);
    FitResult out;
    out.theta = std::move(run.theta);
    out.objective = detail::mean_abs(ds, out.theta);
    out.iterations = run.iterations;
    out.converged = run.converged;
    for (double v : run.trace) out.objective_trace.push_back(v / static_cast<double>(ds.size()));
    return out;
}

/// argmin sum_t w_t |y_t - x_t^T theta|, started from the weighted LS solution.
inline Vector weighted_lad_fit(const RegressionDataset& ds, std::span<const double> w,
                               const EstimatorConfig& cfg = {}) {
    ds.validate();
    cfg.validate(ds.dim());
    detail::check_weights(ds, w);
    Vector start = detail::weighted_normal_solve(ds, w, false).theta;
    return detail::weighted_lad_irls(ds, w, std::move(start), cfg.tol, false).theta;
}

namespace detail {

// One majorize-minimize run of the correntropy maximization from `start`.
// Each step freezes weights exp(-gamma l(r_t)) at the current iterate and
// minimizes sum_t w_t l(r_t); by convexity of exp this never lowers the
// sample correntropy. A step that would lower it (rounding, inexact inner
// solve) is rejected and ends the run.
inline FitResult mm_run(const RegressionDataset& ds, const LossSpec& spec, Vector start,
                        const EstimatorConfig& cfg) {
    FitResult out;
    out.theta = std::move(start);
    out.objective = sample_correntropy(spec, ds, out.theta);
    out.objective_trace.push_back(out.objective);

    Vector w(ds.size());
    bool ridged_last = false;
    for (int k = 0; k < cfg.max_iter; ++k) {
        for (std::size_t t = 0; t < ds.size(); ++t) w[t] = kernel(spec, ds.y[t], ds.predict(t, out.theta));

        Vector next;
        try {
            if (spec.p == 2.0) {
                auto solved = weighted_normal_solve(ds, w, true);
                next = std::move(solved.theta);
                ridged_last = solved.ridged;
            } else {
                auto run = weighted_lad_irls(ds, w, out.theta, cfg.tol, true);
                next = std::move(run.theta);
                ridged_last = run.ridged;
            }
        } catch (const DegenerateWeights&) {
            // every weight underflowed: the objective is flat here
            out.converged = false;
            return out;
        }

        const double obj = sample_correntropy(spec, ds, next);
        out.iterations = k + 1;
        if (obj < out.objective) {
            out.converged = !ridged_last;
            return out;
        }
        const double step = distance2(next, out.theta);
        out.theta = std::move(next);
        out.objective = obj;
        out.objective_trace.push_back(obj);
        if (step <= cfg.tol) {
            out.converged = !ridged_last;
            return out;
        }
    }
    out.converged = false;
    return out;
}

}  // namespace detail

/// Maximum correntropy estimate for l_1 (reweighted LAD inner steps) or l_2
/// (reweighted least squares inner steps).
///
/// Starts: the configured initial point, then whichever of OLS/LAD it is not,
/// then `cfg.multistart` Gaussian perturbations of the initial point with
/// scale 0.5 ||theta_init|| (0.5 when theta_init = 0). Each start draws from
/// its own substream of cfg.seed. The result with the highest objective wins;
/// ties go to the lowest start index.
inline FitResult mce_fit(const RegressionDataset& ds, const LossSpec& spec,
                         const EstimatorConfig& cfg = {}) {
    ds.validate();
    spec.validate();
    cfg.validate(ds.dim());
    if (spec.p != 1.0 && spec.p != 2.0)
        throw InvalidConfig("mce_fit supports p = 1 and p = 2 only");

    std::vector<Vector> starts;
    switch (cfg.init) {
        case InitKind::ols:
            starts.push_back(ols_fit(ds).theta);
            starts.push_back(lad_fit(ds, cfg).theta);
            break;
        case InitKind::lad:
            starts.push_back(lad_fit(ds, cfg).theta);
            starts.push_back(ols_fit(ds).theta);
            break;
        case InitKind::given:
            starts.push_back(cfg.theta0);
            starts.push_back(lad_fit(ds, cfg).theta);
            starts.push_back(ols_fit(ds).theta);
            break;
    }

    const Vector center = starts.front();
    const double norm = norm2(center);
    const double scale = 0.5 * (norm > 0.0 ? norm : 1.0);
    for (int k = 0; k < cfg.multistart; ++k) {
        auto eng = make_engine(cfg.seed, "mce-multistart", static_cast<std::uint64_t>(k));
        std::normal_distribution<double> gauss(0.0, 1.0);
        Vector s = center;
        for (double& si : s) si += scale * gauss(eng);
        starts.push_back(std::move(s));
    }

    std::optional<FitResult> best;
    for (auto& s : starts) {
        FitResult r = detail::mm_run(ds, spec, std::move(s), cfg);
        if (!best || r.objective > best->objective) best = std::move(r);
    }
    return std::move(*best);
}

}  // namespace mce
