#pragma once

// Informativity of a regressor set. For a level alpha, rho_alpha is the
// smallest fraction of normalized regressors whose absolute correlation with
// a direction eta reaches alpha, minimized over eta. It is computed exactly in
// two dimensions and bracketed by certified bounds in general.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "mce/numkit.hpp"
#include "mce/rng.hpp"

namespace mce {

/// Regressors scaled to unit norm (one per row) plus the smallest original
/// norm r_x.
struct NormalizedRegressors {
    Matrix xtilde;
    double r_x = 0.0;

    std::size_t size() const noexcept { return xtilde.rows(); }
    std::size_t dim() const noexcept { return xtilde.cols(); }
};

inline NormalizedRegressors normalize_columns(const Matrix& x) {
    if (x.rows() == 0) throw EmptyDataset();
    NormalizedRegressors out{x, std::numeric_limits<double>::infinity()};
    for (std::size_t t = 0; t < x.rows(); ++t) {
        const double nt = norm2(x.row(t));
        if (!(nt > 0.0)) throw ZeroRegressor(t);
        out.r_x = std::min(out.r_x, nt);
        for (double& v : out.xtilde.row(t)) v /= nt;
    }
    return out;
}

/// sum_t x_t x_t^T over rows of `x`.
inline SymMatrix gram(const Matrix& x) {
    SymMatrix g(x.cols());
    for (std::size_t t = 0; t < x.rows(); ++t) g.add_outer(x.row(t), 1.0);
    return g;
}

/// Indices t with |x~_t^T eta| >= alpha ||eta||.
inline std::vector<std::size_t> correlation_set(const NormalizedRegressors& nr,
                                                std::span<const double> eta, double alpha) {
    if (eta.size() != nr.dim()) throw DimensionError("direction has wrong dimension");
    const double en = norm2(eta);
    if (!(en > 0.0)) throw ZeroDirection();
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < nr.size(); ++t)
        if (std::fabs(dot(nr.xtilde.row(t), eta)) >= alpha * en) out.push_back(t);
    return out;
}

namespace detail {

inline constexpr double kPi = std::numbers::pi;

// Angle of a 2-vector as a line through the origin, in [0, pi).
inline double projective_angle(std::span<const double> v) {
    double a = std::atan2(v[1], v[0]);
    if (a < 0.0) a += kPi;
    if (a >= kPi) a -= kPi;
    return a;
}

inline double wrap_pi(double a) {
    a = std::fmod(a, kPi);
    if (a < 0.0) a += kPi;
    return a;
}

// Angle between two lines, in [0, pi/2].
inline double projective_distance(double a, double b) {
    const double d = std::fmod(std::fabs(a - b), kPi);
    return std::min(d, kPi - d);
}

inline std::vector<double> sorted_angles(const NormalizedRegressors& nr) {
    std::vector<double> phi(nr.size());
    for (std::size_t t = 0; t < nr.size(); ++t) phi[t] = projective_angle(nr.xtilde.row(t));
    std::sort(phi.begin(), phi.end());
    return phi;
}

}  // namespace detail

/// Exact rho_alpha for two-dimensional regressors.
///
/// With angles on the projective circle, t is counted for direction psi iff
/// the angle between the lines is at most acos(alpha). The count is piecewise
/// constant with breakpoints phi_t +- acos(alpha); it is evaluated at every
/// breakpoint (with a rounding allowance, since the inequality is inclusive
/// there) and at the midpoint of every interval between breakpoints.
inline double rho_exact_2d(const NormalizedRegressors& nr, double alpha) {
    if (nr.dim() != 2) throw DimensionError("rho_exact_2d needs two-dimensional regressors");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in [0, 1]");
    const std::vector<double> phi = detail::sorted_angles(nr);
    const double width = std::acos(alpha);
    const auto count_at = [&](double psi, double allowance) {
        std::size_t c = 0;
        for (double p : phi)
            if (detail::projective_distance(psi, p) <= width + allowance) ++c;
        return c;
    };

    std::vector<double> breaks;
    breaks.reserve(2 * phi.size());
    for (double p : phi) {
        breaks.push_back(detail::wrap_pi(p - width));
        breaks.push_back(detail::wrap_pi(p + width));
    }
    std::sort(breaks.begin(), breaks.end());

    std::size_t best = phi.size();
    for (std::size_t i = 0; i < breaks.size(); ++i) {
        const double next = i + 1 < breaks.size() ? breaks[i + 1] : breaks.front() + detail::kPi;
        best = std::min(best, count_at(breaks[i], 1e-12));
        if (next > breaks[i]) best = std::min(best, count_at(detail::wrap_pi(0.5 * (breaks[i] + next)), 0.0));
    }
    return static_cast<double>(best) / static_cast<double>(nr.size());
}

namespace detail {

inline std::size_t count_correlated(const NormalizedRegressors& nr, std::span<const double> unit_eta,
                                    double alpha) {
    std::size_t c = 0;
    for (std::size_t t = 0; t < nr.size(); ++t)
        if (std::fabs(dot(nr.xtilde.row(t), unit_eta)) >= alpha) ++c;
    return c;
}

inline Vector random_unit(Engine& eng, std::size_t n) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector v(n);
    double nn = 0.0;
    while (!(nn > 0.0)) {
        for (double& vi : v) vi = gauss(eng);
        nn = norm2(v);
    }
    for (double& vi : v) vi /= nn;
    return v;
}

inline Vector min_eigenvector(const NormalizedRegressors& nr) {
    const auto e = eig_sym(gram(nr.xtilde));
    Vector v(nr.dim());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = e.vectors(i, 0);
    return v;
}

}  // namespace detail

/// Upper estimate of rho_alpha: the minimum fraction over `n_samples` random
/// unit directions, the regressor directions themselves and the eigenvector of
/// the smallest eigenvalue of X~^T X~. Directions are drawn in chunks of 1024,
/// chunk c from substream (seed, c).
inline double rho_sampled(const NormalizedRegressors& nr, double alpha, int n_samples,
                          std::uint64_t seed) {
    if (nr.dim() < 2) throw DimensionError("rho_sampled needs at least two dimensions");
    if (n_samples < 1) throw InvalidConfig("n_samples must be >= 1");
    constexpr int kChunk = 1024;
    std::size_t best = detail::count_correlated(nr, detail::min_eigenvector(nr), alpha);
    for (std::size_t t = 0; t < nr.size(); ++t)
        best = std::min(best, detail::count_correlated(nr, nr.xtilde.row(t), alpha));
    for (int c = 0; c * kChunk < n_samples; ++c) {
        auto eng = make_engine(seed, "rho-sampled", static_cast<std::uint64_t>(c));
        const int end = std::min(n_samples, (c + 1) * kChunk);
        for (int k = c * kChunk; k < end; ++k)
            best = std::min(best, detail::count_correlated(nr, detail::random_unit(eng, nr.dim()), alpha));
    }
    return static_cast<double>(best) / static_cast<double>(nr.size());
}

/// Certified lower bound sqrt(lambda_min(X~^T X~) / N) on sigma.
inline double sigma_lower(const NormalizedRegressors& nr) {
    const double lmin = eig_extremes(gram(nr.xtilde)).lambda_min;
    return std::sqrt(std::max(0.0, lmin) / static_cast<double>(nr.size()));
}

/// sigma = min over unit eta of max_t |x~_t^T eta|.
///
/// n = 1: 1. n = 2: exact; the minimizing line bisects the widest gap between
/// consecutive regressor lines, so sigma = cos(gap / 2). n >= 3: best of
/// `n_starts` projected-subgradient descents on the sphere, plus one from the
/// smallest eigenvector; being a value attained at some eta it over-estimates
/// sigma.
inline double sigma_heuristic(const NormalizedRegressors& nr, int n_starts, std::uint64_t seed) {
    if (n_starts < 1) throw InvalidConfig("n_starts must be >= 1");
    const std::size_t n = nr.dim();
    if (n == 1) return 1.0;
    if (n == 2) {
        const auto phi = detail::sorted_angles(nr);
        double gap = phi.front() + detail::kPi - phi.back();
        for (std::size_t i = 1; i < phi.size(); ++i) gap = std::max(gap, phi[i] - phi[i - 1]);
        return std::max(0.0, std::cos(0.5 * gap));
    }

    const auto value = [&](std::span<const double> eta, std::size_t& arg, double& sign) {
        double m = -1.0;
        for (std::size_t t = 0; t < nr.size(); ++t) {
            const double c = dot(nr.xtilde.row(t), eta);
            if (std::fabs(c) > m) {
                m = std::fabs(c);
                arg = t;
                sign = c >= 0.0 ? 1.0 : -1.0;
            }
        }
        return m;
    };

    constexpr int kIterations = 300;
    constexpr double kStep0 = 0.3;
    double best = 1.0;
    for (int s = 0; s <= n_starts; ++s) {
        Vector eta;
        if (s == 0) {
            eta = detail::min_eigenvector(nr);
        } else {
            auto eng = make_engine(seed, "sigma-start", static_cast<std::uint64_t>(s));
            eta = detail::random_unit(eng, n);
        }
        for (int k = 0; k < kIterations; ++k) {
            std::size_t arg = 0;
            double sign = 1.0;
            best = std::min(best, value(eta, arg, sign));
            Vector g(nr.xtilde.row(arg).begin(), nr.xtilde.row(arg).end());
            for (double& gi : g) gi *= sign;
            const double radial = dot(g, eta);
            for (std::size_t i = 0; i < n; ++i) g[i] -= radial * eta[i];
            const double gn = norm2(g);
            if (!(gn > 0.0)) break;
            const double step = kStep0 / std::sqrt(static_cast<double>(k + 1));
            for (std::size_t i = 0; i < n; ++i) eta[i] -= step * g[i] / gn;
            const double en = norm2(eta);
            for (double& ei : eta) ei /= en;
        }
        std::size_t arg = 0;
        double sign = 1.0;
        best = std::min(best, value(eta, arg, sign));
    }
    return best;
}

namespace detail {

inline double v_alpha_threshold(double alpha, double sigma_used) {
    double delta = std::sqrt(std::max(0.0, 1.0 - alpha * alpha)) -
                   std::sqrt(std::max(0.0, 1.0 - sigma_used * sigma_used));
    delta = std::clamp(delta, 0.0, 1.0);
    return std::sqrt(1.0 - delta * delta);
}

}  // namespace detail

/// min_t |J_t| / N for each threshold tau, J_t = {k : |x~_k^T x~_t| >= tau}.
/// t is always in J_t; other pairs get a 4-ulp allowance on the inclusive
/// comparison.
inline std::vector<double> neighbour_fractions(const NormalizedRegressors& nr,
                                               std::span<const double> taus) {
    const std::size_t count = nr.size();
    constexpr double kAllowance = 4.0 * std::numeric_limits<double>::epsilon();
    std::vector<std::size_t> best(taus.size(), count);
    std::vector<double> corr(count);
    for (std::size_t t = 0; t < count; ++t) {
        const auto xt = nr.xtilde.row(t);
        for (std::size_t k = 0; k < count; ++k) corr[k] = std::fabs(dot(nr.xtilde.row(k), xt));
        corr[t] = 1.0;
        for (std::size_t j = 0; j < taus.size(); ++j) {
            std::size_t c = 0;
            const double thr = taus[j] - kAllowance;
            for (double v : corr) c += v >= thr ? 1 : 0;
            best[j] = std::min(best[j], c);
        }
    }
    std::vector<double> out(taus.size());
    for (std::size_t j = 0; j < taus.size(); ++j)
        out[j] = static_cast<double>(best[j]) / static_cast<double>(count);
    return out;
}

/// Certified lower bound on rho_alpha, valid when alpha <= sigma(X) and
/// sigma_used <= sigma(X).
inline double v_alpha(const NormalizedRegressors& nr, double alpha, double sigma_used) {
    if (!(alpha > 0.0)) throw DomainError("alpha must be > 0");
    if (alpha > sigma_used) throw AlphaExceedsSigma(alpha, sigma_used);
    const double tau = detail::v_alpha_threshold(alpha, std::min(sigma_used, 1.0));
    return neighbour_fractions(nr, std::span<const double>(&tau, 1)).front();
}

/// min(1, lambda_min(X~^T X~) / (N alpha^2)).
inline double rho_upper(const NormalizedRegressors& nr, double alpha) {
    if (!(alpha > 0.0)) throw DomainError("alpha must be > 0");
    const double lmin = std::max(0.0, eig_extremes(gram(nr.xtilde)).lambda_min);
    return std::min(1.0, lmin / (static_cast<double>(nr.size()) * alpha * alpha));
}

enum class SigmaSource { certified_lower, heuristic };

struct RichnessOptions {
    SigmaSource sigma = SigmaSource::certified_lower;
    int rho_samples = 10000;
    int sigma_starts = 16;
    std::uint64_t seed = 0;
    bool sample_rho = true;  // rho_sampled for n >= 3
};

struct RichnessReport {
    double alpha = 0.0;
    double r_x = 0.0;
    double sigma_lower = 0.0;
    double sigma_heuristic = 0.0;
    SigmaSource sigma_used = SigmaSource::certified_lower;
    bool certified = true;
    std::optional<double> v_alpha;  // empty when alpha exceeds the sigma used
    double rho_upper = 0.0;
    std::optional<double> rho_exact;    // n = 2
    std::optional<double> rho_sampled;  // n >= 3
    double pe_condition_number = 0.0;   // sqrt(lambda_max / lambda_min) of X^T X

    double sigma_value() const noexcept {
        return sigma_used == SigmaSource::heuristic ? sigma_heuristic : sigma_lower;
    }
    /// Midpoint of [v_alpha, rho_upper]; empty without v_alpha.
    std::optional<double> rho_midpoint() const {
        if (!v_alpha) return std::nullopt;
        return 0.5 * (*v_alpha + rho_upper);
    }
};

namespace detail {

inline RichnessReport base_report(const Matrix& x, const NormalizedRegressors& nr,
                                  const RichnessOptions& opt) {
    RichnessReport rep;
    rep.r_x = nr.r_x;
    rep.sigma_lower = sigma_lower(nr);
    rep.sigma_heuristic = std::max(rep.sigma_lower, sigma_heuristic(nr, opt.sigma_starts, opt.seed));
    rep.sigma_used = opt.sigma;
    rep.certified = opt.sigma == SigmaSource::certified_lower;
    const auto raw = eig_extremes(gram(x));
    rep.pe_condition_number = raw.lambda_min > 0.0 ? std::sqrt(raw.lambda_max / raw.lambda_min)
                                                   : std::numeric_limits<double>::infinity();
    return rep;
}

}  // namespace detail

/// Full report at one alpha. v_alpha uses sigma_lower unless the options ask
/// for the heuristic sigma, in which case the report is marked non-certified.
inline RichnessReport richness_report(const Matrix& x, double alpha, const RichnessOptions& opt = {}) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
    const auto nr = normalize_columns(x);
    RichnessReport rep = detail::base_report(x, nr, opt);
    rep.alpha = alpha;
    if (alpha <= rep.sigma_value()) rep.v_alpha = v_alpha(nr, alpha, rep.sigma_value());
    rep.rho_upper = rho_upper(nr, alpha);
    if (nr.dim() == 2) rep.rho_exact = rho_exact_2d(nr, alpha);
    if (nr.dim() >= 3 && opt.sample_rho)
        rep.rho_sampled = rho_sampled(nr, alpha, opt.rho_samples, opt.seed);
    return rep;
}

/// Reports over an alpha grid, sharing the sigma estimates and the pairwise
/// correlation pass.
inline std::vector<RichnessReport> richness_profile(const Matrix& x, std::span<const double> alphas,
                                                    const RichnessOptions& opt = {}) {
    const auto nr = normalize_columns(x);
    const RichnessReport base = detail::base_report(x, nr, opt);
    const double sigma = base.sigma_value();

    std::vector<double> taus;
    std::vector<std::size_t> slot(alphas.size(), alphas.size());
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (!(alphas[i] > 0.0 && alphas[i] <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
        if (alphas[i] <= sigma) {
            slot[i] = taus.size();
            taus.push_back(detail::v_alpha_threshold(alphas[i], sigma));
        }
    }
    const auto fractions = neighbour_fractions(nr, taus);
    const double lmin = std::max(0.0, eig_extremes(gram(nr.xtilde)).lambda_min);

    std::vector<RichnessReport> out;
    out.reserve(alphas.size());
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        RichnessReport rep = base;
        rep.alpha = alphas[i];
        if (slot[i] < alphas.size()) rep.v_alpha = fractions[slot[i]];
        rep.rho_upper =
            std::min(1.0, lmin / (static_cast<double>(nr.size()) * alphas[i] * alphas[i]));
        if (nr.dim() == 2) rep.rho_exact = rho_exact_2d(nr, alphas[i]);
        if (nr.dim() >= 3 && opt.sample_rho)
            rep.rho_sampled = rho_sampled(nr, alphas[i], opt.rho_samples, opt.seed);
        out.push_back(std::move(rep));
    }
    return out;
}

}  // namespace mce
