#pragma once

// Monte-Carlo experiment runner. Each (grid point, trial) pair is an
// independent task seeded from (base seed, figure, grid index, trial index);
// results land in per-task slots and are reduced in index order, so the
// output does not depend on the number of worker threads.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mce/bounds.hpp"
#include "mce/datagen.hpp"
#include "mce/estimators.hpp"
#include "mce/io.hpp"
#include "mce/richness.hpp"

namespace mce {

/// Runs body(i) for i in [0, count) on `threads` workers. The exception of the
/// lowest failing index is rethrown after all workers have joined.
template <class Body>
void parallel_for(std::size_t count, int threads, Body&& body) {
    const std::size_t workers = std::clamp<std::size_t>(threads < 1 ? 1 : threads, 1, std::max<std::size_t>(count, 1));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::size_t err_index = count;
    std::exception_ptr err;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(err_mutex);
                    if (i < err_index) {
                        err_index = i;
                        err = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

/// Sample quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> values, double q) {
    if (values.empty()) return std::nan("");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

inline double mean(const std::vector<double>& values) {
    if (values.empty()) return std::nan("");
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

struct ErrorSummary {
    double mean = 0.0;
    double q10 = 0.0;
    double q50 = 0.0;
    double q90 = 0.0;
};

inline ErrorSummary summarize(const std::vector<double>& values) {
    return {mce::mean(values), quantile(values, 0.1), quantile(values, 0.5), quantile(values, 0.9)};
}

enum class Figure { fig1, fig2, fig3, fig4 };

inline std::string_view figure_name(Figure f) {
    switch (f) {
        case Figure::fig1: return "fig1";
        case Figure::fig2: return "fig2";
        case Figure::fig3: return "fig3";
        case Figure::fig4: return "fig4";
    }
    return "?";
}

inline std::optional<Figure> parse_figure(std::string_view s) {
    for (Figure f : {Figure::fig1, Figure::fig2, Figure::fig3, Figure::fig4})
        if (figure_name(f) == s) return f;
    return std::nullopt;
}

enum class RhoMode { certified, midpoint };

struct ExperimentSpec {
    Figure figure = Figure::fig1;
    int trials = 100;
    std::uint64_t seed = 1;
    int threads = 1;
    bool paper_scale = false;
    std::vector<double> grid;  // epsilon (fig1, fig3), alpha (fig2), N (fig4); empty = default
    Vector theta = {0.5, -1.0, 0.2};
    EstimatorConfig estimator;

    // fig1
    std::size_t n_samples = 300;
    double outlier_frac = -1.0;  // < 0: figure default (0.5 fig1, 0.1 fig4)
    double gamma_l = 0.5;
    double gamma_g = 0.25;

    // fig2
    std::size_t dim = 2;
    std::size_t design_size = 0;  // 0: figure default
    SigmaSource sigma = SigmaSource::heuristic;
    int rho_samples = 2000;
    int sigma_starts = 16;

    // fig3 / fig4
    double loss_level = 0.2;  // gamma * l(epsilon), held fixed
    double inlier_frac = 0.8;  // fig3 only; fig4 measures it
    double rho = 0.8;          // fig3 only
    double alpha = 0.6;
    double r_x = 1.0;
    bool rx_from_data = false;  // fig4: use min_t ||x_t|| instead of r_x
    double epsilon = 0.05;      // fig4
    RhoMode rho_mode = RhoMode::midpoint;

    void validate() const {
        if (trials < 1) throw InvalidConfig("trials must be >= 1");
        if (theta.empty()) throw InvalidConfig("theta must be nonempty");
        if (dim != 2 && dim != 3 && figure == Figure::fig2) throw InvalidConfig("fig2 designs have dimension 2 or 3");
    }
};

namespace detail {

inline std::vector<double> default_grid(const ExperimentSpec& spec) {
    std::vector<double> g;
    switch (spec.figure) {
        case Figure::fig1:
            for (int i = 0; i <= 16; ++i) g.push_back(0.1 * i);
            break;
        case Figure::fig2:
            g.push_back(0.01);
            for (int i = 1; i <= 19; ++i) g.push_back(0.05 * i);
            break;
        case Figure::fig3:
            for (int i = 1; i <= 16; ++i) g.push_back(0.1 * i);
            break;
        case Figure::fig4:
            if (spec.paper_scale)
                for (int i = 1; i <= 10; ++i) g.push_back(500.0 * i);
            else
                g = {200, 500, 1000, 2000};
            break;
    }
    return g;
}

inline std::uint64_t trial_seed(const ExperimentSpec& spec, std::size_t grid_index, std::size_t trial) {
    return substream_seed(spec.seed, figure_name(spec.figure), grid_index, trial);
}

inline void append_summary(std::vector<std::string>& row, const ErrorSummary& s) {
    row.push_back(format_number(s.q10));
    row.push_back(format_number(s.q50));
    row.push_back(format_number(s.q90));
}

}  // namespace detail

/// Estimation error against noise level: MCE-L, MCE-G, LAD (and OLS for
/// reference) on FIR data with a fixed outlier proportion.
inline CsvTable run_fig1(const ExperimentSpec& spec) {
    spec.validate();
    const auto grid = spec.grid.empty() ? detail::default_grid(spec) : spec.grid;
    const auto trials = static_cast<std::size_t>(spec.trials);
    const double frac = spec.outlier_frac < 0.0 ? 0.5 : spec.outlier_frac;

    struct Errors {
        double mce_l, mce_g, lad, ols;
    };
    std::vector<Errors> slots(grid.size() * trials);
    parallel_for(slots.size(), spec.threads, [&](std::size_t task) {
        const std::size_t g = task / trials;
        const std::size_t k = task % trials;
        NoiseModel nm;
        nm.epsilon = grid[g];
        nm.outlier_frac = frac;
        const auto seed = detail::trial_seed(spec, g, k);
        const auto ds = gen_fir_dataset(spec.theta, spec.n_samples, nm, seed);
        EstimatorConfig cfg = spec.estimator;
        cfg.seed = seed;
        slots[task] = {distance2(mce_fit(ds, LossSpec(1.0, spec.gamma_l), cfg).theta, spec.theta),
                       distance2(mce_fit(ds, LossSpec(2.0, spec.gamma_g), cfg).theta, spec.theta),
                       distance2(lad_fit(ds, cfg).theta, spec.theta),
                       distance2(ols_fit(ds).theta, spec.theta)};
    });

    CsvTable table;
    table.header = {"epsilon", "snr_db", "err_mce_l", "err_mce_g", "err_lad", "err_ols",
                    "q10_mce_l", "q50_mce_l", "q90_mce_l", "q10_mce_g", "q50_mce_g", "q90_mce_g",
                    "q10_lad", "q50_lad", "q90_lad", "trials"};
    for (std::size_t g = 0; g < grid.size(); ++g) {
        std::vector<double> l, gs, lad, ols;
        for (std::size_t k = 0; k < trials; ++k) {
            const auto& e = slots[g * trials + k];
            l.push_back(e.mce_l);
            gs.push_back(e.mce_g);
            lad.push_back(e.lad);
            ols.push_back(e.ols);
        }
        const auto sl = summarize(l), sg = summarize(gs), sd = summarize(lad);
        std::vector<std::string> row{format_number(grid[g]), format_number(fir_snr_db(spec.theta, grid[g])),
                                     format_number(sl.mean), format_number(sg.mean), format_number(sd.mean),
                                     format_number(mean(ols))};
        detail::append_summary(row, sl);
        detail::append_summary(row, sg);
        detail::append_summary(row, sd);
        row.push_back(std::to_string(trials));
        table.rows.push_back(std::move(row));
    }
    return table;
}

/// Richness estimates against alpha for one FIR design of dimension 2 or 3.
/// Rows where alpha exceeds the sigma in use have an empty v_alpha cell.
inline CsvTable run_fig2(const ExperimentSpec& spec) {
    spec.validate();
    const auto grid = spec.grid.empty() ? detail::default_grid(spec) : spec.grid;
    std::size_t size = spec.design_size;
    if (size == 0) size = spec.dim == 2 ? 200 : (spec.paper_scale ? 6000 : 1000);

    Vector taps(spec.dim, 1.0);
    const auto ds = gen_fir_dataset(taps, size, NoiseModel{}, detail::trial_seed(spec, 0, 0));
    RichnessOptions opt;
    opt.sigma = spec.sigma;
    opt.sigma_starts = spec.sigma_starts;
    opt.rho_samples = spec.rho_samples;
    opt.seed = detail::trial_seed(spec, 0, 1);
    opt.sample_rho = spec.dim >= 3;

    std::vector<RichnessReport> reports(grid.size());
    {
        // sigma estimates are shared; the per-alpha work is split across threads
        const auto base = richness_profile(ds.x, grid, RichnessOptions{opt.sigma, opt.rho_samples,
                                                                       opt.sigma_starts, opt.seed, false});
        reports = base;
        if (opt.sample_rho) {
            const auto nr = normalize_columns(ds.x);
            parallel_for(grid.size(), spec.threads, [&](std::size_t i) {
                reports[i].rho_sampled = rho_sampled(nr, grid[i], opt.rho_samples, opt.seed);
            });
        }
    }

    CsvTable table;
    table.header = {"alpha", "v_alpha", "rho_upper", "rho_exact", "sigma_lower", "sigma_heuristic", "rho_sampled"};
    for (const auto& r : reports) {
        table.rows.push_back({format_number(r.alpha), format_optional(r.v_alpha), format_number(r.rho_upper),
                              format_optional(r.rho_exact), format_number(r.sigma_lower),
                              format_number(r.sigma_heuristic), format_optional(r.rho_sampled)});
    }
    return table;
}

/// Bound growth with the noise level when gamma is rescaled to keep
/// gamma l(epsilon) fixed; no data involved.
inline CsvTable run_fig3(const ExperimentSpec& spec) {
    spec.validate();
    const auto grid = spec.grid.empty() ? detail::default_grid(spec) : spec.grid;
    CsvTable table;
    table.header = {"epsilon", "bound_mce_l", "bound_mce_g"};
    for (double eps : grid) {
        if (!(eps > 0.0)) throw InvalidConfig("fig3 needs epsilon > 0");
        const auto l = bound_mce_l(spec.loss_level / eps, eps, spec.inlier_frac, spec.rho, spec.alpha, spec.r_x);
        const auto g = bound_mce_g(spec.loss_level / (eps * eps), eps, spec.inlier_frac, spec.rho, spec.alpha,
                                   spec.r_x);
        table.rows.push_back({format_number(eps), format_optional(l.bound), format_optional(g.bound)});
    }
    return table;
}

struct Fig4Trial {
    double err_mce_l = 0.0;
    double err_mce_g = 0.0;
    std::optional<double> bound_mce_l;
    std::optional<double> bound_mce_g;
    double rho = 0.0;
    double inlier_frac = 0.0;
    bool ascent_ok = true;  // both MM traces nondecreasing
};

inline bool trace_nondecreasing(const std::vector<double>& trace, double slack = 1e-12) {
    for (std::size_t i = 1; i < trace.size(); ++i)
        if (trace[i] < trace[i - 1] - slack) return false;
    return true;
}

/// One fig4 trial: fit both kernels, estimate rho at alpha from the data and
/// evaluate both bounds with the measured inlier fraction.
inline Fig4Trial fig4_trial(const ExperimentSpec& spec, std::size_t count, std::uint64_t seed) {
    NoiseModel nm;
    nm.epsilon = spec.epsilon;
    nm.outlier_frac = spec.outlier_frac < 0.0 ? 0.1 : spec.outlier_frac;
    const auto ds = gen_fir_dataset(spec.theta, count, nm, seed);
    const double gamma1 = spec.loss_level / spec.epsilon;
    const double gamma2 = spec.loss_level / (spec.epsilon * spec.epsilon);

    EstimatorConfig cfg = spec.estimator;
    cfg.seed = seed;
    const auto fl = mce_fit(ds, LossSpec(1.0, gamma1), cfg);
    const auto fg = mce_fit(ds, LossSpec(2.0, gamma2), cfg);

    RichnessOptions opt;
    opt.sigma = spec.rho_mode == RhoMode::midpoint ? spec.sigma : SigmaSource::certified_lower;
    opt.sigma_starts = spec.sigma_starts;
    opt.seed = seed;
    opt.sample_rho = false;
    const auto rep = richness_report(ds.x, spec.alpha, opt);

    Fig4Trial out;
    out.err_mce_l = distance2(fl.theta, spec.theta);
    out.err_mce_g = distance2(fg.theta, spec.theta);
    out.ascent_ok = trace_nondecreasing(fl.objective_trace) && trace_nondecreasing(fg.objective_trace);
    out.inlier_frac = noise_statistics(ds, spec.epsilon).inlier_frac;
    const std::optional<double> rho = spec.rho_mode == RhoMode::midpoint ? rep.rho_midpoint() : rep.v_alpha;
    if (!rho) return out;
    out.rho = *rho;
    const double rx = spec.rx_from_data ? rep.r_x : spec.r_x;
    out.bound_mce_l = bound_mce_l(gamma1, spec.epsilon, out.inlier_frac, *rho, spec.alpha, rx).bound;
    out.bound_mce_g = bound_mce_g(gamma2, spec.epsilon, out.inlier_frac, *rho, spec.alpha, rx).bound;
    return out;
}

/// Empirical errors against theoretical bounds over the sample size. Bound
/// columns average the trials where the stability condition held;
/// `violations` counts the others.
inline CsvTable run_fig4(const ExperimentSpec& spec) {
    spec.validate();
    if (!(spec.epsilon > 0.0)) throw InvalidConfig("fig4 needs epsilon > 0");
    const auto grid = spec.grid.empty() ? detail::default_grid(spec) : spec.grid;
    const auto trials = static_cast<std::size_t>(spec.trials);
    std::vector<Fig4Trial> slots(grid.size() * trials);
    parallel_for(slots.size(), spec.threads, [&](std::size_t task) {
        const std::size_t g = task / trials;
        const std::size_t k = task % trials;
        slots[task] = fig4_trial(spec, static_cast<std::size_t>(grid[g]), detail::trial_seed(spec, g, k));
    });

    CsvTable table;
    table.header = {"N", "err_mce_l", "err_mce_g", "bound_mce_l", "bound_mce_g",
                    "log10_err_mce_l", "log10_err_mce_g", "log10_bound_mce_l", "log10_bound_mce_g",
                    "q10_mce_l", "q50_mce_l", "q90_mce_l", "q10_mce_g", "q50_mce_g", "q90_mce_g",
                    "rho", "inlier_frac", "violations", "ascent_failures", "trials"};
    for (std::size_t g = 0; g < grid.size(); ++g) {
        std::vector<double> el, eg, bl, bg, rho, fr;
        std::size_t violations = 0;
        std::size_t ascent_failures = 0;
        for (std::size_t k = 0; k < trials; ++k) {
            const auto& s = slots[g * trials + k];
            ascent_failures += s.ascent_ok ? 0 : 1;
            el.push_back(s.err_mce_l);
            eg.push_back(s.err_mce_g);
            rho.push_back(s.rho);
            fr.push_back(s.inlier_frac);
            if (s.bound_mce_l && s.bound_mce_g) {
                bl.push_back(*s.bound_mce_l);
                bg.push_back(*s.bound_mce_g);
            } else {
                ++violations;
            }
        }
        const auto sl = summarize(el), sg = summarize(eg);
        const std::string ml = bl.empty() ? std::string{} : format_number(mean(bl));
        const std::string mg = bg.empty() ? std::string{} : format_number(mean(bg));
        const std::string log_ml = bl.empty() ? std::string{} : format_number(std::log10(mean(bl)));
        const std::string log_mg = bg.empty() ? std::string{} : format_number(std::log10(mean(bg)));
        std::vector<std::string> row{format_number(grid[g]),
                                     format_number(sl.mean),
                                     format_number(sg.mean),
                                     ml,
                                     mg,
                                     format_number(std::log10(sl.mean)),
                                     format_number(std::log10(sg.mean)),
                                     log_ml,
                                     log_mg};
        detail::append_summary(row, sl);
        detail::append_summary(row, sg);
        row.push_back(format_number(mean(rho)));
        row.push_back(format_number(mean(fr)));
        row.push_back(std::to_string(violations));
        row.push_back(std::to_string(ascent_failures));
        row.push_back(std::to_string(trials));
        table.rows.push_back(std::move(row));
    }
    return table;
}

inline CsvTable run_experiment(const ExperimentSpec& spec) {
    switch (spec.figure) {
        case Figure::fig1: return run_fig1(spec);
        case Figure::fig2: return run_fig2(spec);
        case Figure::fig3: return run_fig3(spec);
        case Figure::fig4: return run_fig4(spec);
    }
    throw InvalidConfig("unknown figure");
}

}  // namespace mce
