// mce: dataset generation, fitting, richness and bound reports, and the
// Monte-Carlo figure runs.
//
// Exit codes: 0 ok, 1 usage error, 2 data error.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mce/mce.hpp"

namespace {

using nlohmann::json;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<double> parse_list(const std::string& s, const char* what) {
    std::vector<double> out;
    if (s.empty()) return out;
    for (const auto& cell : mce::split_csv_line(s)) {
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (cell.empty() || end != cell.c_str() + cell.size())
            throw UsageError(std::string("bad number in ") + what + ": '" + cell + "'");
        out.push_back(v);
    }
    return out;
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty())
        std::cout << text;
    else
        mce::write_text_file(out_path, text);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// --config FILE: a flat JSON object whose keys are long flag names. Keys are
// turned into arguments unless the same flag was given on the command line.
std::vector<std::string> expand_config(std::vector<std::string> args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (path.empty()) return args;

    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config '" + path + "'");
    json cfg;
    try {
        in >> cfg;
    } catch (const json::exception& e) {
        throw UsageError(std::string("malformed config: ") + e.what());
    }
    if (!cfg.is_object()) throw UsageError("config must be a JSON object");

    const auto given = [&args](const std::string& flag) {
        return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
            return a == flag || a.rfind(flag + "=", 0) == 0;
        });
    };
    for (const auto& [key, value] : cfg.items()) {
        const std::string flag = "--" + key;
        if (given(flag)) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back(flag);
        } else if (value.is_array()) {
            std::string joined;
            for (const auto& v : value) {
                if (!joined.empty()) joined += ',';
                joined += v.is_string() ? v.get<std::string>() : v.dump();
            }
            args.push_back(flag);
            args.push_back(joined);
        } else {
            args.push_back(flag);
            args.push_back(value.is_string() ? value.get<std::string>() : value.dump());
        }
    }
    return args;
}

json fit_json(const mce::FitResult& r, const mce::RegressionDataset& ds) {
    json j;
    j["theta"] = r.theta;
    j["objective"] = r.objective;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["objective_trace"] = r.objective_trace;
    if (ds.theta_true && ds.theta_true->size() == r.theta.size())
        j["err"] = mce::distance2(r.theta, *ds.theta_true);
    else
        j["err"] = nullptr;
    return j;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json richness_json(const mce::RichnessReport& r) {
    return {{"alpha", r.alpha},
            {"r_x", r.r_x},
            {"sigma_lower", r.sigma_lower},
            {"sigma_heuristic", r.sigma_heuristic},
            {"sigma_used", r.sigma_used == mce::SigmaSource::heuristic ? "heuristic" : "certified_lower"},
            {"certified", r.certified},
            {"v_alpha", optional_json(r.v_alpha)},
            {"rho_upper", r.rho_upper},
            {"rho_exact", optional_json(r.rho_exact)},
            {"rho_sampled", optional_json(r.rho_sampled)},
            {"rho_midpoint", optional_json(r.rho_midpoint())},
            {"pe_condition_number", r.pe_condition_number}};
}

json bound_json(const mce::BoundReport& r) {
    return {{"condition_ok", r.condition_ok}, {"mu", r.mu}, {"bound", optional_json(r.bound)}};
}

struct Options {
    std::string out;
    std::uint64_t seed = 1;
    int threads = 1;

    // gen
    std::string theta = "0.5,-1,0.2";
    std::size_t n_samples = 300;
    double epsilon = 0.05;
    double outlier_frac = 0.1;
    double outlier_mean = 50.0;
    double outlier_sd = 10.0;
    double eiv_sd = 0.0;
    bool symmetric = false;
    std::string design = "fir";

    // fit
    std::string input;
    std::string method = "mce";
    double p = 2.0;
    double gamma = 0.25;
    int max_iter = 200;
    double tol = 1e-10;
    int multistart = 4;
    std::string init = "lad";

    // richness / bound
    double alpha = 0.6;
    std::string alpha_grid;
    bool certified = false;
    bool heuristic = false;
    int rho_samples = 10000;
    int sigma_starts = 16;
    double inlier_frac = -1.0;
    double rho = -1.0;
    double rx = -1.0;
    std::string rho_mode = "certified";

    // mc
    std::string figure;
    int trials = 100;
    bool paper_scale = false;
    std::string grid;
    std::size_t dim = 2;
    std::size_t design_size = 0;
    double mc_outlier_frac = -1.0;
    std::size_t mc_samples = 300;
    double gamma_l = 0.5;
    double gamma_g = 0.25;
    double loss_level = 0.2;
    bool rx_from_data = false;
    std::string mc_rho_mode = "midpoint";
};

mce::EstimatorConfig estimator_config(const Options& o) {
    mce::EstimatorConfig cfg;
    cfg.max_iter = o.max_iter;
    cfg.tol = o.tol;
    cfg.multistart = o.multistart;
    cfg.seed = o.seed;
    if (o.init == "ols")
        cfg.init = mce::InitKind::ols;
    else if (o.init == "lad")
        cfg.init = mce::InitKind::lad;
    else
        throw UsageError("--init must be ols or lad");
    return cfg;
}

mce::RichnessOptions richness_options(const Options& o) {
    if (o.certified && o.heuristic) throw UsageError("--certified and --heuristic-sigma are exclusive");
    mce::RichnessOptions opt;
    opt.sigma = o.heuristic ? mce::SigmaSource::heuristic : mce::SigmaSource::certified_lower;
    opt.rho_samples = o.rho_samples;
    opt.sigma_starts = o.sigma_starts;
    opt.seed = o.seed;
    return opt;
}

void run_gen(const Options& o) {
    const auto theta = parse_list(o.theta, "--theta");
    mce::NoiseModel nm;
    nm.epsilon = o.epsilon;
    nm.outlier_frac = o.outlier_frac;
    nm.outlier_mean = o.outlier_mean;
    nm.outlier_sd = o.outlier_sd;
    nm.eiv_sd = o.eiv_sd;
    nm.symmetric_outliers = o.symmetric;
    mce::RegressionDataset ds;
    if (o.design == "fir")
        ds = mce::gen_fir_dataset(theta, o.n_samples, nm, o.seed);
    else if (o.design == "sphere")
        ds = mce::gen_unit_sphere_dataset(theta, o.n_samples, nm, o.seed);
    else
        throw UsageError("--design must be fir or sphere");
    if (o.out.empty())
        std::cout << mce::dataset_csv(ds);
    else
        mce::write_dataset(o.out, ds);
}

void run_fit(const Options& o) {
    const auto ds = mce::read_dataset(o.input);
    const auto cfg = estimator_config(o);
    mce::FitResult r;
    if (o.method == "ols")
        r = mce::ols_fit(ds);
    else if (o.method == "lad")
        r = mce::lad_fit(ds, cfg);
    else if (o.method == "mce")
        r = mce::mce_fit(ds, mce::LossSpec(o.p, o.gamma), cfg);
    else
        throw UsageError("--method must be ols, lad or mce");
    json j = fit_json(r, ds);
    j["method"] = o.method;
    emit(o.out, dump(j));
}

std::vector<double> alpha_list(const Options& o) {
    auto alphas = parse_list(o.alpha_grid, "--alpha-grid");
    if (alphas.empty()) alphas.push_back(o.alpha);
    return alphas;
}

void run_richness(const Options& o) {
    const auto ds = mce::read_dataset(o.input);
    const auto alphas = alpha_list(o);
    const auto reports = mce::richness_profile(ds.x, alphas, richness_options(o));
    json j = json::array();
    for (const auto& r : reports) j.push_back(richness_json(r));
    emit(o.out, dump(alphas.size() == 1 && o.alpha_grid.empty() ? j[0] : j));
}

void run_bound(const Options& o) {
    const mce::LossSpec spec(o.p, o.gamma);
    if (o.input.empty()) {
        if (o.inlier_frac < 0.0 || o.rho < 0.0) throw UsageError("bound needs --inlier-frac and --rho (or --input)");
        if (!o.alpha_grid.empty()) {
            const auto alphas = parse_list(o.alpha_grid, "--alpha-grid");
            const auto best = mce::optimize_alpha(spec, o.epsilon, o.inlier_frac, o.rx < 0 ? 1.0 : o.rx, alphas, o.rho);
            json j = bound_json(best.report);
            j["alpha"] = best.alpha;
            emit(o.out, dump(j));
            return;
        }
        const mce::BoundInputs in{spec, o.epsilon, o.inlier_frac, o.rho, o.alpha, o.rx < 0 ? 1.0 : o.rx};
        json j = bound_json(mce::error_bound(in));
        j["alpha"] = o.alpha;
        emit(o.out, dump(j));
        return;
    }

    // data-driven: rho from the regressors, inlier fraction from the sidecar
    // noise record unless given, r_x from the data unless given
    const auto ds = mce::read_dataset(o.input);
    double frac = o.inlier_frac;
    if (frac < 0.0) frac = mce::noise_statistics(ds, o.epsilon).inlier_frac;
    const auto alphas = alpha_list(o);
    auto ropt = richness_options(o);
    ropt.sample_rho = false;
    bool midpoint = false;
    if (o.rho_mode == "midpoint") {
        midpoint = true;
        if (!o.certified) ropt.sigma = mce::SigmaSource::heuristic;
    } else if (o.rho_mode != "certified") {
        throw UsageError("--rho-mode must be certified or midpoint");
    }
    const auto reports = mce::richness_profile(ds.x, alphas, ropt);
    const double r_x = o.rx > 0.0 ? o.rx : reports.front().r_x;
    const auto rho_at = [&](std::size_t i) -> std::optional<double> {
        if (o.rho >= 0.0) return o.rho;
        return midpoint ? reports[i].rho_midpoint() : reports[i].v_alpha;
    };
    const auto best = mce::optimize_alpha(spec, o.epsilon, frac, r_x, alphas, rho_at);
    json j = bound_json(best.report);
    j["alpha"] = best.alpha;
    j["rho"] = optional_json(rho_at(best.index));
    j["inlier_frac"] = frac;
    j["r_x"] = r_x;
    emit(o.out, dump(j));
}

void run_mc(const Options& o, const CLI::App& mc) {
    const auto fig = mce::parse_figure(o.figure);
    if (!fig) throw UsageError("--figure must be one of fig1, fig2, fig3, fig4");
    mce::ExperimentSpec spec;
    spec.figure = *fig;
    spec.trials = o.trials;
    spec.seed = o.seed;
    spec.threads = o.threads;
    spec.paper_scale = o.paper_scale;
    if (o.paper_scale && mc.count("--trials") == 0) spec.trials = 1000;
    spec.grid = parse_list(o.grid, "--grid");
    spec.theta = parse_list(o.theta, "--theta");
    spec.estimator = estimator_config(o);
    spec.n_samples = o.mc_samples;
    spec.outlier_frac = o.mc_outlier_frac;
    spec.gamma_l = o.gamma_l;
    spec.gamma_g = o.gamma_g;
    spec.dim = o.dim;
    spec.design_size = o.design_size;
    spec.rho_samples = mc.count("--rho-samples") ? o.rho_samples : spec.rho_samples;
    spec.sigma_starts = o.sigma_starts;
    if (o.certified && o.heuristic) throw UsageError("--certified and --heuristic-sigma are exclusive");
    if (o.certified) spec.sigma = mce::SigmaSource::certified_lower;
    spec.loss_level = o.loss_level;
    if (mc.count("--inlier-frac")) spec.inlier_frac = o.inlier_frac;
    if (mc.count("--rho")) spec.rho = o.rho;
    if (mc.count("--alpha")) spec.alpha = o.alpha;
    if (mc.count("--rx")) spec.r_x = o.rx;
    spec.rx_from_data = o.rx_from_data;
    if (mc.count("--epsilon")) spec.epsilon = o.epsilon;
    if (o.mc_rho_mode == "certified")
        spec.rho_mode = mce::RhoMode::certified;
    else if (o.mc_rho_mode != "midpoint")
        throw UsageError("--rho-mode must be certified or midpoint");
    emit(o.out, mce::run_experiment(spec).to_string());
}

int run(int argc, char** argv) {
    Options o;
    CLI::App app{"Maximum correntropy estimation toolkit"};
    app.require_subcommand(1);

    const auto common = [&o](CLI::App* s) {
        s->add_option("--out", o.out, "Output path (default: stdout)");
        s->add_option("--seed", o.seed, "Base seed");
        s->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
    };

    auto* gen = app.add_subcommand("gen", "Generate a dataset (CSV plus .meta.json sidecar)");
    common(gen);
    gen->add_option("--theta", o.theta, "True parameter, comma separated");
    gen->add_option("--n-samples", o.n_samples, "Number of samples");
    gen->add_option("--epsilon", o.epsilon, "Dense noise level");
    gen->add_option("--outlier-frac", o.outlier_frac, "Outlier proportion");
    gen->add_option("--outlier-mean", o.outlier_mean);
    gen->add_option("--outlier-sd", o.outlier_sd);
    gen->add_option("--eiv-sd", o.eiv_sd, "Regressor noise sd");
    gen->add_flag("--symmetric-outliers", o.symmetric, "Random outlier signs");
    gen->add_option("--design", o.design, "fir or sphere");

    auto* fit = app.add_subcommand("fit", "Fit a dataset");
    common(fit);
    fit->add_option("--input", o.input, "Dataset CSV")->required();
    fit->add_option("--method", o.method, "ols, lad or mce");
    fit->add_option("--p", o.p, "Loss exponent (1 or 2)");
    fit->add_option("--gamma", o.gamma, "Kernel scale");
    fit->add_option("--max-iter", o.max_iter);
    fit->add_option("--tol", o.tol);
    fit->add_option("--multistart", o.multistart);
    fit->add_option("--init", o.init, "ols or lad");

    auto* rich = app.add_subcommand("richness", "Richness report of a dataset's regressors");
    common(rich);
    rich->add_option("--input", o.input, "Dataset CSV")->required();
    rich->add_option("--alpha", o.alpha);
    rich->add_option("--alpha-grid", o.alpha_grid, "Comma separated alphas");
    rich->add_flag("--certified", o.certified, "v_alpha from the certified sigma lower bound (default)");
    rich->add_flag("--heuristic-sigma", o.heuristic, "v_alpha from the heuristic sigma");
    rich->add_option("--rho-samples", o.rho_samples);
    rich->add_option("--sigma-starts", o.sigma_starts);

    auto* bound = app.add_subcommand("bound", "Stability condition and error bound");
    common(bound);
    bound->add_option("--p", o.p);
    bound->add_option("--gamma", o.gamma);
    bound->add_option("--epsilon", o.epsilon);
    bound->add_option("--inlier-frac", o.inlier_frac);
    bound->add_option("--rho", o.rho);
    bound->add_option("--alpha", o.alpha);
    bound->add_option("--alpha-grid", o.alpha_grid, "Pick the alpha with the smallest bound");
    bound->add_option("--rx", o.rx);
    bound->add_option("--input", o.input, "Dataset CSV: estimate rho, inlier fraction and r_x");
    bound->add_option("--rho-mode", o.rho_mode, "certified or midpoint (with --input)");
    bound->add_flag("--certified", o.certified);
    bound->add_flag("--heuristic-sigma", o.heuristic);
    bound->add_option("--sigma-starts", o.sigma_starts);

    auto* mc = app.add_subcommand("mc", "Monte-Carlo figure run, CSV output");
    common(mc);
    mc->add_option("--figure", o.figure, "fig1, fig2, fig3 or fig4")->required();
    mc->add_option("--trials", o.trials)->check(CLI::PositiveNumber);
    mc->add_flag("--paper-scale", o.paper_scale);
    mc->add_option("--grid", o.grid, "Sweep values, comma separated");
    mc->add_option("--theta", o.theta);
    mc->add_option("--n-samples", o.mc_samples, "fig1 sample size");
    mc->add_option("--outlier-frac", o.mc_outlier_frac);
    mc->add_option("--gamma-l", o.gamma_l, "fig1 Laplacian kernel scale");
    mc->add_option("--gamma-g", o.gamma_g, "fig1 Gaussian kernel scale");
    mc->add_option("--dim", o.dim, "fig2 design dimension (2 or 3)");
    mc->add_option("--design-size", o.design_size, "fig2 design size");
    mc->add_option("--rho-samples", o.rho_samples);
    mc->add_option("--sigma-starts", o.sigma_starts);
    mc->add_flag("--certified", o.certified);
    mc->add_flag("--heuristic-sigma", o.heuristic);
    mc->add_option("--loss-level", o.loss_level, "gamma l(epsilon) held fixed (fig3, fig4)");
    mc->add_option("--inlier-frac", o.inlier_frac, "fig3");
    mc->add_option("--rho", o.rho, "fig3");
    mc->add_option("--alpha", o.alpha);
    mc->add_option("--rx", o.rx);
    mc->add_flag("--rx-from-data", o.rx_from_data, "fig4: r_x = min_t ||x_t||");
    mc->add_option("--epsilon", o.epsilon, "fig4 dense noise level");
    mc->add_option("--rho-mode", o.mc_rho_mode, "fig4: midpoint or certified");
    mc->add_option("--max-iter", o.max_iter);
    mc->add_option("--tol", o.tol);
    mc->add_option("--multistart", o.multistart);
    mc->add_option("--init", o.init);

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        args = expand_config(std::move(args));
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (gen->parsed()) run_gen(o);
    if (fit->parsed()) run_fit(o);
    if (rich->parsed()) run_richness(o);
    if (bound->parsed()) run_bound(o);
    if (mc->parsed()) run_mc(o, *mc);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const mce::InvalidConfig& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const mce::DomainError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
