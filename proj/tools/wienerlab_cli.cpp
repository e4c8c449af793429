// Command-line front end: simulation -> kernel -> optimization ->
// replication experiments with CSV/JSON artifacts. Every run writes a
// manifest sufficient to reproduce its outputs byte-for-byte.
//
// Exit codes: 0 success, 1 validation/config error, 2 completed but with
// flagged numerical warnings (entropy divergence, never-hit intervals).

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wienerlab/frac_calc.hpp"
#include "wienerlab/gauss_sim.hpp"
#include "wienerlab/io.hpp"
#include "wienerlab/malliavin.hpp"
#include "wienerlab/pricing.hpp"
#include "wienerlab/strategy.hpp"
#include "wienerlab/utility.hpp"

namespace fs = std::filesystem;
using wienerlab::io::json;
using namespace wienerlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitFlagged = 2;

struct Options {
    std::string model = "fbm";
    double hurst = 0.7, hurst2 = 0.5, bifrac_k = 1.0;
    double a = 1.0, b = 0.0, sigma = 1.0, y0 = 0.0;
    std::size_t steps = 256, paths = 100;
    std::uint64_t seed = 0;
    double alpha = 0.4;
    std::string theta = "const:0.0";
    std::string utility = "exponential";
    double beta = 1.0, gamma = 0.5, w = 1.0;
    int levels = 8;
    unsigned workers = 1;
    std::string out = "out";
    std::string config;
    // subcommand-specific
    std::string order = "left";
    std::string input, against;
    std::string functional = "linear";
    std::string direction = "star";
    std::string target = "self";
};

/// Config-file values fill in every option the command line left alone.
void apply_config(const json& cfg, CLI::App* cmd, Options& o) {
    auto take = [&](const char* key, auto& field) {
        const CLI::Option* opt = cmd->get_option_no_throw(std::string("--") + key);
        if (cfg.contains(key) && (!opt || opt->count() == 0)) field = cfg.at(key).get<std::decay_t<decltype(field)>>();
    };
    take("model", o.model);
    take("hurst", o.hurst);
    take("hurst2", o.hurst2);
    take("bifrac-k", o.bifrac_k);
    take("a", o.a);
    take("b", o.b);
    take("sigma", o.sigma);
    take("y0", o.y0);
    take("steps", o.steps);
    take("paths", o.paths);
    take("seed", o.seed);
    take("alpha", o.alpha);
    take("theta", o.theta);
    take("utility", o.utility);
    take("beta", o.beta);
    take("gamma", o.gamma);
    take("w", o.w);
    take("levels", o.levels);
    take("out", o.out);
    take("functional", o.functional);
    take("direction", o.direction);
    take("target", o.target);
    take("order", o.order);
    take("input", o.input);
    take("against", o.against);
}

gauss::GaussianModel build_model(const Options& o) {
    if (o.model == "wiener") return gauss::GaussianModel::wiener();
    if (o.model == "fbm") return gauss::GaussianModel::fbm(o.hurst);
    if (o.model == "subfractional") return gauss::GaussianModel::subfractional(o.hurst);
    if (o.model == "bifractional") return gauss::GaussianModel::bifractional(o.hurst, o.bifrac_k);
    if (o.model == "mixed") return gauss::GaussianModel::mixed(o.hurst);
    if (o.model == "fou") return gauss::GaussianModel::fou(o.a, o.b, o.sigma, o.hurst, o.y0);
    throw std::invalid_argument("invalid-config: unknown model '" + o.model + "'");
}

json model_params(const Options& o) {
    json p;
    if (o.model == "fbm" || o.model == "subfractional" || o.model == "mixed") p["hurst"] = o.hurst;
    if (o.model == "bifractional") {
        p["hurst"] = o.hurst;
        p["bifrac-k"] = o.bifrac_k;
    }
    if (o.model == "fou") {
        p["a"] = o.a;
        p["b"] = o.b;
        p["sigma"] = o.sigma;
        p["hurst"] = o.hurst;
        p["y0"] = o.y0;
    }
    return p;
}

/// Grammar: const:<v> | power:<c>,<e> | ex42:<mu>,<r>,<sigma>,<H> | file:<path>
pricing::ThetaSpec parse_theta(const std::string& s, double T = 1.0) {
    const auto colon = s.find(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("invalid-config: theta must be kind:args, got '" + s + "'");
    const std::string kind = s.substr(0, colon);
    const std::string args = s.substr(colon + 1);
    auto split = [&](std::size_t expect) {
        std::vector<double> v;
        std::size_t pos = 0;
        while (pos <= args.size()) {
            const auto comma = args.find(',', pos);
            const std::string tok = args.substr(pos, comma == std::string::npos ? comma : comma - pos);
            try {
                v.push_back(std::stod(tok));
            } catch (...) {
                throw std::invalid_argument("invalid-config: bad theta number '" + tok + "'");
            }
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (v.size() != expect)
            throw std::invalid_argument("invalid-config: theta '" + kind + "' needs " +
                                        std::to_string(expect) + " arguments");
        return v;
    };
    if (kind == "const") return pricing::ThetaSpec::constant(split(1)[0], T);
    if (kind == "power") {
        const auto v = split(2);
        return pricing::ThetaSpec::power_law(v[0], v[1], T);
    }
    if (kind == "ex42") {
        const auto v = split(4);
        return pricing::ThetaSpec::example42(v[0], v[1], v[2], v[3], T);
    }
    if (kind == "file") {
        const auto tab = io::read_paths_csv(args);
        if (tab.empty()) throw std::invalid_argument("invalid-config: empty theta table");
        return pricing::ThetaSpec::custom(tab.front());
    }
    throw std::invalid_argument("invalid-config: unknown theta kind '" + kind + "'");
}

GridFunction load_single_path(const std::string& file, const char* what) {
    if (file.empty())
        throw std::invalid_argument(std::string("invalid-config: missing input for ") + what);
    const auto paths = io::read_paths_csv(file);
    if (paths.empty()) throw std::invalid_argument(std::string("invalid-config: empty ") + what);
    return paths.front();
}

int cmd_simulate(const Options& o) {
    const auto model = build_model(o);
    std::vector<SamplePath> paths;
    if (o.model == "fou")
        paths = gauss::simulate_fou(o.a, o.b, o.sigma, o.hurst, o.y0, o.steps, o.paths, o.seed, 1.0,
                                    o.workers);
    else
        paths = gauss::simulate_exact(model, o.steps, o.paths, o.seed, o.workers);
    io::write_paths_csv(fs::path(o.out) / "paths.csv", paths);
    json manifest = {{"schema_version", io::kSchemaVersion},
                     {"command", "simulate"},
                     {"model", o.model},
                     {"params", model_params(o)},
                     {"n_steps", o.steps},
                     {"n_paths", o.paths},
                     {"seed", o.seed}};
    io::write_json(fs::path(o.out) / "manifest.json", manifest);
    return kExitOk;
}

int cmd_frac_deriv(const Options& o) {
    const GridFunction f = load_single_path(o.input, "frac deriv");
    GridFunction d;
    if (o.order == "left")
        d = frac::rl_derivative_left(f, o.alpha);
    else if (o.order == "right")
        d = frac::rl_derivative_right(f, o.alpha);
    else if (o.order == "right-bminus")
        d = frac::rl_derivative_right_bminus(f, o.alpha);
    else
        throw std::invalid_argument("invalid-config: order must be left|right|right-bminus");
    io::write_paths_csv(fs::path(o.out) / "deriv.csv", {d});
    json manifest = {{"schema_version", io::kSchemaVersion}, {"command", "frac deriv"},
                     {"order", o.order},                     {"alpha", o.alpha},
                     {"input", o.input},                     {"n_points", f.size()}};
    io::write_json(fs::path(o.out) / "manifest.json", manifest);
    return kExitOk;
}

int cmd_frac_integrate(const Options& o) {
    const GridFunction f = load_single_path(o.input, "frac integrate");
    const GridFunction g = load_single_path(o.against, "frac integrate --against");
    const double value = frac::gls_integral(f, g, o.alpha);
    json result = {{"schema_version", io::kSchemaVersion},
                   {"command", "frac integrate"},
                   {"alpha", o.alpha},
                   {"input", o.input},
                   {"against", o.against},
                   {"integral", value}};
    io::write_json(fs::path(o.out) / "integral.json", result);
    std::cout << value << "\n";
    return kExitOk;
}

int cmd_clark_ocone(const Options& o) {
    malliavin::TerminalFunctional F = [&] {
        if (o.functional == "linear") return malliavin::TerminalFunctional::linear(1.0);
        if (o.functional == "square") return malliavin::TerminalFunctional::square(1.0);
        if (o.functional == "exp")
            return malliavin::TerminalFunctional::smooth_of_wt(
                1.0, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
        throw std::invalid_argument("invalid-config: functional must be linear|square|exp");
    }();
    const malliavin::GaussHermite gh(64);
    std::vector<SamplePath> integrands(o.paths);
    std::vector<double> residuals(o.paths);
    parallel_for(o.paths, o.workers, [&](std::size_t p) {
        const SamplePath w = gauss::simulate_wiener_path(1.0, o.steps, o.seed, p);
        integrands[p] = malliavin::clark_ocone_integrand(F, w, gh);
        residuals[p] = malliavin::verify_representation(F, w, integrands[p], gh);
    });
    io::write_paths_csv(fs::path(o.out) / "integrands.csv", integrands);
    json manifest = {{"schema_version", io::kSchemaVersion},
                     {"command", "clark-ocone"},
                     {"functional", o.functional},
                     {"n_steps", o.steps},
                     {"n_paths", o.paths},
                     {"seed", o.seed},
                     {"median_residual", median(residuals)},
                     {"mean_functional", malliavin::functional_mean(F, gh)}};
    io::write_json(fs::path(o.out) / "manifest.json", manifest);
    return kExitOk;
}

std::vector<pricing::KernelSample> make_kernel(const Options& o, pricing::ThetaSpec& theta) {
    theta = parse_theta(o.theta);
    if (theta.weak_integrability)
        std::cerr << "warning: theta integrability margin is thin (exponent <= -1/4)\n";
    std::vector<SamplePath> paths(o.paths);
    parallel_for(o.paths, o.workers,
                 [&](std::size_t p) { paths[p] = gauss::simulate_wiener_path(1.0, o.steps, o.seed, p); });
    return pricing::sample_kernel(theta, paths, o.workers);
}

int cmd_kernel_sample(const Options& o) {
    pricing::ThetaSpec theta;
    const auto samples = make_kernel(o, theta);
    io::write_kernel_csv(fs::path(o.out) / "kernel.csv", samples);
    std::vector<double> phis(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) phis[i] = samples[i].phi_T;
    const MeanSE m = mean_se(phis);
    json manifest = {{"schema_version", io::kSchemaVersion},
                     {"command", "kernel sample"},
                     {"theta", o.theta},
                     {"n_steps", o.steps},
                     {"n_paths", o.paths},
                     {"seed", o.seed},
                     {"mean_phi", m.mean},
                     {"se_phi", m.se},
                     {"half_square_integral", 0.5 * theta.square_integral()}};
    io::write_json(fs::path(o.out) / "manifest.json", manifest);
    return kExitOk;
}

int cmd_kernel_entropy(const Options& o) {
    pricing::ThetaSpec theta;
    const auto samples = make_kernel(o, theta);
    const auto dir = o.direction == "star" ? pricing::EntropyDirection::StarGivenBase
                     : o.direction == "base"
                         ? pricing::EntropyDirection::BaseGivenStar
                         : throw std::invalid_argument("invalid-config: direction must be star|base");
    const auto est = pricing::relative_entropy(samples, dir);
    json report = {{"schema_version", io::kSchemaVersion},
                   {"command", "kernel entropy"},
                   {"theta", o.theta},
                   {"direction", o.direction},
                   {"n_steps", o.steps},
                   {"n_paths", o.paths},
                   {"seed", o.seed},
                   {"entropy", est.value},
                   {"se", est.se},
                   {"diverged", est.diverged}};
    io::write_json(fs::path(o.out) / "entropy.json", report);
    std::cout << est.value << " +- " << est.se << (est.diverged ? " (diverged)" : "") << "\n";
    return est.diverged ? kExitFlagged : kExitOk;
}

int cmd_optimize(const Options& o) {
    pricing::ThetaSpec theta;
    const auto samples = make_kernel(o, theta);
    utility::OptimalProfile prof;
    json params;
    if (o.utility == "exponential") {
        prof = utility::optimal_profile_exponential(o.beta, o.w, samples);
        params["beta"] = o.beta;
    } else if (o.utility == "power") {
        prof = utility::optimal_profile_power(o.gamma, o.w, samples);
        params["gamma"] = o.gamma;
    } else if (o.utility == "log") {
        prof = utility::optimal_profile_log(o.w, samples);
    } else {
        throw std::invalid_argument("invalid-config: utility must be exponential|power|log");
    }
    json report = {{"schema_version", io::kSchemaVersion},
                   {"command", "optimize"},
                   {"utility", o.utility},
                   {"params", params},
                   {"theta", o.theta},
                   {"w", o.w},
                   {"n_steps", o.steps},
                   {"n_paths", o.paths},
                   {"seed", o.seed},
                   {"c_star", prof.c_star},
                   {"expected_utility", prof.expected_utility.mean},
                   {"SE", prof.expected_utility.se},
                   {"closed_form", prof.closed_form},
                   {"budget_residual", prof.budget_residual},
                   {"entropy", prof.entropy},
                   {"diverged", prof.diverged}};
    io::write_json(fs::path(o.out) / "optimize.json", report);
    return prof.diverged ? kExitFlagged : kExitOk;
}

int cmd_replicate(const Options& o) {
    if (o.target != "self")
        throw std::invalid_argument("invalid-config: only --target self is supported");
    const auto sched = strategy::StrategySchedule::dyadic(o.levels);
    gauss::ExactSampler sampler(gauss::GaussianModel::fbm(o.hurst), o.steps);
    const SamplePath g = sampler.sample_one(o.seed, 0);
    auto [psi, st] = strategy::construct_strategy(g, g, sched);
    const double alpha = frac::default_alpha_for(o.hurst);
    const auto norms = strategy::norm_decay_check(psi, sched, alpha);

    json levels_doc = json::array();
    for (int n = 2; n <= o.levels; ++n) {
        const auto [phi1, to_final] = strategy::replication_error(st, g.values.back(), n);
        const auto& rec = st.intervals[static_cast<std::size_t>(n - 2)];
        levels_doc.push_back({{"level", n},
                              {"case", std::string(1, rec.case_taken)},
                              {"tau", rec.tau},
                              {"hit", rec.hit},
                              {"never_hit", rec.never_hit},
                              {"phi1_residual", phi1},
                              {"distance_to_final", to_final},
                              {"chain_rel_error", rec.chain_rel_error},
                              {"tail_norm", norms[static_cast<std::size_t>(n - 1)]}});
    }
    json artifact = {{"schema_version", io::kSchemaVersion},
                     {"command", "replicate"},
                     {"hurst", o.hurst},
                     {"levels", o.levels},
                     {"n_steps", o.steps},
                     {"seed", o.seed},
                     {"alpha", alpha},
                     {"v_final", st.v_final},
                     {"target_final", st.xi.back()},
                     {"any_never_hit", st.any_never_hit},
                     {"per_level", levels_doc}};
    io::write_json(fs::path(o.out) / "replicate.json", artifact);
    io::write_paths_csv(fs::path(o.out) / "psi.csv", {psi});
    return st.any_never_hit ? kExitFlagged : kExitOk;
}

int cmd_report(const Options& o) {
    if (o.input.empty()) throw std::invalid_argument("invalid-config: report needs --input dir");
    std::vector<json> docs;
    if (fs::is_directory(o.input)) {
        for (const auto& e : fs::recursive_directory_iterator(o.input))
            if (e.is_regular_file() && e.path().extension() == ".json")
                docs.push_back(io::read_json(e.path()));
    }
    std::erase_if(docs, [](const json& d) { return !d.contains("command"); });
    if (docs.empty()) throw std::runtime_error("missing-artifact: no run artifacts under " + o.input);
    std::sort(docs.begin(), docs.end(), [](const json& a, const json& b) {
        return a.dump() < b.dump();  // deterministic row order
    });

    std::ostringstream opt_csv, rep_csv, ent_csv;
    opt_csv << "utility,theta,w,seed,c_star,expected_utility,SE,closed_form,budget_residual,entropy\n";
    rep_csv << "seed,level,case,phi1_residual,distance_to_final,tail_norm\n";
    ent_csv << "theta,direction,seed,entropy,SE,diverged\n";
    int n_opt = 0, n_rep = 0, n_ent = 0;
    for (const auto& d : docs) {
        const std::string cmd = d.at("command");
        if (cmd == "optimize") {
            ++n_opt;
            opt_csv << d.at("utility").get<std::string>() << ',' << d.at("theta").get<std::string>()
                    << ',' << d.at("w").dump() << ',' << d.at("seed").dump() << ','
                    << d.at("c_star").dump() << ',' << d.at("expected_utility").dump() << ','
                    << d.at("SE").dump() << ',' << d.at("closed_form").dump() << ','
                    << d.at("budget_residual").dump() << ',' << d.at("entropy").dump() << '\n';
        } else if (cmd == "replicate") {
            ++n_rep;
            for (const auto& lv : d.at("per_level"))
                rep_csv << d.at("seed").dump() << ',' << lv.at("level").dump() << ','
                        << lv.at("case").get<std::string>() << ',' << lv.at("phi1_residual").dump()
                        << ',' << lv.at("distance_to_final").dump() << ','
                        << lv.at("tail_norm").dump() << '\n';
        } else if (cmd == "kernel entropy") {
            ++n_ent;
            ent_csv << d.at("theta").get<std::string>() << ','
                    << d.at("direction").get<std::string>() << ',' << d.at("seed").dump() << ','
                    << d.at("entropy").dump() << ',' << d.at("se").dump() << ','
                    << d.at("diverged").dump() << '\n';
        }
    }
    if (n_opt) io::atomic_write(fs::path(o.out) / "optimize_table.csv", opt_csv.str());
    if (n_rep) io::atomic_write(fs::path(o.out) / "replication_table.csv", rep_csv.str());
    if (n_ent) io::atomic_write(fs::path(o.out) / "entropy_table.csv", ent_csv.str());
    std::cout << "aggregated " << n_opt << " optimize, " << n_rep << " replicate, " << n_ent
              << " entropy artifacts\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    Options o;
    CLI::App app{"Gaussian-market simulation, pricing and replication toolkit"};
    app.require_subcommand(1);

    auto add_common = [&](CLI::App* c) {
        c->add_option("--steps", o.steps);
        c->add_option("--paths", o.paths);
        c->add_option("--seed", o.seed)->envname("WIENERLAB_SEED");
        c->add_option("--workers", o.workers);
        c->add_option("--out", o.out);
        c->add_option("--config", o.config);
        return c;
    };

    CLI::App* sim = add_common(app.add_subcommand("simulate", "sample Gaussian process paths"));
    sim->add_option("--model", o.model);
    sim->add_option("--hurst", o.hurst);
    sim->add_option("--hurst2", o.hurst2);
    sim->add_option("--bifrac-k", o.bifrac_k);
    sim->add_option("--a", o.a);
    sim->add_option("--b", o.b);
    sim->add_option("--sigma", o.sigma);
    sim->add_option("--y0", o.y0);

    CLI::App* fr = app.add_subcommand("frac", "fractional calculus on tabulated functions");
    fr->require_subcommand(1);
    CLI::App* frd = add_common(fr->add_subcommand("deriv", "Riemann-Liouville derivative"));
    frd->add_option("--alpha", o.alpha);
    frd->add_option("--order", o.order);
    frd->add_option("--input", o.input);
    CLI::App* fri = add_common(fr->add_subcommand("integrate", "pathwise integral of f against g"));
    fri->add_option("--alpha", o.alpha);
    fri->add_option("--input", o.input);
    fri->add_option("--against", o.against);

    CLI::App* co = add_common(app.add_subcommand("clark-ocone", "representation integrands"));
    co->add_option("--functional", o.functional);

    CLI::App* ker = app.add_subcommand("kernel", "pricing kernel sampling and entropy");
    ker->require_subcommand(1);
    CLI::App* ks = add_common(ker->add_subcommand("sample", "sample phi(T)"));
    ks->add_option("--theta", o.theta);
    CLI::App* ke = add_common(ker->add_subcommand("entropy", "relative entropy estimate"));
    ke->add_option("--theta", o.theta);
    ke->add_option("--direction", o.direction);

    CLI::App* opt = add_common(app.add_subcommand("optimize", "optimal terminal profile"));
    opt->add_option("--utility", o.utility);
    opt->add_option("--beta", o.beta);
    opt->add_option("--gamma", o.gamma);
    opt->add_option("--w", o.w);
    opt->add_option("--theta", o.theta);

    CLI::App* rep = add_common(app.add_subcommand("replicate", "inductive replication run"));
    rep->add_option("--target", o.target);
    rep->add_option("--hurst", o.hurst);
    rep->add_option("--levels", o.levels);

    CLI::App* rpt = add_common(app.add_subcommand("report", "aggregate run artifacts"));
    rpt->add_option("--input", o.input);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        CLI::App* active = app.get_subcommands().front();
        CLI::App* leaf = active->get_subcommands().empty() ? active : active->get_subcommands().front();
        if (!o.config.empty()) apply_config(io::read_json(o.config), leaf, o);

        // fail-fast validation shared by the sampling commands
        if (o.steps < 2 || o.steps > (1u << 22))
            throw std::invalid_argument("invalid-config: steps out of range");
        if (o.paths < 1 || o.paths > 2000000)
            throw std::invalid_argument("invalid-config: paths out of range");
        if (o.workers < 1) o.workers = 1;

        const std::string name = active->get_name();
        if (name == "simulate") return cmd_simulate(o);
        if (name == "frac")
            return leaf->get_name() == "deriv" ? cmd_frac_deriv(o) : cmd_frac_integrate(o);
        if (name == "clark-ocone") return cmd_clark_ocone(o);
        if (name == "kernel")
            return leaf->get_name() == "sample" ? cmd_kernel_sample(o) : cmd_kernel_entropy(o);
        if (name == "optimize") return cmd_optimize(o);
        if (name == "replicate") return cmd_replicate(o);
        if (name == "report") return cmd_report(o);
        throw std::logic_error("unknown-subcommand");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
}
