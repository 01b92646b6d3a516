#include "qemlab/commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "qemlab/cost_model.hpp"
#include "qemlab/csv.hpp"
#include "qemlab/em.hpp"
#include "qemlab/errors.hpp"
#include "qemlab/model_io.hpp"
#include "qemlab/synth.hpp"
#include "qemlab/validation.hpp"

namespace qemlab {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
}

std::pair<std::string, std::string> parse_kv(const std::string& text, const std::string& where) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw config_error(where + ": expected key=value, got '" + text + "'");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty()) throw config_error(where + ": empty key in '" + text + "'");
    return {key, value};
}

}  // namespace

RunConfig RunConfig::make(const std::optional<std::string>& config_path,
                          const std::vector<std::string>& overrides,
                          const std::vector<std::string>& allowed_keys) {
    RunConfig cfg;
    std::vector<std::string> allowed = allowed_keys;
    allowed.push_back("seed");
    allowed.push_back("out");

    if (config_path) {
        std::ifstream in(*config_path);
        if (!in) throw config_error("cannot open config " + *config_path);
        std::string line;
        long line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto [key, value] =
                parse_kv(line, *config_path + ":" + std::to_string(line_no));
            cfg.kv_[key] = value;
        }
    }
    for (const auto& o : overrides) {
        const auto [key, value] = parse_kv(o, "--set");
        cfg.kv_[key] = value;
    }
    for (const auto& [key, value] : cfg.kv_)
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw config_error("unknown config key: " + key);
    return cfg;
}

std::string RunConfig::get_str(const std::string& key, const std::string& fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

double RunConfig::get_num(const std::string& key, double fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    char* end = nullptr;
    const double v = std::strtod(it->second.c_str(), &end);
    if (end == it->second.c_str() || *end != '\0')
        throw config_error("key " + key + ": bad number '" + it->second + "'");
    return v;
}

std::int64_t RunConfig::get_int(const std::string& key, std::int64_t fallback) const {
    const double v = get_num(key, static_cast<double>(fallback));
    return static_cast<std::int64_t>(v);
}

std::uint64_t RunConfig::seed() const {
    const auto it = kv_.find("seed");
    if (it == kv_.end()) return 1;
    return std::stoull(it->second);
}

std::string RunConfig::out_dir() const { return get_str("out", "."); }

namespace {

std::string out_path(const RunConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.out_dir());
    return (std::filesystem::path(cfg.out_dir()) / name).string();
}

CovarianceKind parse_kind(const RunConfig& cfg) {
    return covariance_kind_from_string(cfg.get_str("kind", "diagonal"));
}

nlohmann::ordered_json covariances_to_json(const GmmParams& p) {
    nlohmann::ordered_json covs = nlohmann::ordered_json::array();
    for (const auto& c : p.covariances()) {
        switch (c.kind()) {
            case CovarianceKind::Full:
            case CovarianceKind::Tied: {
                nlohmann::ordered_json rows = nlohmann::ordered_json::array();
                const Eigen::MatrixXd m = c.dense();
                for (Eigen::Index i = 0; i < m.rows(); ++i) {
                    nlohmann::ordered_json row = nlohmann::ordered_json::array();
                    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
                    rows.push_back(std::move(row));
                }
                covs.push_back(std::move(rows));
                break;
            }
            case CovarianceKind::Diagonal: {
                nlohmann::ordered_json row = nlohmann::ordered_json::array();
                for (Eigen::Index i = 0; i < c.variances().size(); ++i)
                    row.push_back(c.variances()[i]);
                covs.push_back(std::move(row));
                break;
            }
            default:
                covs.push_back(c.spherical_variance());
        }
    }
    return covs;
}

}  // namespace

void cmd_synth(const RunConfig& cfg) {
    SynthSpec spec;
    spec.k = static_cast<int>(cfg.get_int("k", 2));
    spec.d = static_cast<int>(cfg.get_int("d", 2));
    spec.n = cfg.get_int("n", 1000);
    spec.separation = cfg.get_num("separation", 6.0);
    spec.kind = parse_kind(cfg);
    spec.beta = cfg.get_num("beta", 1.0);
    spec.seed = cfg.seed();
    spec.mean_norm_lo = cfg.get_num("mean_norm_lo", 4.0);
    spec.mean_norm_hi = cfg.get_num("mean_norm_hi", 21.0);
    spec.var_lo = cfg.get_num("var_lo", 0.5);
    spec.var_hi = cfg.get_num("var_hi", 1.5);

    const SynthResult result = synth_mixture(spec);
    write_csv(out_path(cfg, "dataset.csv"), result.points);

    nlohmann::ordered_json truth;
    truth["schema"] = 1;
    truth["k"] = spec.k;
    truth["d"] = spec.d;
    truth["n"] = spec.n;
    truth["separation"] = spec.separation;
    truth["kind"] = to_string(spec.kind);
    truth["seed"] = spec.seed;
    nlohmann::ordered_json theta = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < result.truth.k(); ++j) theta.push_back(result.truth.theta()[j]);
    truth["theta"] = std::move(theta);
    nlohmann::ordered_json means = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < result.truth.k(); ++j) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (Eigen::Index i = 0; i < result.truth.d(); ++i) row.push_back(result.truth.means()(j, i));
        means.push_back(std::move(row));
    }
    truth["means"] = std::move(means);
    truth["covariances"] = covariances_to_json(result.truth);
    truth["labels"] = result.labels;
    write_json_file(out_path(cfg, "truth.json"), truth);
}

namespace {

FitConfig fit_config_from(const RunConfig& cfg, bool& with_noise, NoiseSpec& noise) {
    FitConfig fc;
    if (!cfg.has("k")) throw config_error("missing required key: k");
    fc.k = static_cast<int>(cfg.get_int("k", 1));
    fc.kind = parse_kind(cfg);
    fc.beta = cfg.get_num("beta", 1.0);
    fc.eps_tau = cfg.get_num("eps_tau", 7e-3);
    fc.max_iters = static_cast<int>(cfg.get_int("max_iters", 70));
    fc.reg_floor = cfg.get_num("reg_floor", 0.0);
    fc.seed = cfg.seed();

    const std::string init = cfg.get_str("init", "kmeanspp");
    if (init == "random")
        fc.init = InitStrategy::random_em();
    else if (init == "kmeanspp")
        fc.init = InitStrategy::kmeanspp(static_cast<int>(cfg.get_int("init_rounds", 5)));
    else if (init == "small_em")
        fc.init = InitStrategy::small_em(static_cast<int>(cfg.get_int("init_restarts", 3)),
                                         static_cast<int>(cfg.get_int("init_burn_iters", 5)));
    else if (init == "cem")
        fc.init = InitStrategy::cem();
    else
        throw config_error("unknown init strategy: " + init);

    const std::string estimator = cfg.get_str("estimator", "ml");
    if (estimator == "ml") {
        fc.estimator = Estimator::Ml;
    } else if (estimator == "map") {
        fc.estimator = Estimator::Map;
        if (cfg.has("alpha") || cfg.has("iota0") || cfg.has("nu0")) {
            MapPrior prior;
            prior.alpha = Eigen::VectorXd::Constant(fc.k, cfg.get_num("alpha", 1.0));
            prior.iota0 = cfg.get_num("iota0", 1.0);
            prior.nu0 = cfg.get_num("nu0", 0.0);  // m0 and S0 resolved at fit time
            fc.prior = std::move(prior);
        }
    } else {
        throw config_error("unknown estimator: " + estimator);
    }

    with_noise = cfg.has("delta_theta") || cfg.has("delta_mu");
    if (with_noise) {
        noise.delta_theta = cfg.get_num("delta_theta", 0.0);
        noise.delta_mu = cfg.get_num("delta_mu", 0.0);
        noise.sigma_floor = cfg.get_num("sigma_floor", 0.07);
        if (cfg.has("kappa_cap")) noise.kappa_cap = cfg.get_num("kappa_cap", 0.0);
        noise.trunc_sigma = cfg.get_num("trunc_sigma", 1.0);
    }
    return fc;
}

}  // namespace

void cmd_fit(const std::string& dataset_csv, const RunConfig& cfg) {
    const Dataset data(read_csv(dataset_csv));
    bool with_noise = false;
    NoiseSpec noise;
    FitConfig fc = fit_config_from(cfg, with_noise, noise);
    if (fc.prior && fc.prior->m0.size() == 0)
        fc.prior->m0 = data.points().colwise().mean().transpose();

    const FitResult result =
        fit(data, fc, with_noise ? std::optional<NoiseSpec>(noise) : std::nullopt);

    ModelFile model{result.params, result.iterations, result.converged, fc.seed, fc.beta};
    write_json_file(out_path(cfg, "model.json"), model_to_json(model));

    std::ofstream trace(out_path(cfg, "trace.csv"), std::ios::binary);
    if (!trace) throw config_error("cannot write trace.csv");
    trace << "iter,log_likelihood,mean_probability,wall_ms\n";
    for (const auto& rec : result.trace)
        trace << rec.iter << ',' << format_double(rec.log_likelihood) << ','
              << format_double(rec.mean_probability) << ',' << format_double(rec.wall_ms) << '\n';
}

namespace {

double vec_avg(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

double vec_max(const std::vector<double>& v) {
    return *std::max_element(v.begin(), v.end());
}

}  // namespace

void cmd_profile(const std::string& dataset_csv, const std::string& model_json,
                 const RunConfig& cfg) {
    const Dataset data(read_csv(dataset_csv));
    const ModelFile model = model_from_json(read_json_file(model_json));

    ProfileConfig pc;
    pc.sigma_threshold = cfg.get_num("sigma_threshold", 0.07);
    pc.logdet_eps = cfg.get_num("logdet_eps", 0.5);
    pc.logdet_delta = cfg.get_num("logdet_delta", 0.1);
    pc.seed = cfg.seed();
    pc.vprime_budget_bytes = cfg.get_int("vprime_budget_bytes", pc.vprime_budget_bytes);
    const bool include_v_prime = cfg.get_int("include_v_prime", 0) != 0;

    const ProfileReport rep = profile(data, model.params, include_v_prime, pc);
    write_json_file(out_path(cfg, "profile.json"), profile_to_json(rep));

    std::ofstream table(out_path(cfg, "table.txt"), std::ios::binary);
    if (!table) throw config_error("cannot write table.txt");
    char line[128];
    table << "parameter            avg         max\n";
    auto row = [&](const char* name, double avg, double max) {
        std::snprintf(line, sizeof(line), "%-18s %9.3f   %9.3f\n", name, avg, max);
        table << line;
    };
    row("||Sigma||_2", vec_avg(rep.spectral_norms), vec_max(rep.spectral_norms));
    row("|log det(Sigma)|", vec_avg(rep.log_abs_dets), vec_max(rep.log_abs_dets));
    row("kappa*(Sigma)", vec_avg(rep.kappa_sigma_thresholded), vec_max(rep.kappa_sigma_thresholded));
    row("mu(Sigma)", vec_avg(rep.mu_sigma), vec_max(rep.mu_sigma));
    row("mu(V)", rep.mu_V, rep.mu_V);
    row("kappa(V)", rep.kappa_V, rep.kappa_V);
    row("eta", rep.eta, rep.eta);
}

void cmd_cost(const std::string& profile_json, const RunConfig& cfg) {
    const ProfileReport rep = profile_from_json(read_json_file(profile_json));
    for (const char* key : {"delta_theta", "delta_mu", "eps_tau"})
        if (!cfg.has(key)) throw config_error(std::string("missing required error target: ") + key);

    CostOptions opt;
    opt.kappa_v_squared = cfg.get_int("kappa_v_squared", 1) != 0;
    opt.reduction = cfg.get_str("reduction", "max") == "mean" ? CostOptions::Reduction::Mean
                                                              : CostOptions::Reduction::Max;

    CostInputs in = cost_inputs_from_profile(rep, cfg.get_num("delta_theta", 0.0),
                                             cfg.get_num("delta_mu", 0.0),
                                             cfg.get_num("eps_tau", 0.0), opt.reduction);
    in.n = cfg.get_num("n", in.n);

    const bool map = cfg.get_str("estimator", "ml") == "map";
    const CostReport report = map ? map_iteration_cost(in, opt) : qem_iteration_cost(in, opt);
    write_json_file(out_path(cfg, "cost.json"), cost_to_json(report));

    const double n_lo = cfg.get_num("n_min", 1.0);
    const double n_hi = cfg.get_num("n_max", 1e12);
    const auto points = std::max<std::int64_t>(2, cfg.get_int("n_points", 25));
    const double quantum_max =
        std::max({report.t_theta, report.t_mu, report.t_sigma, report.t_ell});
    std::ofstream curves(out_path(cfg, "curves.csv"), std::ios::binary);
    if (!curves) throw config_error("cannot write curves.csv");
    curves << "n,classical,quantum_max_term\n";
    const double k = in.k, d = in.d;
    for (std::int64_t i = 0; i < points; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(points - 1);
        const double n = n_lo * std::pow(n_hi / n_lo, f);
        curves << format_double(n) << ',' << format_double(k * n * d * d) << ','
               << format_double(quantum_max) << '\n';
    }
}

void cmd_validate(const std::string& suite, const RunConfig& cfg) {
    const std::int64_t trials = cfg.get_int("trials", 0);
    const bool custom_deltas = cfg.has("delta_theta") || cfg.has("delta_mu");
    const SuiteResult res =
        suite == "noise-bounds" && custom_deltas
            ? validate_noise_bounds(trials > 0 ? trials : 1000, cfg.seed(),
                                    cfg.get_num("delta_theta", 0.038), cfg.get_num("delta_mu", 0.5))
            : run_suite(suite, trials, cfg.seed());
    nlohmann::ordered_json j;
    j["suite"] = res.suite;
    j["trials"] = res.trials;
    j["pass"] = res.pass;
    j["observed"] = res.observed;
    j["bound"] = res.bound;
    j["comparison"] = res.comparison;
    j["details"] = res.details;
    write_json_file(out_path(cfg, "validation.json"), j);
    if (!res.pass) throw domain_error("validation suite failed: " + suite);
}

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Gaussian-mixture EM lab: bounded-noise training emulation, "
                 "estimator contract checks, dataset profiling and runtime models"};
    app.require_subcommand(1);

    struct SubArgs {
        std::optional<std::string> config;
        std::vector<std::string> sets;
        std::optional<std::string> seed;
        std::optional<std::string> out;
        std::string input1, input2;
    };
    std::map<std::string, SubArgs> sub_args;

    auto add_common = [&](CLI::App* sub) {
        SubArgs& sa = sub_args[sub->get_name()];
        sub->add_option("--config", sa.config, "config file of key = value lines");
        sub->add_option("--set", sa.sets, "override key=value, repeatable")
            ->allow_extra_args(false);
        sub->add_option("--seed", sa.seed, "64-bit seed");
        sub->add_option("--out", sa.out, "output directory");
        return &sa;
    };

    auto* synth = app.add_subcommand("synth", "sample a ground-truth mixture to CSV");
    add_common(synth);
    auto* fit = app.add_subcommand("fit", "fit a mixture (optionally under the noise channel)");
    fit->add_option("dataset", sub_args["fit"].input1, "dataset CSV")->required();
    add_common(fit);
    auto* prof = app.add_subcommand("profile", "measure runtime-governing dataset parameters");
    prof->add_option("dataset", sub_args["profile"].input1, "dataset CSV")->required();
    prof->add_option("model", sub_args["profile"].input2, "model JSON")->required();
    add_common(prof);
    auto* cost = app.add_subcommand("cost", "evaluate per-iteration runtime expressions");
    cost->add_option("profile", sub_args["cost"].input1, "profile JSON")->required();
    add_common(cost);
    auto* val = app.add_subcommand("validate", "run a Monte-Carlo contract suite");
    val->add_option("suite", sub_args["validate"].input1,
                    "lipschitz | responsibility-error | tomography | amplitude | "
                    "quadratic-form | noise-bounds | logdet")
        ->required();
    add_common(val);

    std::vector<std::string> argv_copy = args;
    try {
        std::vector<const char*> argv;
        argv.push_back("qemlab");
        for (const auto& a : argv_copy) argv.push_back(a.c_str());
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        SubArgs& sa = sub_args[name];
        std::vector<std::string> overrides = sa.sets;
        if (sa.seed) overrides.push_back("seed=" + *sa.seed);
        if (sa.out) overrides.push_back("out=" + *sa.out);

        static const std::map<std::string, std::vector<std::string>> keys = {
            {"synth",
             {"k", "d", "n", "separation", "kind", "beta", "mean_norm_lo", "mean_norm_hi",
              "var_lo", "var_hi"}},
            {"fit",
             {"k", "kind", "beta", "eps_tau", "max_iters", "reg_floor", "init", "init_rounds",
              "init_restarts", "init_burn_iters", "estimator", "alpha", "iota0", "nu0",
              "delta_theta", "delta_mu", "sigma_floor", "kappa_cap", "trunc_sigma"}},
            {"profile",
             {"include_v_prime", "sigma_threshold", "logdet_eps", "logdet_delta",
              "vprime_budget_bytes"}},
            {"cost",
             {"delta_theta", "delta_mu", "eps_tau", "n", "n_min", "n_max", "n_points",
              "kappa_v_squared", "reduction", "estimator"}},
            {"validate", {"trials", "delta_theta", "delta_mu"}},
        };
        const RunConfig cfg = RunConfig::make(sa.config, overrides, keys.at(name));

        if (name == "synth")
            cmd_synth(cfg);
        else if (name == "fit")
            cmd_fit(sa.input1, cfg);
        else if (name == "profile")
            cmd_profile(sa.input1, sa.input2, cfg);
        else if (name == "cost")
            cmd_cost(sa.input1, cfg);
        else if (name == "validate")
            cmd_validate(sa.input1, cfg);
        return 0;
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace qemlab
