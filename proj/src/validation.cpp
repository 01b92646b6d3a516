#include "qemlab/validation.hpp"

#include <cmath>

#include "qemlab/emulator.hpp"
#include "qemlab/errors.hpp"
#include "qemlab/noise.hpp"
#include "qemlab/numeric.hpp"
#include "qemlab/profiler.hpp"

namespace qemlab {

namespace {

Eigen::RowVectorXd full_softmax(const Eigen::RowVectorXd& x) {
    return softmax(x);
}

Eigen::MatrixXd random_rotation(Eigen::Index d, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd g(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) g(i, j) = gauss(rng);
    return Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
}

Eigen::VectorXd random_unit(Eigen::Index d, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd v(d);
    do {
        for (Eigen::Index i = 0; i < d; ++i) v[i] = gauss(rng);
    } while (v.norm() == 0.0);
    return v / v.norm();
}

}  // namespace

SuiteResult validate_lipschitz(std::int64_t trials, std::uint64_t seed) {
    SuiteResult res{"lipschitz", trials, false, 0.0, 1.41422, "<=", {}};
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::int64_t t = 0; t < trials; ++t) {
        Rng rng = derived_rng(seed, static_cast<std::uint64_t>(t));
        const Eigen::Index k = 2 + static_cast<Eigen::Index>(unif(rng) * 63);
        Eigen::RowVectorXd x(k), y(k);
        const double scale = std::pow(10.0, 2.0 * unif(rng) - 1.0);
        for (Eigen::Index j = 0; j < k; ++j) x[j] = scale * gauss(rng);
        const double step = std::pow(10.0, -3.0 * unif(rng));
        for (Eigen::Index j = 0; j < k; ++j) y[j] = x[j] + step * gauss(rng);
        const double dist = (x - y).norm();
        if (dist == 0.0) continue;
        const double ratio = (full_softmax(x) - full_softmax(y)).norm() / dist;
        res.observed = std::max(res.observed, ratio);
    }
    res.pass = res.observed <= res.bound;
    return res;
}

SuiteResult validate_responsibility_error(std::int64_t trials_per_case, std::uint64_t seed) {
    SuiteResult res{"responsibility-error", 0, false, 0.0, 1.0, "<=", {}};
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (const double eps : {1e-3, 1e-2}) {
        for (const int k : {2, 8, 32}) {
            const double bound = std::sqrt(2.0 * k) * eps;
            double worst = 0.0;
            for (std::int64_t t = 0; t < trials_per_case; ++t) {
                Rng rng = derived_rng(seed ^ static_cast<std::uint64_t>(k * 1000 + eps * 1e6),
                                      static_cast<std::uint64_t>(t));
                Eigen::RowVectorXd exponents(k), perturbed(k);
                for (int j = 0; j < k; ++j) {
                    exponents[j] = 5.0 * gauss(rng);
                    perturbed[j] = exponents[j] + eps * (2.0 * unif(rng) - 1.0);
                }
                const double err = (full_softmax(exponents) - full_softmax(perturbed))
                                       .lpNorm<Eigen::Infinity>();
                worst = std::max(worst, err / bound);
                ++res.trials;
            }
            res.details["ratio_eps" + std::to_string(eps) + "_k" + std::to_string(k)] = worst;
            res.observed = std::max(res.observed, worst);
        }
    }
    res.pass = res.observed <= res.bound;
    return res;
}

SuiteResult validate_tomography(std::int64_t trials_per_case, std::uint64_t seed) {
    SuiteResult res{"tomography", 0, false, 1.0, 0.99, ">=", {}};
    for (const int d : {4, 16, 64}) {
        for (const double prec : {0.05, 0.1}) {
            std::int64_t ok_linf = 0, ok_l2 = 0;
            for (std::int64_t t = 0; t < trials_per_case; ++t) {
                Rng rng = derived_rng(seed ^ static_cast<std::uint64_t>(d * 100 + prec * 1000),
                                      static_cast<std::uint64_t>(t));
                const Eigen::VectorXd x = random_unit(d, rng);
                if (!tomography_linf(x, prec, rng).failed) ++ok_linf;
                if (!tomography_l2(x, prec, rng).failed) ++ok_l2;
                res.trials += 2;
            }
            const double rate_linf = static_cast<double>(ok_linf) / trials_per_case;
            const double rate_l2 = static_cast<double>(ok_l2) / trials_per_case;
            const std::string tag = "d" + std::to_string(d) + "_p" + std::to_string(prec);
            res.details["linf_" + tag] = rate_linf;
            res.details["l2_" + tag] = rate_l2;
            res.observed = std::min({res.observed, rate_linf, rate_l2});
        }
    }

    // Norm/direction pipeline: a full vector recovered from an l2 direction
    // estimate and a relative norm estimate within sqrt(eta)(eps_a + eps_b).
    const double eta_cap = 10.0, eps_tom = 0.05, eps_norm = 0.05;
    std::int64_t ok_pipe = 0;
    const std::int64_t pipe_trials = std::max<std::int64_t>(1, trials_per_case);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::int64_t t = 0; t < pipe_trials; ++t) {
        Rng rng = derived_rng(seed ^ 0xABCDULL, static_cast<std::uint64_t>(t));
        const Eigen::VectorXd dir = random_unit(16, rng);
        const double norm = 1.0 + (std::sqrt(eta_cap) - 1.0) * unif(rng);
        const Eigen::VectorXd c = norm * dir;
        const VectorEstimate tom = tomography_l2(dir, eps_tom, rng);
        const double norm_hat = norm * (1.0 + eps_norm * (2.0 * unif(rng) - 1.0));
        const Eigen::VectorXd c_hat = norm_hat * tom.value;
        if ((c_hat - c).norm() <= std::sqrt(eta_cap) * (eps_norm + eps_tom)) ++ok_pipe;
        ++res.trials;
    }
    const double rate_pipe = static_cast<double>(ok_pipe) / pipe_trials;
    res.details["pipeline_eta10"] = rate_pipe;
    res.observed = std::min(res.observed, rate_pipe);
    res.pass = res.observed >= res.bound;
    return res;
}

SuiteResult validate_amplitude(std::int64_t trials_per_case, std::uint64_t seed) {
    SuiteResult res{"amplitude", 0, false, 1.0, 8.0 / (M_PI * M_PI), ">=", {}};
    double min_boosted = 1.0;
    for (const double a : {0.1, 0.5, 0.9}) {
        for (const std::int64_t M : {16, 64, 256}) {
            const double bound = amplitude_error_bound(a, M);
            std::int64_t ok_raw = 0, ok_boost = 0;
            for (std::int64_t t = 0; t < trials_per_case; ++t) {
                Rng rng = derived_rng(seed ^ (static_cast<std::uint64_t>(M) << 8) ^
                                          static_cast<std::uint64_t>(a * 100),
                                      static_cast<std::uint64_t>(t));
                if (!amplitude_estimate(a, M, rng).failed) ++ok_raw;
                const double med =
                    median_boost([&] { return amplitude_estimate(a, M, rng).value; }, 15);
                if (std::abs(med - a) <= bound) ++ok_boost;
                res.trials += 1;
            }
            const double rate_raw = static_cast<double>(ok_raw) / trials_per_case;
            const double rate_boost = static_cast<double>(ok_boost) / trials_per_case;
            const std::string tag =
                "a" + std::to_string(a).substr(0, 3) + "_M" + std::to_string(M);
            res.details["raw_" + tag] = rate_raw;
            res.details["boost15_" + tag] = rate_boost;
            res.observed = std::min(res.observed, rate_raw);
            min_boosted = std::min(min_boosted, rate_boost);
        }
    }
    res.details["min_boosted_rate"] = min_boosted;
    res.pass = res.observed >= res.bound && min_boosted >= 0.999;
    return res;
}

SuiteResult validate_quadratic_form(std::int64_t trials, std::uint64_t seed) {
    SuiteResult res{"quadratic-form", 0, false, 0.0, 1.0, "<=", {}};
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Fixed case: v=(1,1), Sigma=diag(1,0.5), inverse, eps=0.01, truth 3.
    {
        const Covariance sigma = Covariance::diagonal(Eigen::Vector2d(1.0, 0.5));
        Eigen::VectorXd v(2);
        v << 1.0, 1.0;
        double worst = 0.0;
        for (std::int64_t t = 0; t < trials; ++t) {
            Rng rng = derived_rng(seed, static_cast<std::uint64_t>(t));
            const ScalarEstimate e = quadratic_form_estimate(v, sigma, true, 0.01, rng);
            worst = std::max(worst, std::abs(e.value - 3.0) / e.error_budget);
            ++res.trials;
        }
        res.details["fixed_case_ratio"] = worst;
        res.observed = std::max(res.observed, worst);
    }

    for (std::int64_t t = 0; t < trials; ++t) {
        Rng rng = derived_rng(seed ^ 0x51ULL, static_cast<std::uint64_t>(t));
        const Eigen::Index d = 2 + static_cast<Eigen::Index>(unif(rng) * 6);
        Eigen::VectorXd evals(d);
        for (Eigen::Index i = 0; i < d; ++i) evals[i] = 0.05 + 0.95 * unif(rng);
        evals[0] = 1.0;  // spectral norm exactly one
        const Eigen::MatrixXd q = random_rotation(d, rng);
        const Covariance sigma = Covariance::full(q * evals.asDiagonal() * q.transpose());
        Eigen::VectorXd v(d);
        for (Eigen::Index i = 0; i < d; ++i) v[i] = 2.0 * gauss(rng);
        const bool inverse = unif(rng) < 0.5;
        const double eps = 0.05;
        const ScalarEstimate e = quadratic_form_estimate(v, sigma, inverse, eps, rng);
        const double truth = v.dot(sigma.apply(v, inverse));
        if (e.error_budget > 0.0)
            res.observed = std::max(res.observed, std::abs(e.value - truth) / e.error_budget);
        ++res.trials;
    }
    res.pass = res.observed <= res.bound;
    return res;
}

SuiteResult validate_noise_bounds(std::int64_t trials, std::uint64_t seed, double delta_theta,
                                  double delta_mu) {
    SuiteResult res{"noise-bounds", trials, false, 0.0, 1.0, "<=", {}};
    const int k = 16, d = 40;
    const double eta_val = 10.0;
    NoiseSpec spec;
    spec.delta_theta = delta_theta;
    spec.delta_mu = delta_mu;
    spec.sigma_floor = 0.07;

    Rng model_rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd theta(k);
    for (int j = 0; j < k; ++j) theta[j] = 0.2 + unif(model_rng);
    theta /= theta.sum();
    Eigen::MatrixXd means(k, d);
    for (int j = 0; j < k; ++j)
        for (int i = 0; i < d; ++i) means(j, i) = 3.0 * gauss(model_rng);
    std::vector<Covariance> covs;
    for (int j = 0; j < k; ++j) {
        Eigen::VectorXd v(d);
        for (int i = 0; i < d; ++i) v[i] = 0.1 + 1.9 * unif(model_rng);
        covs.push_back(Covariance::diagonal(std::move(v)));
    }
    const GmmParams params(theta, means, covs);

    // Observed-over-allowed ratio; a zero budget demands a zero distance.
    auto ratio = [](double dist, double budget) {
        if (budget > 0.0) return dist / budget;
        return dist == 0.0 ? 0.0 : 2.0;
    };
    for (std::int64_t t = 0; t < trials; ++t) {
        Rng rng = derived_rng(seed, static_cast<std::uint64_t>(t));
        ApplyStats stats;
        const GmmParams noisy = apply_noise(params, spec, eta_val, rng, &stats);
        const BoundsReport rep = verify_bounds(params, noisy, spec, eta_val, &stats);
        if (!rep.pass) {
            res.observed = 2.0;
            break;
        }
        res.observed = std::max(
            res.observed,
            std::max({ratio(rep.theta_dist, spec.delta_theta), ratio(rep.max_mean_dist, spec.delta_mu),
                      ratio(rep.max_cov_dist_fro, spec.delta_mu * std::sqrt(eta_val))}));
    }
    res.details["k"] = k;
    res.details["d"] = d;
    res.details["eta"] = eta_val;
    res.pass = res.observed <= res.bound;
    return res;
}

SuiteResult validate_logdet(int matrices, std::uint64_t seed) {
    SuiteResult res{"logdet", matrices, false, 0.0, 0.9, ">=", {}};
    const int d = 50;
    const double eps = 0.5, delta = 0.1;
    int ok = 0;
    double max_err = 0.0;
    for (int m = 0; m < matrices; ++m) {
        Rng rng = derived_rng(seed, static_cast<std::uint64_t>(m));
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        Eigen::VectorXd evals(d);
        for (int i = 0; i < d; ++i) evals[i] = 0.1 + 0.8 * unif(rng);
        const Eigen::MatrixXd q = random_rotation(d, rng);
        const Eigen::MatrixXd sigma = q * evals.asDiagonal() * q.transpose();
        const double exact = logdet_exact(sigma);
        const double est = logdet_chebyshev(sigma, eps, delta, rng);
        const double err = std::abs(est - exact);
        max_err = std::max(max_err, err);
        if (err <= eps) ++ok;
    }
    res.observed = static_cast<double>(ok) / matrices;
    res.details["max_abs_error"] = max_err;
    res.details["eps"] = eps;
    res.pass = res.observed >= res.bound;
    return res;
}

SuiteResult run_suite(const std::string& name, std::int64_t trials, std::uint64_t seed) {
    // Rate-style suites compare empirical frequencies against fixed
    // confidence thresholds; too few trials cannot resolve them.
    auto at_least = [&](std::int64_t minimum, std::int64_t fallback) {
        if (trials <= 0) return fallback;
        if (trials < minimum)
            throw config_error(name + " needs at least " + std::to_string(minimum) + " trials");
        return trials;
    };
    if (name == "lipschitz") return validate_lipschitz(trials > 0 ? trials : 10000, seed);
    if (name == "responsibility-error")
        return validate_responsibility_error(trials > 0 ? trials : 10000, seed);
    if (name == "tomography") return validate_tomography(at_least(500, 1000), seed);
    if (name == "amplitude") return validate_amplitude(at_least(2000, 10000), seed);
    if (name == "quadratic-form") return validate_quadratic_form(trials > 0 ? trials : 1000, seed);
    if (name == "noise-bounds") return validate_noise_bounds(trials > 0 ? trials : 1000, seed);
    if (name == "logdet") return validate_logdet(trials > 0 ? static_cast<int>(trials) : 20, seed);
    throw config_error("unknown suite name: " + name);
}

}  // namespace qemlab
