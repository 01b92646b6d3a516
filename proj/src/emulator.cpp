#include "qemlab/emulator.hpp"

#include <algorithm>
#include <cmath>

#include "qemlab/errors.hpp"
#include "qemlab/numeric.hpp"

namespace qemlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

// pmf of the M-point phase-estimation outcome at grid offset delta = omega - m/M.
// The expression is 1-periodic in delta, so any representative works.
double qpe_pmf(double delta, std::int64_t M) {
    const double s = std::sin(kPi * delta);
    if (s == 0.0) return 1.0;
    const double num = std::sin(kPi * static_cast<double>(M) * delta);
    const double r = num / (static_cast<double>(M) * s);
    return r * r;
}

// P(s) proportional to 1/s^2 over s >= 1, via a Pareto envelope.
std::int64_t zipf2_sample(Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (;;) {
        const double u = unif(rng);
        if (u == 0.0) continue;
        const double x = 1.0 / u;
        const auto s = static_cast<std::int64_t>(x);
        if (s < 1) continue;
        const double accept = (static_cast<double>(s) + 1.0) / (2.0 * static_cast<double>(s));
        if (unif(rng) < accept) return s;
    }
}

// Exact draw of the outcome index m for phase omega in [0, 1/2]. Enumerates
// small grids; otherwise rejection-samples around the nearest grid point with
// a 1/(4 j^2) tail envelope, so the cost is O(1) regardless of M.
std::int64_t qpe_sample(double omega, std::int64_t M, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (M <= 4096) {
        const double target = unif(rng);
        double acc = 0.0;
        std::int64_t last = M - 1;
        for (std::int64_t m = 0; m < M; ++m) {
            acc += qpe_pmf(omega - static_cast<double>(m) / static_cast<double>(M), M);
            if (acc >= target) return m;
        }
        return last;
    }

    const double scaled = omega * static_cast<double>(M);
    const auto mstar = static_cast<std::int64_t>(std::floor(scaled));
    const double tail_side = kPi * kPi / 24.0;  // sum of 1/(4 s^2)
    const double z_total = 4.0 + 2.0 * tail_side;
    for (;;) {
        const double u = unif(rng) * z_total;
        std::int64_t t;
        double envelope;
        if (u < 4.0) {
            t = static_cast<std::int64_t>(u) - 1;  // {-1, 0, 1, 2}
            envelope = 1.0;
        } else {
            const bool left = (u - 4.0) < tail_side;
            const std::int64_t s = zipf2_sample(rng);
            envelope = 1.0 / (4.0 * static_cast<double>(s) * static_cast<double>(s));
            t = left ? -1 - s : 2 + s;
        }
        if (t > M / 2 || t < -M / 2) continue;
        std::int64_t m = (mstar + t) % M;
        if (m < 0) m += M;
        const double p = qpe_pmf(omega - static_cast<double>(m) / static_cast<double>(M), M);
        if (unif(rng) * envelope <= p) return m;
    }
}

// Multinomial counts drawn as a chain of conditional binomials; the joint law
// equals N independent categorical draws.
Eigen::VectorXi multinomial_counts(std::int64_t N, const Eigen::VectorXd& probs, Rng& rng) {
    const Eigen::Index K = probs.size();
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(K);
    std::int64_t rem = N;
    double mass = 1.0;
    for (Eigen::Index i = 0; i < K && rem > 0; ++i) {
        if (i == K - 1 || mass <= probs[i]) {
            counts[i] = static_cast<int>(rem);
            rem = 0;
            break;
        }
        const double p = std::clamp(probs[i] / mass, 0.0, 1.0);
        std::binomial_distribution<std::int64_t> bin(rem, p);
        const std::int64_t c = bin(rng);
        counts[i] = static_cast<int>(c);
        rem -= c;
        mass -= probs[i];
    }
    return counts;
}

struct TomographyDraw {
    Eigen::VectorXd estimate;
    std::int64_t samples = 0;
};

// Shared two-round protocol: computational-basis magnitudes, interference
// signs against the uniform reference vector.
TomographyDraw tomography_draw(const Eigen::VectorXd& x, std::int64_t N, Rng& rng) {
    const Eigen::Index d = x.size();
    const Eigen::VectorXd probs = x.array().square();

    const Eigen::VectorXi mag_counts = multinomial_counts(N, probs, rng);
    Eigen::VectorXd magnitude(d);
    for (Eigen::Index i = 0; i < d; ++i)
        magnitude[i] = std::sqrt(static_cast<double>(mag_counts[i]) / static_cast<double>(N));

    const double u = 1.0 / std::sqrt(static_cast<double>(d));
    Eigen::VectorXd interf(2 * d);
    for (Eigen::Index i = 0; i < d; ++i) {
        interf[2 * i] = (x[i] + u) * (x[i] + u) / 4.0;
        interf[2 * i + 1] = (x[i] - u) * (x[i] - u) / 4.0;
    }
    const Eigen::VectorXi sign_counts = multinomial_counts(N, interf, rng);

    Eigen::VectorXd estimate(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const double sign = sign_counts[2 * i] >= sign_counts[2 * i + 1] ? 1.0 : -1.0;
        estimate[i] = sign * magnitude[i];
    }
    const double norm = estimate.norm();
    if (norm > 0.0) estimate /= norm;
    return {std::move(estimate), 2 * N};
}

void check_unit_input(const Eigen::VectorXd& x, double precision) {
    if (x.size() < 1) throw domain_error("tomography input is empty");
    if (std::abs(x.norm() - 1.0) > 1e-9) throw domain_error("tomography input must be a unit vector");
    if (!(precision > 0.0 && precision < 1.0))
        throw domain_error("tomography precision must lie in (0,1)");
}

Covariance scaled_covariance(const Covariance& cov, double inv_scale) {
    switch (cov.kind()) {
        case CovarianceKind::Diagonal:
            return Covariance::diagonal(cov.variances() * inv_scale);
        case CovarianceKind::Spherical:
        case CovarianceKind::SoftKMeans:
            return Covariance::spherical(cov.spherical_variance() * inv_scale, cov.dim());
        case CovarianceKind::Full:
        case CovarianceKind::Tied:
            return Covariance::full(cov.dense() * inv_scale);
    }
    return cov;
}

}  // namespace

VectorEstimate tomography_linf(const Eigen::VectorXd& x, double delta, Rng& rng,
                               const EmulatorConfig& cfg) {
    check_unit_input(x, delta);
    const double d = static_cast<double>(x.size());
    const auto N = static_cast<std::int64_t>(
        std::max(1.0, std::ceil(cfg.tomography_constant * std::log(d) / (delta * delta))));
    TomographyDraw draw = tomography_draw(x, N, rng);
    VectorEstimate est;
    est.error_budget = delta;
    est.samples_used = draw.samples;
    est.failed = (draw.estimate - x).lpNorm<Eigen::Infinity>() > delta;
    est.value = std::move(draw.estimate);
    return est;
}

VectorEstimate tomography_l2(const Eigen::VectorXd& x, double eps, Rng& rng,
                             const EmulatorConfig& cfg) {
    check_unit_input(x, eps);
    const double d = static_cast<double>(x.size());
    const auto N = static_cast<std::int64_t>(
        std::max(1.0, std::ceil(cfg.tomography_constant * d * std::log(d) / (eps * eps))));
    TomographyDraw draw = tomography_draw(x, N, rng);
    VectorEstimate est;
    est.error_budget = eps;
    est.samples_used = draw.samples;
    est.failed = (draw.estimate - x).norm() > eps;
    est.value = std::move(draw.estimate);
    return est;
}

Eigen::VectorXd amplitude_outcome_distribution(double a, std::int64_t M) {
    if (!(a >= 0.0 && a <= 1.0)) throw domain_error("amplitude outside [0,1]");
    if (M < 2) throw domain_error("grid size must be at least 2");
    const double omega = std::asin(std::sqrt(a)) / kPi;
    Eigen::VectorXd pmf(M);
    for (std::int64_t m = 0; m < M; ++m)
        pmf[m] = qpe_pmf(omega - static_cast<double>(m) / static_cast<double>(M), M);
    return pmf;
}

double amplitude_error_bound(double a, std::int64_t M) {
    const double Md = static_cast<double>(M);
    return 2.0 * kPi * std::sqrt(a * (1.0 - a)) / Md + kPi * kPi / (Md * Md);
}

ScalarEstimate amplitude_estimate(double a, std::int64_t M, Rng& rng) {
    if (!(a >= 0.0 && a <= 1.0)) throw domain_error("amplitude outside [0,1]");
    if (M < 2) throw domain_error("grid size must be at least 2");
    const double omega = std::asin(std::sqrt(a)) / kPi;
    const std::int64_t m = qpe_sample(omega, M, rng);
    const double angle = std::sin(kPi * static_cast<double>(m) / static_cast<double>(M));
    ScalarEstimate est;
    est.value = angle * angle;
    est.error_budget = amplitude_error_bound(a, M);
    est.samples_used = M;
    est.failed = std::abs(est.value - a) > est.error_budget;
    return est;
}

double median_boost(const std::function<double()>& estimator, int runs) {
    if (runs < 1 || runs % 2 == 0) throw domain_error("median boosting needs an odd, positive run count");
    std::vector<double> vals(runs);
    for (int r = 0; r < runs; ++r) vals[r] = estimator();
    std::nth_element(vals.begin(), vals.begin() + runs / 2, vals.end());
    return vals[runs / 2];
}

ScalarEstimate quadratic_form_estimate(const Eigen::VectorXd& v, const Covariance& sigma,
                                       bool inverse, double eps, Rng& rng,
                                       const EmulatorConfig& cfg) {
    if (v.size() != sigma.dim()) throw domain_error("quadratic form dimension mismatch");
    if (eps < 0.0) throw domain_error("precision must be nonnegative");
    if (sigma.max_eigenvalue() > 1.0 + 1e-9)
        throw domain_error("quadratic form requires spectral norm at most 1");

    const double norm2 = v.squaredNorm();
    ScalarEstimate est;
    est.error_budget = eps * norm2;
    est.samples_used = 1;
    if (norm2 == 0.0) return est;

    const Eigen::VectorXd unit = v / std::sqrt(norm2);
    const double truth_unit = unit.dot(sigma.apply(unit, inverse));
    if (eps == 0.0) {
        est.value = truth_unit * norm2;
        return est;
    }

    const double scale = inverse ? sigma.min_eigenvalue() : 1.0;
    const double a = std::clamp(0.5 * (1.0 + scale * truth_unit), 0.0, 1.0);
    const double ae_target = 0.5 * eps * scale;
    const std::int64_t M =
        next_pow2(static_cast<std::int64_t>(std::ceil(cfg.grid_margin * kPi / ae_target)));

    std::int64_t used = 0;
    const double a_hat = median_boost(
        [&] {
            const ScalarEstimate draw = amplitude_estimate(a, M, rng);
            used += draw.samples_used;
            return draw.value;
        },
        cfg.median_runs);

    est.value = (2.0 * a_hat - 1.0) / scale * norm2;
    est.samples_used = used;
    est.failed = std::abs(est.value - truth_unit * norm2) > est.error_budget;
    return est;
}

namespace {

// One quadratic form against the rescaled covariance, to a given absolute
// error in the units of the original matrix.
ScalarEstimate scaled_form(const Eigen::VectorXd& w, const Covariance& scaled, double c,
                           double abs_err, Rng& rng, const EmulatorConfig& cfg) {
    const double n2 = w.squaredNorm();
    if (n2 == 0.0) return ScalarEstimate{0.0, 0.0, 1, false};
    // abs_err is the target for w' Sigma^{-1} w = (w' Sigma'^{-1} w) / c.
    const double rel = abs_err * c / n2;
    ScalarEstimate e = quadratic_form_estimate(w, scaled, true, rel, rng, cfg);
    e.value /= c;
    e.error_budget /= c;
    return e;
}

}  // namespace

ScalarEstimate gaussian_exponent_estimate(const Eigen::VectorXd& v, const Eigen::VectorXd& mu,
                                          const Covariance& sigma, double log_det_est, double eps1,
                                          Rng& rng, const EmulatorConfig& cfg) {
    if (v.size() != mu.size() || v.size() != sigma.dim())
        throw domain_error("gaussian exponent dimension mismatch");
    if (eps1 < 0.0) throw domain_error("precision must be nonnegative");
    const double d = static_cast<double>(v.size());
    const double truth =
        -0.5 * (sigma.quad_form(v - mu) + d * kLog2Pi + sigma.log_det());

    ScalarEstimate est;
    est.error_budget = 2.0 * eps1;
    est.samples_used = 1;
    if (eps1 == 0.0) {
        est.value = -0.5 * (sigma.quad_form(v - mu) + d * kLog2Pi + log_det_est);
        est.failed = std::abs(est.value - truth) > est.error_budget;
        return est;
    }

    const double c = sigma.max_eigenvalue();
    const Covariance scaled = scaled_covariance(sigma, 1.0 / c);

    // v'S^-1 v and mu'S^-1 mu to eps1/4 each; the cross term via polarization,
    // each polarized form to eps1/2 so the combined budget stays at eps1.
    const ScalarEstimate t_v = scaled_form(v, scaled, c, eps1 / 4.0, rng, cfg);
    const ScalarEstimate t_mu = scaled_form(mu, scaled, c, eps1 / 4.0, rng, cfg);
    const ScalarEstimate t_plus = scaled_form(v + mu, scaled, c, eps1 / 2.0, rng, cfg);
    const ScalarEstimate t_minus = scaled_form(v - mu, scaled, c, eps1 / 2.0, rng, cfg);

    const double cross = (t_plus.value - t_minus.value) / 4.0;
    const double quad = t_v.value - 2.0 * cross + t_mu.value;
    est.value = -0.5 * (quad + d * kLog2Pi + log_det_est);
    est.samples_used =
        t_v.samples_used + t_mu.samples_used + t_plus.samples_used + t_minus.samples_used;
    est.failed = std::abs(est.value - truth) > est.error_budget;
    return est;
}

VectorEstimate responsibility_estimate(const Eigen::VectorXd& v, const GmmParams& params,
                                       double eps1, Rng& rng, const EmulatorConfig& cfg) {
    if (v.size() != params.d()) throw domain_error("dataset/model dimension mismatch");
    if (eps1 < 0.0) throw domain_error("precision must be nonnegative");
    const Eigen::Index k = params.k();
    const double eps_g = eps1 / std::sqrt(2.0 * static_cast<double>(k));

    Eigen::RowVectorXd noisy(k), exact(k);
    std::int64_t used = 0;
    for (Eigen::Index j = 0; j < k; ++j) {
        const double log_theta = params.theta()[j] > 0.0
                                     ? std::log(params.theta()[j])
                                     : -std::numeric_limits<double>::infinity();
        const Eigen::VectorXd mu = params.means().row(j).transpose();
        exact[j] = log_theta + gaussian_log_pdf(v, mu, params.covariances()[j], params.log_dets()[j]);
        if (eps1 == 0.0) {
            noisy[j] = exact[j];
            used += 1;
        } else {
            const ScalarEstimate g = gaussian_exponent_estimate(v, mu, params.covariances()[j],
                                                                params.log_dets()[j], eps_g, rng, cfg);
            noisy[j] = log_theta + g.value;
            used += g.samples_used;
        }
    }

    VectorEstimate est;
    est.error_budget = eps1;
    est.samples_used = used;
    est.value = posterior_row(noisy).transpose();
    const Eigen::RowVectorXd truth = posterior_row(exact);
    est.failed = eps1 > 0.0 && (est.value.transpose() - truth).lpNorm<Eigen::Infinity>() > eps1;
    return est;
}

ComposeReport compose_error_claims(std::int64_t trials, double eta, double eps_a, double eps_b,
                                   Rng& rng) {
    if (trials < 1) throw domain_error("trials must be positive");
    if (!(eta >= 1.0)) throw domain_error("eta must be at least 1");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    ComposeReport rep;
    rep.trials = trials;

    for (std::int64_t t = 0; t < trials; ++t) {
        const Eigen::Index d = 2 + static_cast<Eigen::Index>(unif(rng) * 15);
        Eigen::VectorXd x(d);
        for (Eigen::Index i = 0; i < d; ++i) x[i] = gauss(rng);
        if (x.norm() == 0.0) continue;

        // Claim on normalized states: perturb until the angle stays acute.
        Eigen::VectorXd y;
        for (;;) {
            Eigen::VectorXd w(d);
            for (Eigen::Index i = 0; i < d; ++i) w[i] = gauss(rng);
            y = x + 0.5 * unif(rng) * x.norm() * w / std::max(w.norm(), 1e-300);
            if (y.norm() > 0.0 && x.dot(y) > 0.0) break;
        }
        const double diff = (x - y).norm();
        if (diff > 0.0) {
            const double lhs = (x.normalized() - y.normalized()).norm();
            const double bound = std::sqrt(2.0) * diff / x.norm();
            rep.max_angle_ratio = std::max(rep.max_angle_ratio, lhs / bound);
        }

        // Norm/direction composition at the declared budgets.
        Eigen::VectorXd dir(d);
        for (Eigen::Index i = 0; i < d; ++i) dir[i] = gauss(rng);
        dir.normalize();
        const double norm_c = 1.0 + (std::sqrt(eta) - 1.0) * unif(rng);
        const Eigen::VectorXd c = norm_c * dir;

        // Rotate dir by the angle whose chord equals the drawn budget.
        Eigen::VectorXd w(d);
        for (Eigen::Index i = 0; i < d; ++i) w[i] = gauss(rng);
        w -= w.dot(dir) * dir;
        if (w.norm() < 1e-12) continue;
        w.normalize();
        const double delta_b = std::min(eps_b, 1.9) * unif(rng);
        const double phi = 2.0 * std::asin(std::clamp(delta_b / 2.0, 0.0, 1.0));
        const Eigen::VectorXd dir_hat = std::cos(phi) * dir + std::sin(phi) * w;

        const double norm_hat = norm_c * (1.0 + eps_a * (2.0 * unif(rng) - 1.0));
        const Eigen::VectorXd c_hat = norm_hat * dir_hat;
        const double bound = std::sqrt(eta) * (eps_a + eps_b);
        if (bound > 0.0)
            rep.max_compose_ratio = std::max(rep.max_compose_ratio, (c_hat - c).norm() / bound);
    }
    rep.pass = rep.max_angle_ratio <= 1.0 + 1e-9 && rep.max_compose_ratio <= 1.0 + 1e-9;
    return rep;
}

}  // namespace qemlab
