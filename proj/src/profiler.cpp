#include "qemlab/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "qemlab/errors.hpp"
#include "qemlab/numeric.hpp"

namespace qemlab {

namespace {

Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues();
}

// Max over rows of sum_j |m_ij|^q, with the q = 0 convention of counting
// nonzero entries.
double max_row_power_sum(const Eigen::MatrixXd& m, double q) {
    double best = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double a = std::abs(m(i, j));
            if (q == 0.0)
                acc += a != 0.0 ? 1.0 : 0.0;
            else
                acc += std::pow(a, q);
        }
        best = std::max(best, acc);
    }
    return best;
}

}  // namespace

double condition_number(const Eigen::MatrixXd& m, std::optional<double> threshold) {
    if (m.size() == 0) throw domain_error("condition number of an empty matrix");
    const Eigen::VectorXd sv = singular_values(m);
    const double smax = sv[0];
    if (!(smax > 0.0)) throw domain_error("condition number of an all-zero matrix");
    const double cutoff =
        threshold ? *threshold
                  : smax * static_cast<double>(std::max(m.rows(), m.cols())) *
                        std::numeric_limits<double>::epsilon();
    double smin = 0.0;
    for (Eigen::Index i = sv.size() - 1; i >= 0; --i) {
        if (sv[i] > cutoff) {
            smin = sv[i];
            break;
        }
    }
    if (!(smin > 0.0)) throw domain_error("no singular value above the threshold");
    return smax / smin;
}

double mu_param(const Eigen::MatrixXd& m) {
    if (m.size() == 0) throw domain_error("mu of an empty matrix");
    const double smax = singular_values(m)[0];
    if (!(smax > 0.0)) throw domain_error("mu of an all-zero matrix");
    const Eigen::MatrixXd a = m / smax;
    double best = a.norm();
    for (const double p : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const double s1 = max_row_power_sum(a, 2.0 * p);
        const double s2 = max_row_power_sum(a.transpose(), 2.0 * (1.0 - p));
        best = std::min(best, std::sqrt(s1 * s2));
    }
    return best;
}

double eta(const Dataset& data) {
    return data.eta();
}

double logdet_exact(const Eigen::MatrixXd& sigma) {
    if (sigma.rows() != sigma.cols() || sigma.rows() < 1)
        throw domain_error("covariance must be square");
    if (!sigma.isApprox(sigma.transpose(), 1e-10)) throw domain_error("covariance not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma, Eigen::EigenvaluesOnly);
    if ((es.eigenvalues().array() <= 0.0).any())
        throw domain_error("covariance not positive definite");
    return es.eigenvalues().array().log().sum();
}

namespace {

// Chebyshev coefficients of f on [a, b] from the cosine-node quadrature.
Eigen::VectorXd chebyshev_coefficients(double a, double b, int degree,
                                       const std::function<double(double)>& f) {
    const int n = degree + 1;
    Eigen::VectorXd fx(n);
    for (int q = 0; q < n; ++q) {
        const double t = std::cos(M_PI * (q + 0.5) / n);
        fx[q] = f(0.5 * ((b - a) * t + (b + a)));
    }
    Eigen::VectorXd coef(n);
    for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int q = 0; q < n; ++q) acc += fx[q] * std::cos(M_PI * j * (q + 0.5) / n);
        coef[j] = 2.0 * acc / n;
    }
    coef[0] *= 0.5;
    return coef;
}

// Hutchinson estimate of tr(p(S)) with Rademacher probes, where p is the
// Chebyshev expansion with the given coefficients on [a, b].
double hutchinson_trace(const Eigen::MatrixXd& s, double a, double b,
                        const Eigen::VectorXd& coef, std::int64_t probes, Rng& rng) {
    const Eigen::Index d = s.rows();
    const double alpha = 2.0 / (b - a);
    const double beta = -(b + a) / (b - a);
    std::bernoulli_distribution coin(0.5);

    const std::int64_t block_size = 4096;
    double total = 0.0;
    for (std::int64_t done = 0; done < probes; done += block_size) {
        const auto cur = static_cast<Eigen::Index>(std::min(block_size, probes - done));
        Eigen::MatrixXd z(d, cur);
        for (Eigen::Index c = 0; c < cur; ++c)
            for (Eigen::Index r = 0; r < d; ++r) z(r, c) = coin(rng) ? 1.0 : -1.0;

        Eigen::MatrixXd w_prev = z;
        Eigen::MatrixXd w = alpha * (s * z) + beta * z;
        Eigen::RowVectorXd acc = coef[0] * z.colwise().squaredNorm();
        if (coef.size() > 1) acc += coef[1] * (z.array() * w.array()).colwise().sum().matrix();
        for (int j = 2; j < coef.size(); ++j) {
            Eigen::MatrixXd w_next = 2.0 * (alpha * (s * w) + beta * w) - w_prev;
            w_prev = std::move(w);
            w = std::move(w_next);
            acc += coef[j] * (z.array() * w.array()).colwise().sum().matrix();
        }
        total += acc.sum();
    }
    return total / static_cast<double>(probes);
}

struct SpectrumBounds {
    double lambda_max = 0.0;
    double lambda_min = 0.0;
};

SpectrumBounds estimate_spectrum(const Eigen::MatrixXd& sigma, const Eigen::LLT<Eigen::MatrixXd>& llt,
                                 int iters, Rng& rng) {
    const Eigen::Index d = sigma.rows();
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = gauss(rng);
    v.normalize();
    for (int t = 0; t < iters; ++t) {
        v = sigma * v;
        const double n = v.norm();
        if (!(n > 0.0)) throw domain_error("singular within tolerance");
        v /= n;
    }
    SpectrumBounds out;
    out.lambda_max = v.dot(sigma * v);

    Eigen::VectorXd u(d);
    for (Eigen::Index i = 0; i < d; ++i) u[i] = gauss(rng);
    u.normalize();
    for (int t = 0; t < iters; ++t) {
        u = llt.solve(u);
        const double n = u.norm();
        if (!(n > 0.0)) throw domain_error("singular within tolerance");
        u /= n;
    }
    out.lambda_min = u.dot(sigma * u);
    return out;
}

double run_phase(const Eigen::MatrixXd& scaled, double a, double b, double kappa, double eps_rel,
                 double eps_poly, double delta, const LogdetConfig& cfg, Rng& rng) {
    const int degree = static_cast<int>(
        std::ceil(cfg.degree_constant * std::sqrt(kappa) * std::log(1.0 / eps_poly)));
    const Eigen::VectorXd coef =
        chebyshev_coefficients(a, b, std::max(degree, 2), [](double x) { return std::log(x); });
    auto probes = static_cast<std::int64_t>(
        std::ceil(cfg.probe_constant * std::log(2.0 / delta) / (eps_rel * eps_rel)));
    probes = std::clamp<std::int64_t>(probes, 1, cfg.probe_cap);
    return hutchinson_trace(scaled, a, b, coef, probes, rng);
}

}  // namespace

double logdet_chebyshev(const Eigen::MatrixXd& sigma, double eps, double delta, Rng& rng,
                        const LogdetConfig& cfg) {
    if (sigma.rows() != sigma.cols() || sigma.rows() < 1)
        throw domain_error("covariance must be square");
    if (!sigma.isApprox(sigma.transpose(), 1e-10)) throw domain_error("covariance not symmetric");
    if (!(eps > 0.0 && eps < std::numeric_limits<double>::infinity()) || !(delta > 0.0 && delta < 1.0))
        throw domain_error("logdet precision parameters out of range");

    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw domain_error("covariance not positive definite");

    const SpectrumBounds spec = estimate_spectrum(sigma, llt, cfg.power_iters, rng);
    if (!(spec.lambda_min > 1e-12 * spec.lambda_max))
        throw domain_error("singular within tolerance");

    const double d = static_cast<double>(sigma.rows());
    const double c = cfg.rescale_safety * spec.lambda_max;
    const Eigen::MatrixXd scaled = sigma / c;
    const double a = 0.9 * spec.lambda_min / c;
    const double b = 1.0;
    const double kappa = b / a;

    // Coarse quarter-precision pass sizes the fine pass; the fine pass hits
    // the absolute target through the 2*eps*|logdet| relative guarantee.
    const double coarse = run_phase(scaled, a, b, kappa, 0.25, 1e-2, delta, cfg, rng);
    const double gamma = std::max(std::abs(coarse), 0.5 * 0.04 * d);
    const double eps_fine = eps / (4.0 * gamma);
    const double eps_poly = std::min(1e-2, eps / (4.0 * d));
    const double fine = run_phase(scaled, a, b, kappa, eps_fine, eps_poly, delta, cfg, rng);

    return fine + d * std::log(c);
}

namespace {

// Spectral norm of the n x d^2 matrix whose i-th row is vec(v_i v_i'),
// by power iteration on its Gram operator X -> sum_i (v_i' X v_i) v_i v_i'.
double vprime_spectral_norm(const Eigen::MatrixXd& v, int iters) {
    Eigen::MatrixXd x = v.transpose() * v;
    const double norm = x.norm();
    if (!(norm > 0.0)) throw domain_error("mu of an all-zero matrix");
    x /= norm;
    double lambda = 0.0;
    for (int t = 0; t < iters; ++t) {
        const Eigen::VectorXd y = ((v * x).array() * v.array()).rowwise().sum();
        Eigen::MatrixXd xn = v.transpose() * y.asDiagonal() * v;
        lambda = xn.norm();
        if (!(lambda > 0.0)) break;
        x = xn / lambda;
    }
    return std::sqrt(lambda);
}

double mu_param_vprime(const Eigen::MatrixXd& v, int iters = 100) {
    const double smax = vprime_spectral_norm(v, iters);
    const Eigen::Index n = v.rows();

    const double fro2 = v.rowwise().squaredNorm().array().square().sum();
    double best = std::sqrt(fro2) / smax;

    for (const double p : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const double q_row = 2.0 * p;
        const double q_col = 2.0 * (1.0 - p);

        // Row sums of |V'|^q factor through the rows of |V|^q.
        double s_row = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double acc = 0.0;
            for (Eigen::Index j = 0; j < v.cols(); ++j) {
                const double a = std::abs(v(i, j));
                acc += q_row == 0.0 ? (a != 0.0 ? 1.0 : 0.0) : std::pow(a, q_row);
            }
            s_row = std::max(s_row, acc * acc);
        }
        if (q_row != 0.0) s_row /= std::pow(smax, q_row);

        // Column (a,b) sums are entries of W' W with W = |V|^q elementwise.
        Eigen::MatrixXd w(n, v.cols());
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < v.cols(); ++j) {
                const double a = std::abs(v(i, j));
                w(i, j) = q_col == 0.0 ? (a != 0.0 ? 1.0 : 0.0) : std::pow(a, q_col);
            }
        double s_col = (w.transpose() * w).maxCoeff();
        if (q_col != 0.0) s_col /= std::pow(smax, q_col);

        best = std::min(best, std::sqrt(s_row * s_col));
    }
    return best;
}

}  // namespace

ProfileReport profile(const Dataset& data, const GmmParams& params, bool include_v_prime,
                      const ProfileConfig& cfg) {
    if (data.d() != params.d()) throw domain_error("dataset/model dimension mismatch");
    const Dataset norm = data.normalized();
    Rng rng(cfg.seed);

    ProfileReport rep;
    rep.n = data.n();
    rep.d = data.d();
    rep.k = params.k();
    rep.eta = norm.eta();
    rep.kappa_V = condition_number(norm.points());
    rep.mu_V = mu_param(norm.points());

    for (Eigen::Index j = 0; j < params.k(); ++j) {
        const Eigen::MatrixXd dense = params.covariances()[j].dense();
        const Eigen::VectorXd evals = params.covariances()[j].eigenvalues();
        rep.spectral_norms.push_back(evals.maxCoeff());
        rep.kappa_sigma.push_back(evals.maxCoeff() / evals.minCoeff());
        double retained_min = 0.0;
        for (Eigen::Index i = 0; i < evals.size(); ++i)
            if (evals[i] > cfg.sigma_threshold) {
                retained_min = evals[i];
                break;
            }
        rep.kappa_sigma_thresholded.push_back(retained_min > 0.0 ? evals.maxCoeff() / retained_min
                                                                 : 1.0);
        rep.mu_sigma.push_back(mu_param(dense));
        rep.log_abs_dets_exact.push_back(std::abs(logdet_exact(dense)));
        rep.log_abs_dets.push_back(
            std::abs(logdet_chebyshev(dense, cfg.logdet_eps, cfg.logdet_delta, rng, cfg.logdet)));
    }

    rep.mu_V_prime_frobenius_bound =
        std::sqrt(norm.row_norms().array().pow(4.0).sum());
    if (include_v_prime) {
        const std::int64_t bytes = 8LL * data.n() * data.d() * data.d();
        if (bytes > cfg.vprime_budget_bytes)
            throw domain_error("V' profile exceeds the memory budget");
        rep.mu_V_prime = mu_param_vprime(norm.points());
    }
    return rep;
}

}  // namespace qemlab
