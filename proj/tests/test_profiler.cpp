#include <doctest.h>

#include <chrono>
#include <cmath>

#include "qemlab/em.hpp"
#include "qemlab/errors.hpp"
#include "qemlab/profiler.hpp"
#include "qemlab/synth.hpp"
#include "test_util.hpp"

using namespace qemlab;

TEST_CASE("condition number of simple spectra") {
    CHECK(condition_number(Eigen::MatrixXd::Identity(4, 4)) == doctest::Approx(1.0));
    Eigen::VectorXd diag(3);
    diag << 1.0, 0.5, 0.1;
    CHECK(condition_number(Eigen::MatrixXd(diag.asDiagonal())) == doctest::Approx(10.0));
}

TEST_CASE("thresholded condition number discards small singular values") {
    Eigen::VectorXd diag(3);
    diag << 1.0, 0.5, 0.01;
    const Eigen::MatrixXd m = diag.asDiagonal();
    CHECK(condition_number(m, 0.07) == doctest::Approx(2.0));
    CHECK(condition_number(m) == doctest::Approx(100.0));
    CHECK_THROWS_AS((void)condition_number(m, 2.0), domain_error);
    CHECK_THROWS_AS((void)condition_number(Eigen::MatrixXd::Zero(2, 2)), domain_error);
}

TEST_CASE("thresholding can only shrink the condition number") {
    Rng rng(3);
    for (int t = 0; t < 20; ++t) {
        const Eigen::MatrixXd m = test_util::random_points(12, 6, rng, 2.0);
        const double raw = condition_number(m);
        double prev = raw;
        for (const double tau : {0.01, 0.1, 0.5}) {
            double capped;
            try {
                capped = condition_number(m, tau);
            } catch (const domain_error&) {
                break;  // every singular value discarded
            }
            CHECK(capped <= prev + 1e-12);
            prev = capped;
        }
    }
}

TEST_CASE("mu of the identity and of a rank-one projector is one") {
    CHECK(mu_param(Eigen::MatrixXd::Identity(5, 5)) == doctest::Approx(1.0));
    Eigen::MatrixXd rank1 = Eigen::MatrixXd::Zero(4, 4);
    rank1(0, 0) = 1.0;
    CHECK(mu_param(rank1) == doctest::Approx(1.0));
}

TEST_CASE("mu is bounded by the Frobenius norm after spectral normalization") {
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
        const Eigen::MatrixXd m = test_util::random_points(20, 20, rng);
        const double mu = mu_param(m);
        Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
        const Eigen::MatrixXd a = m / svd.singularValues()[0];
        CHECK(mu <= a.norm() + 1e-12);
        CHECK(mu <= std::sqrt(20.0) + 1e-12);

        // Direct re-evaluation of the defining minimum.
        double direct = a.norm();
        for (const double p : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            auto s = [&](const Eigen::MatrixXd& mat, double q) {
                double best = 0.0;
                for (Eigen::Index i = 0; i < mat.rows(); ++i) {
                    double acc = 0.0;
                    for (Eigen::Index j = 0; j < mat.cols(); ++j) {
                        const double av = std::abs(mat(i, j));
                        acc += q == 0.0 ? (av != 0.0 ? 1.0 : 0.0) : std::pow(av, q);
                    }
                    best = std::max(best, acc);
                }
                return best;
            };
            direct = std::min(direct, std::sqrt(s(a, 2.0 * p) * s(a.transpose(), 2.0 * (1.0 - p))));
        }
        CHECK(mu == doctest::Approx(direct).epsilon(1e-9));
    }
}

TEST_CASE("eta: unit rows, norm ratios and the zero-row error") {
    Eigen::MatrixXd unit = Eigen::MatrixXd::Identity(3, 3);
    CHECK(eta(Dataset(unit)) == doctest::Approx(1.0));

    Eigen::MatrixXd two(2, 2);
    two << 1.0, 0.0, 0.0, 2.0;
    CHECK(eta(Dataset(two)) == doctest::Approx(4.0));

    Eigen::MatrixXd zero_row(2, 2);
    zero_row << 0.0, 0.0, 1.0, 0.0;
    CHECK_THROWS_WITH_AS((void)eta(Dataset(zero_row)), "zero-norm sample", domain_error);
}

TEST_CASE("exact log-determinant basics") {
    CHECK(logdet_exact(Eigen::MatrixXd::Identity(3, 3)) == doctest::Approx(0.0));
    Eigen::VectorXd half(2);
    half << 0.5, 0.5;
    CHECK(logdet_exact(half.asDiagonal()) == doctest::Approx(2.0 * std::log(0.5)).epsilon(1e-12));
    Eigen::MatrixXd indef(2, 2);
    indef << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS((void)logdet_exact(indef), domain_error);
}

TEST_CASE("exact log-determinant agrees with the Cholesky route on random SPD") {
    Rng rng(7);
    for (int t = 0; t < 20; ++t) {
        const Eigen::MatrixXd sigma = test_util::random_spd(6, 0.2, 3.0, rng);
        const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
        const double via_chol = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
        CHECK(logdet_exact(sigma) == doctest::Approx(via_chol).epsilon(1e-9));
    }
}

TEST_CASE("stochastic log-determinant is unbiased-exact on constant spectra") {
    Rng rng(11);
    // Constant spectrum: the Hutchinson quadratic form has zero variance.
    const Eigen::MatrixXd flat = 0.5 * Eigen::MatrixXd::Identity(50, 50);
    const double est = logdet_chebyshev(flat, 0.5, 0.1, rng);
    CHECK(est == doctest::Approx(50.0 * std::log(0.5)).epsilon(0.01));

    for (const double c : {0.3, 2.0, 7.5}) {
        const Eigen::MatrixXd scaled = c * Eigen::MatrixXd::Identity(20, 20);
        const double got = logdet_chebyshev(scaled, 0.25, 0.1, rng);
        CHECK(std::abs(got - 20.0 * std::log(c)) <= 0.25);
    }
}

TEST_CASE("stochastic log-determinant hits the absolute budget on random spectra") {
    int ok = 0;
    const int runs = 10;
    for (int t = 0; t < runs; ++t) {
        Rng rng = derived_rng(13, t);
        const Eigen::MatrixXd sigma = test_util::random_spd(50, 0.1, 0.9, rng);
        const double exact = logdet_exact(sigma);
        const double est = logdet_chebyshev(sigma, 0.5, 0.1, rng);
        if (std::abs(est - exact) <= 0.5) ++ok;
    }
    CHECK(ok >= 9);
}

TEST_CASE("stochastic log-determinant rejects non-SPD and bad parameters") {
    Rng rng(17);
    Eigen::MatrixXd indef(2, 2);
    indef << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS((void)logdet_chebyshev(indef, 0.5, 0.1, rng), domain_error);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
    CHECK_THROWS_AS((void)logdet_chebyshev(eye, 0.0, 0.1, rng), domain_error);
    CHECK_THROWS_AS((void)logdet_chebyshev(eye, 0.5, 1.5, rng), domain_error);
    Eigen::VectorXd nearly(3);
    nearly << 1.0, 1.0, 1e-15;
    CHECK_THROWS_WITH_AS((void)logdet_chebyshev(Eigen::MatrixXd(nearly.asDiagonal()), 0.5, 0.1, rng),
                         "singular within tolerance", domain_error);
}

TEST_CASE("stochastic log-determinant holds its confidence over 100 small matrices") {
    const double eps = 0.5, delta = 0.1;
    int ok = 0;
    for (int t = 0; t < 100; ++t) {
        Rng rng = derived_rng(31, t);
        const Eigen::MatrixXd sigma = test_util::random_spd(20, 0.1, 0.9, rng);
        const double exact = logdet_exact(sigma);
        if (std::abs(logdet_chebyshev(sigma, eps, delta, rng) - exact) <= eps) ++ok;
    }
    CHECK(static_cast<double>(ok) / 100.0 >= 1.0 - delta);
}

TEST_CASE("profile of orthonormal rows with identity covariances is all ones and zeros") {
    const Eigen::MatrixXd pts = Eigen::MatrixXd::Identity(4, 4);
    Eigen::VectorXd theta(2);
    theta << 0.5, 0.5;
    const Eigen::MatrixXd means = Eigen::MatrixXd::Zero(2, 4);
    std::vector<Covariance> covs{Covariance::full(Eigen::MatrixXd::Identity(4, 4)),
                                 Covariance::full(Eigen::MatrixXd::Identity(4, 4))};
    const GmmParams params(theta, means, covs);
    const ProfileReport rep = profile(Dataset(pts), params, false);
    CHECK(rep.kappa_V == doctest::Approx(1.0));
    CHECK(rep.mu_V == doctest::Approx(1.0));
    CHECK(rep.eta == doctest::Approx(1.0));
    for (int j = 0; j < 2; ++j) {
        CHECK(rep.mu_sigma[j] == doctest::Approx(1.0));
        CHECK(rep.kappa_sigma[j] == doctest::Approx(1.0));
        CHECK(rep.spectral_norms[j] == doctest::Approx(1.0));
        CHECK(rep.log_abs_dets_exact[j] == doctest::Approx(0.0));
        CHECK(rep.log_abs_dets[j] == doctest::Approx(0.0).epsilon(0.5));
    }
}

TEST_CASE("implicit V-prime statistics match the explicit construction on small data") {
    Rng rng(19);
    const Eigen::Index n = 40, d = 5;
    Eigen::MatrixXd pts = test_util::random_points(n, d, rng, 1.0);
    pts.array() += 2.0;  // keep rows away from zero norm
    const Dataset data(pts);
    const Dataset norm = data.normalized();

    Eigen::MatrixXd vprime(n, d * d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd v = norm.points().row(i).transpose();
        const Eigen::MatrixXd outer = v * v.transpose();
        for (Eigen::Index a = 0; a < d; ++a)
            for (Eigen::Index b = 0; b < d; ++b) vprime(i, a * d + b) = outer(a, b);
    }
    const double explicit_mu = mu_param(vprime);

    Eigen::VectorXd th(1);
    th << 1.0;
    const GmmParams params(th, Eigen::MatrixXd::Zero(1, d),
                           {Covariance::full(Eigen::MatrixXd::Identity(d, d))});
    const ProfileReport rep = profile(data, params, true);
    REQUIRE(rep.mu_V_prime.has_value());
    CHECK(*rep.mu_V_prime == doctest::Approx(explicit_mu).epsilon(1e-6));
    CHECK(*rep.mu_V_prime <= rep.mu_V_prime_frobenius_bound + 1e-9);
}

TEST_CASE("V-prime profiling enforces the memory budget") {
    Rng rng(23);
    Eigen::MatrixXd pts = test_util::random_points(50, 8, rng);
    pts.array() += 3.0;
    Eigen::VectorXd th(1);
    th << 1.0;
    const GmmParams params(th, Eigen::MatrixXd::Zero(1, 8),
                           {Covariance::full(Eigen::MatrixXd::Identity(8, 8))});
    ProfileConfig cfg;
    cfg.vprime_budget_bytes = 8;  // guaranteed breach
    CHECK_THROWS_AS((void)profile(Dataset(pts), params, true, cfg), domain_error);
    CHECK_NOTHROW((void)profile(Dataset(pts), params, false, cfg));
}

TEST_CASE("full profile of a 16-component model over 4000x40 cluster data lands under a minute") {
    SynthSpec spec;
    spec.k = 38;  // many narrow clusters, modelled with fewer components
    spec.d = 40;
    spec.n = 4000;
    spec.separation = 4.0;
    spec.kind = CovarianceKind::Diagonal;
    spec.seed = 2024;
    const SynthResult synth = synth_mixture(spec);
    const Dataset data(synth.points);

    FitConfig cfg;
    cfg.k = 16;
    cfg.kind = CovarianceKind::Diagonal;
    cfg.init = InitStrategy::kmeanspp(4);
    cfg.seed = 6;
    cfg.max_iters = 10;
    cfg.eps_tau = 1e-300;
    const FitResult fitted = fit(data, cfg);

    const auto t0 = std::chrono::steady_clock::now();
    const ProfileReport rep = profile(data, fitted.params, false);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 60.0);
    CHECK(rep.eta >= 1.0);
    CHECK(rep.eta < 200.0);
    CHECK(rep.kappa_V >= 1.0);
    CHECK(rep.mu_V <= std::sqrt(40.0) + 1e-9);
    REQUIRE(rep.log_abs_dets.size() == 16);
    for (int j = 0; j < 16; ++j) {
        CHECK(std::isfinite(rep.log_abs_dets[j]));
        CHECK(std::abs(rep.log_abs_dets[j] - rep.log_abs_dets_exact[j]) <= 0.5 + 1e-9);
        CHECK(rep.kappa_sigma_thresholded[j] <= rep.kappa_sigma[j] + 1e-9);
    }
}

TEST_CASE("profile records raw and thresholded condition numbers per component") {
    Rng rng(29);
    Eigen::MatrixXd pts = test_util::random_points(30, 2, rng);
    pts.array() += 4.0;
    Eigen::VectorXd th(1);
    th << 1.0;
    Eigen::VectorXd vars(2);
    vars << 1.0, 0.01;
    const GmmParams params(th, Eigen::MatrixXd::Zero(1, 2), {Covariance::diagonal(vars)});
    ProfileConfig cfg;
    cfg.sigma_threshold = 0.07;
    const ProfileReport rep = profile(Dataset(pts), params, false, cfg);
    CHECK(rep.kappa_sigma[0] == doctest::Approx(100.0));
    CHECK(rep.kappa_sigma_thresholded[0] == doctest::Approx(1.0));
    CHECK(rep.log_abs_dets_exact[0] == doctest::Approx(std::abs(std::log(0.01))));
}
