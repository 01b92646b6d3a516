#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "qemlab/em.hpp"
#include "qemlab/errors.hpp"
#include "qemlab/numeric.hpp"
#include "test_util.hpp"

using namespace qemlab;

namespace {

Responsibilities hard_two_point() {
    Eigen::MatrixXd r(2, 2);
    r << 1.0, 0.0, 0.0, 1.0;
    return Responsibilities(r);
}

Dataset scalar_points(std::initializer_list<double> xs) {
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(xs.size()), 1);
    Eigen::Index i = 0;
    for (double x : xs) pts(i++, 0) = x;
    return Dataset(pts);
}

Eigen::MatrixXd two_blob_points(Eigen::Index per_blob, double mean0, double mean1, double sd,
                                Rng& rng) {
    std::normal_distribution<double> gauss(0.0, sd);
    Eigen::MatrixXd pts(2 * per_blob, 1);
    for (Eigen::Index i = 0; i < per_blob; ++i) pts(i, 0) = mean0 + gauss(rng);
    for (Eigen::Index i = 0; i < per_blob; ++i) pts(per_blob + i, 0) = mean1 + gauss(rng);
    return pts;
}

Eigen::MatrixXd random_responsibility(Eigen::Index n, Eigen::Index k, Rng& rng) {
    Eigen::MatrixXd raw = test_util::random_points(n, k, rng).array().abs() + 0.05;
    Eigen::MatrixXd resp(n, k);
    for (Eigen::Index i = 0; i < n; ++i) resp.row(i) = raw.row(i) / raw.row(i).sum();
    return resp;
}

}  // namespace

TEST_CASE("random init with k == n uses every dataset row as a mean") {
    Rng rng(5);
    const Dataset data(test_util::random_points(6, 2, rng));
    FitConfig cfg;
    cfg.k = 6;
    cfg.kind = CovarianceKind::Full;
    cfg.init = InitStrategy::random_em();
    Rng init_rng(17);
    const GmmParams params = initialize(data, cfg, init_rng);

    std::set<Eigen::Index> matched;
    for (Eigen::Index j = 0; j < params.k(); ++j)
        for (Eigen::Index i = 0; i < data.n(); ++i)
            if ((params.means().row(j) - data.points().row(i)).norm() == 0.0) {
                matched.insert(i);
                break;
            }
    CHECK(matched.size() == 6);
    CHECK(params.theta().isApprox(Eigen::VectorXd::Constant(6, 1.0 / 6.0)));
}

TEST_CASE("k exceeding the sample count is an error") {
    Rng rng(5);
    const Dataset data(test_util::random_points(3, 2, rng));
    FitConfig cfg;
    cfg.k = 4;
    Rng init_rng(1);
    CHECK_THROWS_WITH_AS((void)initialize(data, cfg, init_rng), "k > n", domain_error);
}

TEST_CASE("D^2 seeding plus Lloyd rounds puts one mean in each well-separated blob") {
    Eigen::MatrixXd pts(4, 1);
    pts << 0.0, 0.1, 10.0, 10.1;
    const Dataset data(pts);
    FitConfig cfg;
    cfg.k = 2;
    cfg.kind = CovarianceKind::Spherical;
    cfg.init = InitStrategy::kmeanspp(3);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        const GmmParams params = initialize(data, cfg, rng);
        const double lo = params.means().col(0).minCoeff();
        const double hi = params.means().col(0).maxCoeff();
        CHECK(lo < 1.0);
        CHECK(hi > 9.0);
    }
}

TEST_CASE("small-EM with one restart is random init followed by burn-in steps") {
    Rng rng(9);
    const Dataset data(test_util::random_points(50, 2, rng, 2.0));
    FitConfig cfg;
    cfg.k = 3;
    cfg.kind = CovarianceKind::Full;
    cfg.init = InitStrategy::small_em(1, 4);

    Rng rng_a(123);
    const GmmParams via_small = initialize(data, cfg, rng_a);

    FitConfig manual = cfg;
    manual.init = InitStrategy::random_em();
    Rng rng_b(123);
    GmmParams via_manual = initialize(data, manual, rng_b);
    const double floor = resolve_reg_floor(data, cfg.reg_floor);
    for (int t = 0; t < 4; ++t)
        via_manual = m_step_ml(data, e_step(data, via_manual), cfg.kind, floor);

    CHECK(via_small.means().isApprox(via_manual.means(), 0.0));
    CHECK(via_small.theta().isApprox(via_manual.theta(), 0.0));
}

TEST_CASE("hard assignments on two scalar points produce floored point-mass components") {
    const Dataset data = scalar_points({0.0, 2.0});
    const double floor = 1e-4;
    const GmmParams params = m_step_ml(data, hard_two_point(), CovarianceKind::Spherical, floor);
    CHECK(params.theta()[0] == doctest::Approx(0.5));
    CHECK(params.theta()[1] == doctest::Approx(0.5));
    CHECK(params.means()(0, 0) == doctest::Approx(0.0));
    CHECK(params.means()(1, 0) == doctest::Approx(2.0));
    CHECK(params.covariances()[0].spherical_variance() == doctest::Approx(floor));
    CHECK(params.covariances()[1].spherical_variance() == doctest::Approx(floor));
}

TEST_CASE("uniform responsibilities hand every component the global moments") {
    Rng rng(13);
    const Dataset data(test_util::random_points(40, 3, rng, 2.0));
    Eigen::MatrixXd r = Eigen::MatrixXd::Constant(40, 2, 0.5);
    const GmmParams params = m_step_ml(data, Responsibilities(r), CovarianceKind::Full, 1e-12);
    const Eigen::RowVectorXd mean = data.points().colwise().mean();
    CHECK((params.means().row(0) - mean).norm() < 1e-12);
    CHECK((params.means().row(1) - mean).norm() < 1e-12);
    CHECK((params.covariances()[0].dense() - params.covariances()[1].dense()).norm() < 1e-12);
}

TEST_CASE("single-component M-step recovers population moments") {
    const Dataset data = scalar_points({0.0, 1.0, 2.0, 3.0});
    Eigen::MatrixXd r = Eigen::MatrixXd::Ones(4, 1);
    const GmmParams params = m_step_ml(data, Responsibilities(r), CovarianceKind::Spherical, 1e-12);
    CHECK(params.means()(0, 0) == doctest::Approx(1.5));
    CHECK(params.covariances()[0].spherical_variance() == doctest::Approx(1.25));
}

TEST_CASE("empty component is a hard error naming the component") {
    const Dataset data = scalar_points({0.0, 1.0});
    Eigen::MatrixXd r(2, 2);
    r << 1.0, 0.0, 1.0, 0.0;
    CHECK_THROWS_WITH_AS((void)m_step_ml(data, Responsibilities(r), CovarianceKind::Full, 1e-9),
                         "empty component 1", domain_error);
}

TEST_CASE("raw-moment and centered covariance routes agree") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = 30, d = 3, k = 2;
        const Dataset data(test_util::random_points(n, d, rng, 2.0));
        const Responsibilities r(random_responsibility(n, k, rng));
        const GmmParams params = m_step_ml(data, r, CovarianceKind::Full, 1e-300);

        const Eigen::VectorXd rj = r.column_sums();
        for (Eigen::Index j = 0; j < k; ++j) {
            Eigen::MatrixXd second = Eigen::MatrixXd::Zero(d, d);
            for (Eigen::Index i = 0; i < n; ++i)
                second +=
                    r.matrix()(i, j) * data.points().row(i).transpose() * data.points().row(i);
            const Eigen::VectorXd mu = params.means().row(j).transpose();
            const Eigen::MatrixXd raw_route = second / rj[j] - mu * mu.transpose();
            CHECK((params.covariances()[j].dense() - raw_route).norm() <= 1e-9);
        }
    }
}

TEST_CASE("mean update equals V'R_j / (n theta_j)") {
    Rng rng(19);
    const Eigen::Index n = 25, d = 4, k = 3;
    const Dataset data(test_util::random_points(n, d, rng));
    const Responsibilities r(random_responsibility(n, k, rng));
    const GmmParams params = m_step_ml(data, r, CovarianceKind::Full, 1e-12);
    for (Eigen::Index j = 0; j < k; ++j) {
        const Eigen::VectorXd via_claim =
            data.points().transpose() * r.matrix().col(j) / (n * params.theta()[j]);
        CHECK((params.means().row(j).transpose() - via_claim).norm() <= 1e-10);
    }
}

TEST_CASE("kind projections: diagonal, spherical, tied and soft k-means") {
    Rng rng(23);
    const Eigen::Index n = 60, d = 3;
    const Dataset data(test_util::random_points(n, d, rng, 2.0));
    const Responsibilities r(random_responsibility(n, 2, rng));

    const GmmParams full = m_step_ml(data, r, CovarianceKind::Full, 1e-12);
    const GmmParams diag = m_step_ml(data, r, CovarianceKind::Diagonal, 1e-12);
    const GmmParams sph = m_step_ml(data, r, CovarianceKind::Spherical, 1e-12);
    const GmmParams tied = m_step_ml(data, r, CovarianceKind::Tied, 1e-12);
    const GmmParams soft = m_step_ml(data, r, CovarianceKind::SoftKMeans, 1e-12, 2.0);

    for (Eigen::Index j = 0; j < 2; ++j) {
        CHECK((diag.covariances()[j].variances() - full.covariances()[j].dense().diagonal())
                  .lpNorm<Eigen::Infinity>() <= 1e-9);
        CHECK(sph.covariances()[j].spherical_variance() ==
              doctest::Approx(full.covariances()[j].dense().trace() / d).epsilon(1e-9));
        CHECK(soft.covariances()[j].spherical_variance() == doctest::Approx(1.0 / 4.0));
    }
    const Eigen::MatrixXd pooled = full.theta()[0] * full.covariances()[0].dense() +
                                   full.theta()[1] * full.covariances()[1].dense();
    CHECK((tied.covariances()[0].dense() - pooled).norm() <= 1e-9);
    CHECK((tied.covariances()[1].dense() - tied.covariances()[0].dense()).norm() == 0.0);
}

TEST_CASE("M-step outputs always satisfy the model invariants") {
    Rng rng(29);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = 40, d = 1 + trial % 4, k = 1 + trial % 3;
        const Dataset data(test_util::random_points(n, d, rng, 3.0));
        const GmmParams params =
            m_step_ml(data, Responsibilities(random_responsibility(n, k, rng)),
                      CovarianceKind::Full, 1e-9);
        CHECK(std::abs(params.theta().sum() - 1.0) <= 1e-12);
        CHECK((params.theta().array() >= 0.0).all());
        for (Eigen::Index j = 0; j < k; ++j)
            CHECK(params.covariances()[j].min_eigenvalue() > 0.0);
        CHECK_NOTHROW(params.verify_log_dets());
    }
}

TEST_CASE("pooled prior matches the per-dimension variance") {
    SUBCASE("scalar two-point data") {
        const Dataset data = scalar_points({0.0, 2.0});
        const Eigen::MatrixXd s0 = pooled_prior_s0(data, 1, 1e-12);
        CHECK(s0(0, 0) == doctest::Approx(1.0));
    }
    SUBCASE("identical rows with a single component floor exactly at reg_floor") {
        Eigen::MatrixXd pts = Eigen::MatrixXd::Constant(4, 3, 1.5);
        const Eigen::MatrixXd s0 = pooled_prior_s0(Dataset(pts), 1, 1e-6);
        for (int j = 0; j < 3; ++j) CHECK(s0(j, j) == doctest::Approx(1e-6));
    }
    SUBCASE("identical rows fall back to the floor") {
        Eigen::MatrixXd pts = Eigen::MatrixXd::Constant(5, 2, 3.0);
        const Eigen::MatrixXd s0 = pooled_prior_s0(Dataset(pts), 2, 1e-6);
        CHECK(s0(0, 0) == doctest::Approx(1e-6 / std::sqrt(2.0)));
        CHECK(s0(1, 1) == doctest::Approx(1e-6 / std::sqrt(2.0)));
    }
    SUBCASE("scaling the data by c scales the prior by c^2") {
        Rng rng(31);
        const Eigen::MatrixXd pts = test_util::random_points(30, 3, rng);
        const Eigen::MatrixXd a = pooled_prior_s0(Dataset(pts), 4, 1e-300);
        const Eigen::MatrixXd b = pooled_prior_s0(Dataset(2.5 * pts), 4, 1e-300);
        CHECK((b - 6.25 * a).norm() <= 1e-9 * b.norm());
    }
}

TEST_CASE("MAP update reproduces the hand-computed two-point example") {
    const Dataset data = scalar_points({0.0, 2.0});
    MapPrior prior;
    prior.alpha = Eigen::VectorXd::Constant(2, 2.0);
    prior.m0 = Eigen::VectorXd::Constant(1, 1.0);
    prior.iota0 = 1.0;
    prior.nu0 = 4.0;
    prior.S0 = Eigen::MatrixXd::Identity(1, 1);
    const GmmParams params = m_step_map(data, hard_two_point(), prior, 1e-12);
    CHECK(params.theta()[0] == doctest::Approx(0.5));
    CHECK(params.theta()[1] == doctest::Approx(0.5));
    CHECK(params.means()(0, 0) == doctest::Approx(0.5));
    CHECK(params.means()(1, 0) == doctest::Approx(1.5));
}

TEST_CASE("MAP with an empty component falls back to the prior mean") {
    const Dataset data = scalar_points({0.0, 2.0});
    Eigen::MatrixXd r(2, 2);
    r << 1.0, 0.0, 1.0, 0.0;
    MapPrior prior;
    prior.alpha = Eigen::VectorXd::Constant(2, 2.0);
    prior.m0 = Eigen::VectorXd::Constant(1, 0.75);
    prior.iota0 = 2.0;
    prior.nu0 = 4.0;
    const GmmParams params = m_step_map(data, Responsibilities(r), prior, 1e-12);
    CHECK(params.means()(1, 0) == doctest::Approx(0.75));
    CHECK(params.theta()[1] > 0.0);
}

TEST_CASE("MAP with alpha below one and an empty component is rejected") {
    const Dataset data = scalar_points({0.0, 2.0});
    Eigen::MatrixXd r(2, 2);
    r << 1.0, 0.0, 1.0, 0.0;
    MapPrior prior;
    prior.alpha = Eigen::VectorXd::Constant(2, 0.5);
    prior.m0 = Eigen::VectorXd::Constant(1, 0.0);
    prior.iota0 = 1.0;
    prior.nu0 = 4.0;
    CHECK_THROWS_WITH_AS((void)m_step_map(data, Responsibilities(r), prior, 1e-12),
                         "invalid Dirichlet prior for empty component", domain_error);
}

TEST_CASE("MAP washes out to ML in the flat-prior limit") {
    Rng rng(37);
    const Eigen::Index n = 50, d = 2, k = 2;
    const Dataset data(test_util::random_points(n, d, rng, 2.0));
    const Responsibilities r(random_responsibility(n, k, rng));

    MapPrior prior;
    prior.alpha = Eigen::VectorXd::Constant(k, 1.0);
    prior.m0 = Eigen::VectorXd::Zero(d);
    prior.iota0 = 1e-10;
    prior.nu0 = -(static_cast<double>(d) + 2.0) + 1e-10;
    prior.S0 = 1e-12 * Eigen::MatrixXd::Identity(d, d);

    const GmmParams map = m_step_map(data, r, prior, 1e-300);
    const GmmParams ml = m_step_ml(data, r, CovarianceKind::Full, 1e-300);
    CHECK((map.theta() - ml.theta()).lpNorm<Eigen::Infinity>() <= 1e-6);
    CHECK((map.means() - ml.means()).lpNorm<Eigen::Infinity>() <= 1e-6);
    for (Eigen::Index j = 0; j < k; ++j)
        CHECK((map.covariances()[j].dense() - ml.covariances()[j].dense()).norm() <= 1e-6);
}

TEST_CASE("single-component fit converges within two iterations") {
    Rng rng(41);
    const Dataset data(test_util::random_points(30, 2, rng));
    FitConfig cfg;
    cfg.k = 1;
    cfg.kind = CovarianceKind::Full;
    cfg.init = InitStrategy::random_em();
    cfg.seed = 4;
    const FitResult result = fit(data, cfg);
    CHECK(result.converged);
    CHECK(result.iterations <= 2);
    CHECK(static_cast<int>(result.trace.size()) == result.iterations);
}

TEST_CASE("fit recovers two well-separated scalar blobs") {
    Rng rng(43);
    const Dataset data(two_blob_points(200, 0.0, 10.0, 0.5, rng));
    FitConfig cfg;
    cfg.k = 2;
    cfg.kind = CovarianceKind::Spherical;
    cfg.init = InitStrategy::kmeanspp(3);
    cfg.seed = 7;
    const FitResult result = fit(data, cfg);
    Eigen::VectorXd means = result.params.means().col(0);
    std::sort(means.data(), means.data() + means.size());
    CHECK(std::abs(means[0] - 0.0) < 0.15);
    CHECK(std::abs(means[1] - 10.0) < 0.15);
    CHECK(std::abs(result.params.theta()[0] - 0.5) < 0.05);
}

TEST_CASE("noise channel with zero deltas reproduces the clean trace bit for bit") {
    Rng rng(47);
    const Dataset data(two_blob_points(60, 0.0, 6.0, 0.8, rng));
    FitConfig cfg;
    cfg.k = 2;
    cfg.kind = CovarianceKind::Diagonal;
    cfg.init = InitStrategy::kmeanspp(2);
    cfg.seed = 11;
    cfg.max_iters = 15;

    NoiseSpec zero;
    zero.delta_theta = 0.0;
    zero.delta_mu = 0.0;
    zero.sigma_floor = 1e-12;  // below every eigenvalue, so thresholding is a no-op

    const FitResult clean = fit(data, cfg);
    const FitResult noisy = fit(data, cfg, zero);
    REQUIRE(clean.trace.size() == noisy.trace.size());
    for (std::size_t i = 0; i < clean.trace.size(); ++i) {
        CHECK(clean.trace[i].log_likelihood == noisy.trace[i].log_likelihood);
        CHECK(clean.trace[i].mean_probability == noisy.trace[i].mean_probability);
    }
    CHECK(clean.params.means().isApprox(noisy.params.means(), 0.0));
}

TEST_CASE("noise-free likelihood trace is nondecreasing across strategies") {
    Rng rng(53);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = 50 + 37 * trial;
        const Eigen::Index d = 1 + trial % 4;
        const Eigen::Index k = 1 + trial % 4;
        const Dataset data(test_util::random_points(n, d, rng, 2.0));
        FitConfig cfg;
        cfg.k = static_cast<int>(k);
        cfg.kind = trial % 2 ? CovarianceKind::Diagonal : CovarianceKind::Full;
        cfg.init = trial % 3 ? InitStrategy::kmeanspp(2) : InitStrategy::random_em();
        cfg.seed = 100 + trial;
        cfg.max_iters = 25;
        cfg.eps_tau = 1e-12;
        const FitResult result = fit(data, cfg);
        for (std::size_t i = 1; i < result.trace.size(); ++i) {
            CHECK(result.trace[i].log_likelihood >=
                  result.trace[i - 1].log_likelihood -
                      1e-9 * std::abs(result.trace[i - 1].log_likelihood));
            CHECK_FALSE(result.trace[i].likelihood_decreased);
        }
    }
}

TEST_CASE("MAP fit runs end to end with the auto prior and a diagonal projection") {
    Rng rng(71);
    const Dataset data(two_blob_points(80, 0.0, 9.0, 0.8, rng));
    FitConfig cfg;
    cfg.k = 2;
    cfg.kind = CovarianceKind::Diagonal;
    cfg.init = InitStrategy::kmeanspp(3);
    cfg.seed = 5;
    cfg.estimator = Estimator::Map;
    const FitResult result = fit(data, cfg);
    CHECK(result.converged);
    CHECK(result.params.kind() == CovarianceKind::Diagonal);
    Eigen::VectorXd means = result.params.means().col(0);
    std::sort(means.data(), means.data() + means.size());
    CHECK(std::abs(means[0] - 0.0) < 0.5);
    CHECK(std::abs(means[1] - 9.0) < 0.5);
    CHECK_NOTHROW(result.params.verify_log_dets());
}

TEST_CASE("MAP rejects tied covariances") {
    FitConfig cfg;
    cfg.k = 2;
    cfg.kind = CovarianceKind::Tied;
    cfg.estimator = Estimator::Map;
    CHECK_THROWS_AS(cfg.validate(), domain_error);
}

TEST_CASE("tied fit shares one covariance across components") {
    Rng rng(73);
    const Dataset data(two_blob_points(60, 0.0, 7.0, 0.6, rng));
    FitConfig cfg;
    cfg.k = 2;
    cfg.kind = CovarianceKind::Tied;
    cfg.init = InitStrategy::kmeanspp(3);
    cfg.seed = 8;
    const FitResult result = fit(data, cfg);
    CHECK((result.params.covariances()[0].dense() - result.params.covariances()[1].dense())
              .norm() == 0.0);
}

TEST_CASE("soft k-means fit keeps the stiffness covariance fixed") {
    Rng rng(79);
    const Dataset data(two_blob_points(60, 0.0, 7.0, 0.6, rng));
    FitConfig cfg;
    cfg.k = 2;
    cfg.kind = CovarianceKind::SoftKMeans;
    cfg.beta = 0.5;
    cfg.init = InitStrategy::kmeanspp(2);
    cfg.seed = 9;
    cfg.max_iters = 20;
    const FitResult result = fit(data, cfg);
    for (const auto& c : result.params.covariances())
        CHECK(c.spherical_variance() == doctest::Approx(1.0));  // 1/(2 beta)
}

TEST_CASE("CEM initialization produces a valid model from hard assignments") {
    Rng rng(59);
    const Dataset data(two_blob_points(40, 0.0, 8.0, 0.7, rng));
    FitConfig cfg;
    cfg.k = 2;
    cfg.kind = CovarianceKind::Spherical;
    cfg.init = InitStrategy::cem();
    Rng init_rng(3);
    const GmmParams params = initialize(data, cfg, init_rng);
    CHECK(std::abs(params.theta().sum() - 1.0) <= 1e-12);
    CHECK_NOTHROW(params.verify_log_dets());
}

TEST_CASE("labels: single component, tie-break and the softmax example") {
    Rng rng(61);
    const Dataset data(test_util::random_points(10, 2, rng));
    const GmmParams one = test_util::random_model(1, 2, rng);
    for (int label : predict_labels(data, one)) CHECK(label == 0);

    // Equidistant point between two identical components: lowest index wins.
    Eigen::VectorXd theta(2);
    theta << 0.5, 0.5;
    Eigen::MatrixXd means(2, 1);
    means << -1.0, 1.0;
    std::vector<Covariance> covs{Covariance::spherical(1.0, 1), Covariance::spherical(1.0, 1)};
    const GmmParams sym(theta, means, covs);
    Eigen::MatrixXd mid(1, 1);
    mid << 0.0;
    CHECK(predict_labels(Dataset(mid), sym)[0] == 0);

    Eigen::MatrixXd shifted(1, 1);
    shifted << 0.5;
    Eigen::MatrixXd means2(2, 1);
    means2 << 0.0, 2.0;
    const GmmParams example(theta, means2, covs);
    CHECK(predict_labels(Dataset(shifted), example)[0] == 0);
}

TEST_CASE("argmax labels are invariant under monotone rescaling of the scores") {
    Rng rng(67);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        Eigen::RowVectorXd scores(4);
        for (int j = 0; j < 4; ++j) scores[j] = gauss(rng);
        const Eigen::RowVectorXd scaled = 3.0 * scores.array() + 11.0;
        CHECK(argmax_lowest(scores) == argmax_lowest(scaled));
    }
}
