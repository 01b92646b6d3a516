#include "qemlab/noise.hpp"

#include <cassert>
#include <cmath>

#include "qemlab/errors.hpp"

namespace qemlab {

void NoiseSpec::validate() const {
    if (delta_theta < 0.0 || delta_mu < 0.0) throw domain_error("noise deltas must be nonnegative");
    if (!(sigma_floor > 0.0)) throw domain_error("sigma_floor must be positive");
    if (!(trunc_sigma > 0.0)) throw domain_error("trunc_sigma must be positive");
    if (kappa_cap && !(*kappa_cap > 1.0)) throw domain_error("kappa_cap must exceed 1");
}

Eigen::VectorXd perturb_theta(const Eigen::VectorXd& theta, const NoiseSpec& spec, Rng& rng,
                              double* pre_renorm_dist) {
    const Eigen::Index k = theta.size();
    if (spec.delta_theta == 0.0) {
        if (pre_renorm_dist) *pre_renorm_dist = 0.0;
        return theta;
    }
    const double half = spec.delta_theta / std::sqrt(static_cast<double>(k));
    Eigen::VectorXd noisy(k);
    for (Eigen::Index j = 0; j < k; ++j)
        noisy[j] = truncated_normal(theta[j], spec.trunc_sigma, theta[j] - half, theta[j] + half, rng);
    if (pre_renorm_dist) *pre_renorm_dist = (noisy - theta).norm();
    noisy = noisy.cwiseMax(0.0);
    const double total = noisy.sum();
    if (!(total > 0.0)) throw domain_error("noise destroys simplex");
    return noisy / total;
}

Eigen::MatrixXd perturb_means(const Eigen::MatrixXd& means, const NoiseSpec& spec, Rng& rng) {
    if (spec.delta_mu == 0.0) return means;
    const double half = spec.delta_mu / std::sqrt(static_cast<double>(means.cols()));
    Eigen::MatrixXd noisy(means.rows(), means.cols());
    for (Eigen::Index j = 0; j < means.rows(); ++j)
        for (Eigen::Index i = 0; i < means.cols(); ++i)
            noisy(j, i) = truncated_normal(means(j, i), spec.trunc_sigma, means(j, i) - half,
                                           means(j, i) + half, rng);
    return noisy;
}

namespace {

// Spectral floor plus optional condition-number cap on an eigenvalue vector.
Eigen::VectorXd threshold_eigenvalues(Eigen::VectorXd evals, const NoiseSpec& spec) {
    evals = evals.cwiseMax(spec.sigma_floor);
    if (spec.kappa_cap) {
        const double cap_floor = evals.maxCoeff() / *spec.kappa_cap;
        evals = evals.cwiseMax(cap_floor);
    }
    return evals;
}

Covariance perturb_one(const Covariance& cov, double half, const NoiseSpec& spec, Rng& rng) {
    const Eigen::Index d = cov.dim();
    switch (cov.kind()) {
        case CovarianceKind::Diagonal: {
            Eigen::VectorXd v = cov.variances();
            if (half > 0.0)
                for (Eigen::Index i = 0; i < d; ++i)
                    v[i] = truncated_normal(v[i], spec.trunc_sigma, v[i] - half, v[i] + half, rng);
            return Covariance::diagonal(threshold_eigenvalues(std::move(v), spec));
        }
        case CovarianceKind::Spherical: {
            double v = cov.spherical_variance();
            if (half > 0.0) v = truncated_normal(v, spec.trunc_sigma, v - half, v + half, rng);
            v = std::max(v, spec.sigma_floor);
            return Covariance::spherical(v, d);
        }
        case CovarianceKind::SoftKMeans:
            // Fixed by the stiffness parameter; not a free parameter of the model.
            return cov;
        case CovarianceKind::Full:
        case CovarianceKind::Tied: {
            // Noise in the eigenbasis: eigenvalues move, eigenvectors stay.
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov.dense());
            Eigen::VectorXd evals = es.eigenvalues();
            bool changed = false;
            if (half > 0.0) {
                for (Eigen::Index i = 0; i < d; ++i)
                    evals[i] = truncated_normal(evals[i], spec.trunc_sigma, evals[i] - half,
                                                evals[i] + half, rng);
                changed = true;
            }
            Eigen::VectorXd floored = threshold_eigenvalues(evals, spec);
            if (!changed && (floored.array() == es.eigenvalues().array()).all()) return cov;
            const Eigen::MatrixXd rebuilt =
                es.eigenvectors() * floored.asDiagonal() * es.eigenvectors().transpose();
            return cov.kind() == CovarianceKind::Tied ? Covariance::tied(rebuilt)
                                                      : Covariance::full(rebuilt);
        }
    }
    return cov;
}

}  // namespace

std::vector<Covariance> perturb_covariances(const std::vector<Covariance>& covs, double eta,
                                            const NoiseSpec& spec, Rng& rng) {
    if (covs.empty()) throw domain_error("no covariances to perturb");
    const double d = static_cast<double>(covs.front().dim());
    const double half = spec.delta_mu * std::sqrt(eta) / std::sqrt(d);
    std::vector<Covariance> out;
    out.reserve(covs.size());
    for (const auto& c : covs) out.push_back(perturb_one(c, half, spec, rng));
    return out;
}

GmmParams apply_noise(const GmmParams& params, const NoiseSpec& spec, double eta, Rng& rng,
                      ApplyStats* stats) {
    spec.validate();
    double pre = 0.0;
    Eigen::VectorXd theta = perturb_theta(params.theta(), spec, rng, &pre);
    Eigen::MatrixXd means = perturb_means(params.means(), spec, rng);
    std::vector<Covariance> covs = perturb_covariances(params.covariances(), eta, spec, rng);
    if (stats) stats->theta_pre_renorm_dist = pre;
    GmmParams out(std::move(theta), std::move(means), std::move(covs));
#ifndef NDEBUG
    // The covariance bound is only guaranteed when the noise interval
    // dominates the spectral floor and no condition cap is in play.
    ApplyStats local{pre};
    const BoundsReport check = verify_bounds(params, out, spec, eta, &local);
    const double half = spec.delta_mu * std::sqrt(eta / static_cast<double>(params.d()));
    assert(check.theta_dist <= spec.delta_theta + 1e-9);
    assert(check.max_mean_dist <= spec.delta_mu + 1e-9);
    assert(spec.kappa_cap || spec.sigma_floor > half || check.pass);
#endif
    return out;
}

BoundsReport verify_bounds(const GmmParams& before, const GmmParams& after, const NoiseSpec& spec,
                           double eta, const ApplyStats* stats) {
    if (before.k() != after.k() || before.d() != after.d())
        throw domain_error("model shape mismatch");
    BoundsReport rep;
    rep.theta_dist_renorm = (after.theta() - before.theta()).norm();
    rep.theta_dist = stats ? stats->theta_pre_renorm_dist : rep.theta_dist_renorm;
    for (Eigen::Index j = 0; j < before.k(); ++j) {
        rep.max_mean_dist =
            std::max(rep.max_mean_dist, (after.means().row(j) - before.means().row(j)).norm());
        rep.max_cov_dist_fro =
            std::max(rep.max_cov_dist_fro,
                     Covariance::frobenius_distance(after.covariances()[j], before.covariances()[j]));
    }
    const double slack = 1e-9;
    rep.pass = rep.theta_dist <= spec.delta_theta + slack &&
               rep.max_mean_dist <= spec.delta_mu + slack &&
               rep.max_cov_dist_fro <= spec.delta_mu * std::sqrt(eta) + slack;
    return rep;
}

}  // namespace qemlab
