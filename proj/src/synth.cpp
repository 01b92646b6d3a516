#include "qemlab/synth.hpp"

#include <cmath>

#include "qemlab/errors.hpp"
#include "qemlab/rng.hpp"

namespace qemlab {

void SynthSpec::validate() const {
    if (n < 1) throw domain_error("sample count must be positive");
    if (k < 1 || d < 1) throw domain_error("k and d must be positive");
    if (!(separation > 0.0)) throw domain_error("separation must be positive");
    if (!(var_lo > 0.0 && var_hi >= var_lo)) throw domain_error("bad variance range");
    if (!(mean_norm_lo > 0.0 && mean_norm_hi >= mean_norm_lo))
        throw domain_error("bad mean norm range");
    if (kind == CovarianceKind::SoftKMeans && !(beta > 0.0))
        throw domain_error("soft k-means stiffness must be positive");
}

namespace {

double min_pairwise_distance(const Eigen::MatrixXd& means) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < means.rows(); ++i)
        for (Eigen::Index j = i + 1; j < means.rows(); ++j)
            best = std::min(best, (means.row(i) - means.row(j)).norm());
    return best;
}

Eigen::MatrixXd draw_means(const SynthSpec& spec, double required_gap, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::MatrixXd means(spec.k, spec.d);
    for (int attempt = 0; attempt < 200; ++attempt) {
        for (int j = 0; j < spec.k; ++j) {
            Eigen::VectorXd dir(spec.d);
            do {
                for (int i = 0; i < spec.d; ++i) dir[i] = gauss(rng);
            } while (dir.norm() == 0.0);
            dir.normalize();
            const double norm = spec.mean_norm_lo + (spec.mean_norm_hi - spec.mean_norm_lo) * unif(rng);
            means.row(j) = (norm * dir).transpose();
        }
        if (spec.k == 1 || min_pairwise_distance(means) >= required_gap) return means;
    }
    // Separation not reachable on the shell; push the configuration outward.
    const double gap = min_pairwise_distance(means);
    if (gap > 0.0) means *= required_gap / gap;
    return means;
}

}  // namespace

SynthResult synth_mixture(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<Covariance> covs;
    covs.reserve(spec.k);
    double sigma_max = 0.0;
    auto draw_var = [&] { return spec.var_lo + (spec.var_hi - spec.var_lo) * unif(rng); };
    switch (spec.kind) {
        case CovarianceKind::Diagonal:
            for (int j = 0; j < spec.k; ++j) {
                Eigen::VectorXd v(spec.d);
                for (int i = 0; i < spec.d; ++i) v[i] = draw_var();
                sigma_max = std::max(sigma_max, v.maxCoeff());
                covs.push_back(Covariance::diagonal(std::move(v)));
            }
            break;
        case CovarianceKind::Spherical:
            for (int j = 0; j < spec.k; ++j) {
                const double v = draw_var();
                sigma_max = std::max(sigma_max, v);
                covs.push_back(Covariance::spherical(v, spec.d));
            }
            break;
        case CovarianceKind::SoftKMeans:
            sigma_max = 1.0 / (2.0 * spec.beta);
            for (int j = 0; j < spec.k; ++j) covs.push_back(Covariance::soft_kmeans(spec.beta, spec.d));
            break;
        case CovarianceKind::Full:
        case CovarianceKind::Tied: {
            const int shared = spec.kind == CovarianceKind::Tied ? 1 : spec.k;
            std::vector<Eigen::MatrixXd> mats;
            for (int j = 0; j < shared; ++j) {
                // Random rotation applied to a drawn spectrum.
                Eigen::MatrixXd g(spec.d, spec.d);
                for (int r = 0; r < spec.d; ++r)
                    for (int c = 0; c < spec.d; ++c) g(r, c) = gauss(rng);
                const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
                const Eigen::MatrixXd q = qr.householderQ();
                Eigen::VectorXd evals(spec.d);
                for (int i = 0; i < spec.d; ++i) evals[i] = draw_var();
                sigma_max = std::max(sigma_max, evals.maxCoeff());
                mats.push_back(q * evals.asDiagonal() * q.transpose());
            }
            for (int j = 0; j < spec.k; ++j) {
                const Eigen::MatrixXd& m = mats[spec.kind == CovarianceKind::Tied ? 0 : j];
                covs.push_back(spec.kind == CovarianceKind::Tied ? Covariance::tied(m)
                                                                 : Covariance::full(m));
            }
            break;
        }
    }

    const double required_gap = spec.separation * std::sqrt(sigma_max);
    Eigen::MatrixXd means = draw_means(spec, required_gap, rng);
    GmmParams truth(Eigen::VectorXd::Constant(spec.k, 1.0 / spec.k), means, covs);

    // Cholesky factors for sampling.
    std::vector<Eigen::MatrixXd> chol;
    if (spec.kind == CovarianceKind::Full || spec.kind == CovarianceKind::Tied)
        for (const auto& c : covs) chol.push_back(Eigen::LLT<Eigen::MatrixXd>(c.dense()).matrixL());

    Eigen::MatrixXd points(spec.n, spec.d);
    std::vector<int> labels(spec.n);
    for (long i = 0; i < spec.n; ++i) {
        const double u = unif(rng);
        const int j = std::min<int>(spec.k - 1, static_cast<int>(u * spec.k));
        labels[i] = j;
        Eigen::VectorXd z(spec.d);
        for (int r = 0; r < spec.d; ++r) z[r] = gauss(rng);
        Eigen::VectorXd noise;
        switch (spec.kind) {
            case CovarianceKind::Diagonal:
                noise = covs[j].variances().array().sqrt() * z.array();
                break;
            case CovarianceKind::Spherical:
            case CovarianceKind::SoftKMeans:
                noise = std::sqrt(covs[j].spherical_variance()) * z;
                break;
            default:
                noise = chol[j] * z;
        }
        points.row(i) = means.row(j) + noise.transpose();
    }
    return SynthResult{std::move(points), std::move(labels), std::move(truth)};
}

}  // namespace qemlab
