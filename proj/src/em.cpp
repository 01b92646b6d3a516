#include "qemlab/em.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "qemlab/errors.hpp"
#include "qemlab/numeric.hpp"

namespace qemlab {

namespace {

// Clamp every eigenvalue of a dense SPD candidate from below.
Eigen::MatrixXd floor_spd(const Eigen::MatrixXd& m, double floor) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    Eigen::VectorXd evals = es.eigenvalues().cwiseMax(floor);
    return es.eigenvectors() * evals.asDiagonal() * es.eigenvectors().transpose();
}

Covariance covariance_from_dense(const Eigen::MatrixXd& scatter, CovarianceKind kind,
                                 double reg_floor, double beta) {
    const Eigen::Index d = scatter.rows();
    switch (kind) {
        case CovarianceKind::Full:
            return Covariance::full(floor_spd(scatter, reg_floor));
        case CovarianceKind::Tied:
            return Covariance::tied(floor_spd(scatter, reg_floor));
        case CovarianceKind::Diagonal:
            return Covariance::diagonal(scatter.diagonal().cwiseMax(reg_floor));
        case CovarianceKind::Spherical:
            return Covariance::spherical(std::max(scatter.trace() / static_cast<double>(d), reg_floor), d);
        case CovarianceKind::SoftKMeans:
            return Covariance::soft_kmeans(beta, d);
    }
    throw domain_error("unknown covariance kind");
}

Covariance covariance_from_diag(const Eigen::VectorXd& second_moments, CovarianceKind kind,
                                double reg_floor, double beta) {
    const Eigen::Index d = second_moments.size();
    switch (kind) {
        case CovarianceKind::Diagonal:
            return Covariance::diagonal(second_moments.cwiseMax(reg_floor));
        case CovarianceKind::Spherical:
            return Covariance::spherical(std::max(second_moments.mean(), reg_floor), d);
        case CovarianceKind::SoftKMeans:
            return Covariance::soft_kmeans(beta, d);
        default:
            throw domain_error("dense covariance kind requires a dense scatter");
    }
}

bool diagonal_kind(CovarianceKind kind) {
    return kind == CovarianceKind::Diagonal || kind == CovarianceKind::Spherical ||
           kind == CovarianceKind::SoftKMeans;
}

// Population scatter of the whole dataset about its mean, as a dense matrix.
Eigen::MatrixXd global_scatter(const Dataset& data) {
    const Eigen::MatrixXd centered = data.points().rowwise() - data.points().colwise().mean();
    return centered.transpose() * centered / static_cast<double>(data.n());
}

std::vector<Eigen::Index> sample_distinct_rows(Eigen::Index n, int k, Rng& rng) {
    std::vector<Eigen::Index> idx(n);
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    for (int j = 0; j < k; ++j) {
        std::uniform_int_distribution<Eigen::Index> pick(j, n - 1);
        std::swap(idx[j], idx[pick(rng)]);
    }
    idx.resize(k);
    return idx;
}

GmmParams init_random_em(const Dataset& data, const FitConfig& cfg, Rng& rng) {
    const auto rows = sample_distinct_rows(data.n(), cfg.k, rng);
    Eigen::MatrixXd means(cfg.k, data.d());
    for (int j = 0; j < cfg.k; ++j) means.row(j) = data.points().row(rows[j]);
    const double floor = resolve_reg_floor(data, cfg.reg_floor);
    const Eigen::MatrixXd scatter = global_scatter(data);
    std::vector<Covariance> covs;
    covs.reserve(cfg.k);
    for (int j = 0; j < cfg.k; ++j)
        covs.push_back(covariance_from_dense(scatter, cfg.kind, floor, cfg.beta));
    return GmmParams(Eigen::VectorXd::Constant(cfg.k, 1.0 / cfg.k), std::move(means), std::move(covs));
}

// D^2 seeding followed by a few Lloyd rounds; empty clusters are re-seeded
// from the point farthest from its assigned centroid (lowest index on ties).
GmmParams init_kmeanspp(const Dataset& data, const FitConfig& cfg, Rng& rng) {
    const Eigen::Index n = data.n();
    const Eigen::Index d = data.d();
    const int k = cfg.k;
    const auto& V = data.points();

    Eigen::MatrixXd centroids(k, d);
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    centroids.row(0) = V.row(first(rng));

    Eigen::VectorXd mindist2 = (V.rowwise() - centroids.row(0)).rowwise().squaredNorm();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int j = 1; j < k; ++j) {
        const double total = mindist2.sum();
        Eigen::Index chosen = 0;
        if (total > 0.0) {
            const double target = total * unif(rng);
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += mindist2[i];
                if (acc >= target) { chosen = i; break; }
                chosen = i;
            }
        } else {
            // Only duplicates of already-chosen points remain.
            chosen = j % n;
        }
        centroids.row(j) = V.row(chosen);
        mindist2 = mindist2.cwiseMin((V.rowwise() - centroids.row(j)).rowwise().squaredNorm());
    }

    std::vector<int> assign(n, 0);
    auto assign_all = [&] {
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double bestd = (V.row(i) - centroids.row(0)).squaredNorm();
            for (int j = 1; j < k; ++j) {
                const double dj = (V.row(i) - centroids.row(j)).squaredNorm();
                if (dj < bestd) { bestd = dj; best = j; }
            }
            assign[i] = best;
        }
    };

    const int rounds = std::max(1, cfg.init.rounds);
    for (int r = 0; r < rounds; ++r) {
        assign_all();
        std::vector<Eigen::Index> counts(k, 0);
        for (Eigen::Index i = 0; i < n; ++i) ++counts[assign[i]];
        for (int j = 0; j < k; ++j) {
            if (counts[j] > 0) continue;
            Eigen::Index far = 0;
            double fard = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double di = (V.row(i) - centroids.row(assign[i])).squaredNorm();
                if (di > fard) { fard = di; far = i; }
            }
            centroids.row(j) = V.row(far);
            assign_all();
            counts.assign(k, 0);
            for (Eigen::Index i = 0; i < n; ++i) ++counts[assign[i]];
        }
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, d);
        for (Eigen::Index i = 0; i < n; ++i) sums.row(assign[i]) += V.row(i);
        for (int j = 0; j < k; ++j)
            if (counts[j] > 0) centroids.row(j) = sums.row(j) / static_cast<double>(counts[j]);
    }
    assign_all();

    const double floor = resolve_reg_floor(data, cfg.reg_floor);
    Eigen::VectorXd theta(k);
    std::vector<Covariance> covs;
    covs.reserve(k);
    std::vector<Eigen::Index> counts(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) ++counts[assign[i]];

    Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(d, d);
    for (int j = 0; j < k; ++j) {
        theta[j] = static_cast<double>(counts[j]) / static_cast<double>(n);
        Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
        if (diagonal_kind(cfg.kind)) {
            Eigen::VectorXd m2 = Eigen::VectorXd::Zero(d);
            for (Eigen::Index i = 0; i < n; ++i)
                if (assign[i] == j) m2 += (V.row(i) - centroids.row(j)).array().square().matrix().transpose();
            if (counts[j] > 0) m2 /= static_cast<double>(counts[j]);
            covs.push_back(covariance_from_diag(m2, cfg.kind, floor, cfg.beta));
            continue;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            if (assign[i] != j) continue;
            const Eigen::VectorXd c = (V.row(i) - centroids.row(j)).transpose();
            scatter += c * c.transpose();
        }
        if (counts[j] > 0) scatter /= static_cast<double>(counts[j]);
        if (cfg.kind == CovarianceKind::Tied)
            pooled += scatter * theta[j];
        else
            covs.push_back(covariance_from_dense(scatter, cfg.kind, floor, cfg.beta));
    }
    if (cfg.kind == CovarianceKind::Tied)
        for (int j = 0; j < k; ++j) covs.push_back(covariance_from_dense(pooled, cfg.kind, floor, cfg.beta));
    return GmmParams(std::move(theta), std::move(centroids), std::move(covs));
}

GmmParams init_cem(const Dataset& data, const FitConfig& cfg, Rng& rng) {
    const GmmParams start = init_random_em(data, cfg, rng);
    const Responsibilities resp = e_step(data, start);
    Eigen::MatrixXd hard = Eigen::MatrixXd::Zero(resp.n(), resp.k());
    for (Eigen::Index i = 0; i < resp.n(); ++i)
        hard(i, argmax_lowest(resp.matrix().row(i))) = 1.0;
    return m_step_ml(data, Responsibilities(std::move(hard)), cfg.kind,
                     resolve_reg_floor(data, cfg.reg_floor), cfg.beta);
}

GmmParams init_small_em(const Dataset& data, const FitConfig& cfg, Rng& rng) {
    const int restarts = std::max(1, cfg.init.restarts);
    const int burn = std::max(1, cfg.init.burn_iters);
    std::optional<GmmParams> best;
    double best_ll = -std::numeric_limits<double>::infinity();
    const double floor = resolve_reg_floor(data, cfg.reg_floor);
    for (int r = 0; r < restarts; ++r) {
        GmmParams params = init_random_em(data, cfg, rng);
        for (int t = 0; t < burn; ++t)
            params = m_step_ml(data, e_step(data, params), cfg.kind, floor, cfg.beta);
        const double ll = log_likelihood(data, params);
        if (ll > best_ll) {
            best_ll = ll;
            best = std::move(params);
        }
    }
    return *best;
}

}  // namespace

void FitConfig::validate() const {
    if (k < 1) throw domain_error("component count must be positive");
    if (!(eps_tau > 0.0)) throw domain_error("eps_tau must be positive");
    if (max_iters < 1) throw domain_error("max_iters must be at least 1");
    if (kind == CovarianceKind::SoftKMeans && !(beta > 0.0))
        throw domain_error("soft k-means stiffness must be positive");
    if (estimator == Estimator::Map && kind == CovarianceKind::Tied)
        throw domain_error("MAP estimation does not support tied covariances");
}

double resolve_reg_floor(const Dataset& data, double reg_floor) {
    if (reg_floor > 0.0) return reg_floor;
    const Eigen::RowVectorXd mean = data.points().colwise().mean();
    const double mean_var = (data.points().rowwise() - mean).array().square().mean();
    return std::max(1e-6 * mean_var, 1e-300);
}

GmmParams initialize(const Dataset& data, const FitConfig& cfg, Rng& rng) {
    cfg.validate();
    if (cfg.k > data.n()) throw domain_error("k > n");
    switch (cfg.init.kind) {
        case InitStrategy::Kind::RandomEM: return init_random_em(data, cfg, rng);
        case InitStrategy::Kind::KMeansPP: return init_kmeanspp(data, cfg, rng);
        case InitStrategy::Kind::SmallEM: return init_small_em(data, cfg, rng);
        case InitStrategy::Kind::CEM: return init_cem(data, cfg, rng);
    }
    throw domain_error("unknown initialization strategy");
}

Responsibilities e_step(const Dataset& data, const GmmParams& params) {
    return responsibilities(data, params);
}

GmmParams m_step_ml(const Dataset& data, const Responsibilities& resp, CovarianceKind kind,
                    double reg_floor, double beta) {
    const Eigen::Index n = data.n();
    const Eigen::Index d = data.d();
    const Eigen::Index k = resp.k();
    if (resp.n() != n) throw domain_error("responsibility/dataset shape mismatch");

    const Eigen::VectorXd rj = resp.column_sums();
    for (Eigen::Index j = 0; j < k; ++j)
        if (rj[j] < 1e-12 * static_cast<double>(n))
            throw domain_error("empty component " + std::to_string(j));

    const Eigen::VectorXd theta = rj / static_cast<double>(n);
    const Eigen::MatrixXd weighted_sums = resp.matrix().transpose() * data.points();  // k x d
    const Eigen::MatrixXd means = weighted_sums.array().colwise() / rj.array();

    std::vector<Covariance> covs;
    covs.reserve(k);
    if (diagonal_kind(kind)) {
        // Per-dimension weighted second moments about the fresh means.
        Eigen::MatrixXd m2 = resp.matrix().transpose() * data.points().array().square().matrix();
        for (Eigen::Index j = 0; j < k; ++j) {
            const Eigen::VectorXd mj = means.row(j).transpose();
            Eigen::VectorXd diag = m2.row(j).transpose() / rj[j] - mj.array().square().matrix();
            covs.push_back(covariance_from_diag(diag, kind, reg_floor, beta));
        }
    } else {
        Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(d, d);
        for (Eigen::Index j = 0; j < k; ++j) {
            const Eigen::MatrixXd centered = data.points().rowwise() - means.row(j);
            const Eigen::MatrixXd scatter =
                centered.transpose() * resp.matrix().col(j).asDiagonal() * centered / rj[j];
            if (kind == CovarianceKind::Tied)
                pooled += scatter * theta[j];
            else
                covs.push_back(covariance_from_dense(scatter, kind, reg_floor, beta));
        }
        if (kind == CovarianceKind::Tied)
            for (Eigen::Index j = 0; j < k; ++j)
                covs.push_back(covariance_from_dense(pooled, kind, reg_floor, beta));
    }
    return GmmParams(theta, means, std::move(covs));
}

GmmParams m_step_map(const Dataset& data, const Responsibilities& resp, const MapPrior& prior,
                     double reg_floor, CovarianceKind kind, double beta) {
    const Eigen::Index n = data.n();
    const Eigen::Index d = data.d();
    const Eigen::Index k = resp.k();
    if (resp.n() != n) throw domain_error("responsibility/dataset shape mismatch");
    if (prior.alpha.size() != k || prior.m0.size() != d)
        throw domain_error("prior shape mismatch");
    if ((prior.alpha.array() <= 0.0).any()) throw domain_error("Dirichlet parameters must be positive");
    if (!(prior.iota0 > 0.0)) throw domain_error("iota0 must be positive");
    if (!(prior.nu0 + static_cast<double>(d) + 2.0 > 0.0))
        throw domain_error("nu0 + d + 2 must be positive");

    const Eigen::MatrixXd S0 =
        prior.S0 ? *prior.S0 : pooled_prior_s0(data, static_cast<int>(k), reg_floor);
    if (S0.rows() != d || S0.cols() != d) throw domain_error("prior shape mismatch");

    const Eigen::VectorXd rj = resp.column_sums();
    const double alpha_sum = prior.alpha.sum();
    Eigen::VectorXd theta(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        theta[j] = (rj[j] + prior.alpha[j] - 1.0) /
                   (static_cast<double>(n) + alpha_sum - static_cast<double>(k));
        if (theta[j] < 0.0) throw domain_error("invalid Dirichlet prior for empty component");
    }
    // Guard against rounding drift off the simplex.
    theta /= theta.sum();

    const Eigen::MatrixXd weighted_sums = resp.matrix().transpose() * data.points();  // k x d
    Eigen::MatrixXd means(k, d);
    std::vector<Covariance> covs;
    covs.reserve(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const Eigen::VectorXd wj = weighted_sums.row(j).transpose();  // r_j * xbar_j
        means.row(j) = ((wj + prior.iota0 * prior.m0) / (rj[j] + prior.iota0)).transpose();

        const Eigen::VectorXd xbar = rj[j] > 0.0 ? (wj / rj[j]).eval() : prior.m0;
        const Eigen::MatrixXd centered = data.points().rowwise() - xbar.transpose();
        const Eigen::MatrixXd scatter_sum =
            centered.transpose() * resp.matrix().col(j).asDiagonal() * centered;
        const Eigen::VectorXd dev = xbar - prior.m0;
        const double shrink = prior.iota0 * rj[j] / (prior.iota0 + rj[j]);
        const Eigen::MatrixXd sigma =
            (S0 + scatter_sum + shrink * dev * dev.transpose()) /
            (prior.nu0 + rj[j] + static_cast<double>(d) + 2.0);
        covs.push_back(covariance_from_dense(sigma, kind, reg_floor, beta));
    }
    return GmmParams(std::move(theta), std::move(means), std::move(covs));
}

Eigen::MatrixXd pooled_prior_s0(const Dataset& data, int k, double reg_floor) {
    if (data.n() < 2) throw domain_error("pooled prior needs at least two samples");
    const Eigen::RowVectorXd mean = data.points().colwise().mean();
    Eigen::VectorXd s2 =
        (data.points().rowwise() - mean).array().square().colwise().mean().transpose();
    s2 = s2.cwiseMax(reg_floor);
    const double scale = std::pow(static_cast<double>(k), -1.0 / static_cast<double>(data.d()));
    return (scale * s2).asDiagonal();
}

FitResult fit(const Dataset& data, const FitConfig& cfg, const std::optional<NoiseSpec>& noise) {
    cfg.validate();
    if (noise) noise->validate();
    Rng rng(cfg.seed);
    const double floor = resolve_reg_floor(data, cfg.reg_floor);
    const double eta = noise ? data.eta() : 1.0;
    // The mean-probability stopping rule is tied to actual parameter noise;
    // a channel that only thresholds keeps the clean criterion.
    const bool qem_mode = noise && (noise->delta_theta > 0.0 || noise->delta_mu > 0.0);

    GmmParams params = initialize(data, cfg, rng);
    std::optional<MapPrior> prior = cfg.prior;
    if (cfg.estimator == Estimator::Map && !prior) {
        MapPrior p;
        p.alpha = Eigen::VectorXd::Constant(cfg.k, 1.0);
        p.m0 = data.points().colwise().mean().transpose();
        p.iota0 = 1.0;
        p.nu0 = static_cast<double>(data.d()) + 2.0;
        prior = std::move(p);
    }

    std::vector<IterationRecord> trace;
    bool converged = false;
    double prev_ll = std::numeric_limits<double>::quiet_NaN();
    double prev_mp = std::numeric_limits<double>::quiet_NaN();

    for (int t = 1; t <= cfg.max_iters; ++t) {
        const auto t0 = std::chrono::steady_clock::now();
        const Responsibilities resp = e_step(data, params);
        params = cfg.estimator == Estimator::Map
                     ? m_step_map(data, resp, *prior, floor, cfg.kind, cfg.beta)
                     : m_step_ml(data, resp, cfg.kind, floor, cfg.beta);
        if (noise) params = apply_noise(params, *noise, eta, rng);

        // One pass serves both statistics.
        const Eigen::MatrixXd lw = log_joint_matrix(data, params);
        double ll = 0.0, mp = 0.0;
        for (Eigen::Index i = 0; i < lw.rows(); ++i) {
            const double lse = log_sum_exp(lw.row(i));
            ll += lse;
            mp += std::exp(lse);
        }
        mp /= static_cast<double>(lw.rows());

        IterationRecord rec;
        rec.iter = t;
        rec.log_likelihood = ll;
        rec.mean_probability = mp;
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        rec.likelihood_decreased = t > 1 && ll < prev_ll - 1e-9 * std::abs(prev_ll);
        trace.push_back(rec);

        if (t > 1) {
            const bool stop = qem_mode
                                  ? std::abs(mp - prev_mp) < cfg.eps_tau
                                  : std::abs(ll - prev_ll) / static_cast<double>(data.n()) < cfg.eps_tau;
            if (stop) {
                converged = true;
                break;
            }
        }
        prev_ll = ll;
        prev_mp = mp;
    }

    return FitResult{std::move(params), static_cast<int>(trace.size()), std::move(trace), converged};
}

std::vector<int> predict_labels(const Dataset& data, const GmmParams& params) {
    const Responsibilities resp = responsibilities(data, params);
    std::vector<int> labels(resp.n());
    for (Eigen::Index i = 0; i < resp.n(); ++i)
        labels[i] = static_cast<int>(argmax_lowest(resp.matrix().row(i)));
    return labels;
}

}  // namespace qemlab
