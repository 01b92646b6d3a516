#include "qemlab/gmm.hpp"

#include <cassert>
#include <cmath>

#include "qemlab/errors.hpp"
#include "qemlab/numeric.hpp"
#include "qemlab/parallel.hpp"

namespace qemlab {

GmmParams::GmmParams(Eigen::VectorXd theta, Eigen::MatrixXd means, std::vector<Covariance> covariances)
    : theta_(std::move(theta)), means_(std::move(means)), covariances_(std::move(covariances)) {
    const Eigen::Index k = theta_.size();
    if (k < 1) throw domain_error("model must have at least one component");
    if (means_.rows() != k || static_cast<Eigen::Index>(covariances_.size()) != k)
        throw domain_error("model shape mismatch between theta, means and covariances");
    if (!means_.allFinite()) throw domain_error("means contain non-finite entries");
    if ((theta_.array() < 0.0).any() || std::abs(theta_.sum() - 1.0) > 1e-12)
        throw domain_error("mixing weights must be a simplex vector");
    for (const auto& c : covariances_) {
        if (c.dim() != means_.cols()) throw domain_error("covariance dimension mismatch");
        if (c.kind() != covariances_.front().kind())
            throw domain_error("mixed covariance kinds in one model");
    }
    log_dets_.resize(k);
    for (Eigen::Index j = 0; j < k; ++j) log_dets_[j] = covariances_[j].log_det();
    checksum_ = covariance_checksum();
}

double GmmParams::covariance_checksum() const {
    double acc = 0.0;
    for (const auto& c : covariances_) acc += c.log_det() + c.max_eigenvalue();
    return acc;
}

const Eigen::VectorXd& GmmParams::log_dets() const {
    assert(checksum_ == covariance_checksum() && "stale log-determinant cache");
    return log_dets_;
}

void GmmParams::verify_log_dets(double tol) const {
    for (Eigen::Index j = 0; j < k(); ++j)
        if (std::abs(log_dets_[j] - covariances_[j].log_det()) > tol)
            throw domain_error("stale log-determinant cache");
}

Responsibilities::Responsibilities(Eigen::MatrixXd r) : r_(std::move(r)) {
    if (r_.rows() < 1 || r_.cols() < 1) throw domain_error("empty responsibility matrix");
    for (Eigen::Index i = 0; i < r_.rows(); ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < r_.cols(); ++j) {
            const double v = r_(i, j);
            if (!(v >= 0.0 && v <= 1.0)) throw domain_error("responsibility outside [0,1]");
            s += v;
        }
        if (std::abs(s - 1.0) > 1e-12) throw domain_error("responsibility row does not sum to 1");
    }
}

Eigen::MatrixXd log_joint_matrix(const Dataset& data, const GmmParams& params) {
    if (data.d() != params.d()) throw domain_error("dataset/model dimension mismatch");
    const Eigen::Index n = data.n();
    const Eigen::Index k = params.k();
    Eigen::MatrixXd lw(n, k);
    Eigen::VectorXd log_theta(k);
    for (Eigen::Index j = 0; j < k; ++j)
        log_theta[j] = params.theta()[j] > 0.0 ? std::log(params.theta()[j])
                                               : -std::numeric_limits<double>::infinity();
    const auto& log_dets = params.log_dets();
    parallel_for(n, [&](std::int64_t i) {
        const Eigen::VectorXd v = data.points().row(i).transpose();
        for (Eigen::Index j = 0; j < k; ++j)
            lw(i, j) = log_theta[j] +
                       gaussian_log_pdf(v, params.means().row(j).transpose(), params.covariances()[j],
                                        log_dets[j]);
    });
    return lw;
}

Responsibilities responsibilities(const Dataset& data, const GmmParams& params) {
    const Eigen::MatrixXd lw = log_joint_matrix(data, params);
    Eigen::MatrixXd r(lw.rows(), lw.cols());
    for (Eigen::Index i = 0; i < lw.rows(); ++i) {
        if (!std::isfinite(log_sum_exp(lw.row(i)))) throw domain_error("degenerate responsibility row");
        r.row(i) = posterior_row(lw.row(i));
    }
    return Responsibilities(std::move(r));
}

double log_likelihood(const Dataset& data, const GmmParams& params) {
    const Eigen::MatrixXd lw = log_joint_matrix(data, params);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < lw.rows(); ++i) acc += log_sum_exp(lw.row(i));
    return acc;
}

double mean_probability(const Dataset& data, const GmmParams& params) {
    const Eigen::MatrixXd lw = log_joint_matrix(data, params);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < lw.rows(); ++i) acc += std::exp(log_sum_exp(lw.row(i)));
    return acc / static_cast<double>(lw.rows());
}

}  // namespace qemlab
