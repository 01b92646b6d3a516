#include "qemlab/covariance.hpp"

#include <algorithm>
#include <cmath>

#include "qemlab/errors.hpp"
#include "qemlab/numeric.hpp"

namespace qemlab {

const char* to_string(CovarianceKind kind) {
    switch (kind) {
        case CovarianceKind::Full: return "full";
        case CovarianceKind::Diagonal: return "diagonal";
        case CovarianceKind::Spherical: return "spherical";
        case CovarianceKind::Tied: return "tied";
        case CovarianceKind::SoftKMeans: return "soft_kmeans";
    }
    return "full";
}

CovarianceKind covariance_kind_from_string(const std::string& name) {
    if (name == "full") return CovarianceKind::Full;
    if (name == "diagonal") return CovarianceKind::Diagonal;
    if (name == "spherical") return CovarianceKind::Spherical;
    if (name == "tied") return CovarianceKind::Tied;
    if (name == "soft_kmeans") return CovarianceKind::SoftKMeans;
    throw config_error("unknown covariance kind: " + name);
}

Covariance Covariance::full(const Eigen::MatrixXd& sigma) {
    if (sigma.rows() != sigma.cols() || sigma.rows() < 1)
        throw domain_error("covariance must be square");
    if (!sigma.allFinite()) throw domain_error("covariance contains non-finite entries");
    if (!sigma.isApprox(sigma.transpose(), 1e-10))
        throw domain_error("covariance not symmetric");
    Covariance c;
    c.kind_ = CovarianceKind::Full;
    c.dim_ = sigma.rows();
    c.matrix_ = 0.5 * (sigma + sigma.transpose());
    c.llt_.compute(c.matrix_);
    if (c.llt_.info() != Eigen::Success)
        throw domain_error("covariance not positive definite");
    c.log_det_ = 2.0 * c.llt_.matrixLLT().diagonal().array().log().sum();
    if (!std::isfinite(c.log_det_)) throw domain_error("covariance not positive definite");
    return c;
}

Covariance Covariance::tied(const Eigen::MatrixXd& sigma) {
    Covariance c = full(sigma);
    c.kind_ = CovarianceKind::Tied;
    return c;
}

Covariance Covariance::diagonal(Eigen::VectorXd variances) {
    Covariance c;
    c.kind_ = CovarianceKind::Diagonal;
    c.dim_ = variances.size();
    if (c.dim_ < 1) throw domain_error("covariance must be square");
    if (!variances.allFinite() || (variances.array() <= 0.0).any())
        throw domain_error("covariance not positive definite");
    c.diag_ = std::move(variances);
    c.log_det_ = c.diag_.array().log().sum();
    return c;
}

Covariance Covariance::spherical(double variance, Eigen::Index dim) {
    Covariance c;
    c.kind_ = CovarianceKind::Spherical;
    c.dim_ = dim;
    if (dim < 1) throw domain_error("covariance must be square");
    if (!(variance > 0.0) || !std::isfinite(variance))
        throw domain_error("covariance not positive definite");
    c.spherical_ = variance;
    c.log_det_ = static_cast<double>(dim) * std::log(variance);
    return c;
}

Covariance Covariance::soft_kmeans(double beta, Eigen::Index dim) {
    if (!(beta > 0.0)) throw domain_error("soft k-means stiffness must be positive");
    Covariance c = spherical(1.0 / (2.0 * beta), dim);
    c.kind_ = CovarianceKind::SoftKMeans;
    c.beta_ = beta;
    return c;
}

double Covariance::quad_form(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != dim_) throw domain_error("covariance/vector dimension mismatch");
    switch (kind_) {
        case CovarianceKind::Full:
        case CovarianceKind::Tied:
            return x.dot(llt_.solve(x));
        case CovarianceKind::Diagonal:
            return (x.array().square() / diag_.array()).sum();
        case CovarianceKind::Spherical:
        case CovarianceKind::SoftKMeans:
            return x.squaredNorm() / spherical_;
    }
    return 0.0;
}

Eigen::VectorXd Covariance::apply(const Eigen::Ref<const Eigen::VectorXd>& x, bool inverse) const {
    if (x.size() != dim_) throw domain_error("covariance/vector dimension mismatch");
    switch (kind_) {
        case CovarianceKind::Full:
        case CovarianceKind::Tied:
            return inverse ? llt_.solve(x).eval() : (matrix_ * x).eval();
        case CovarianceKind::Diagonal:
            return inverse ? (x.array() / diag_.array()).matrix().eval()
                           : (x.array() * diag_.array()).matrix().eval();
        case CovarianceKind::Spherical:
        case CovarianceKind::SoftKMeans:
            return inverse ? (x / spherical_).eval() : (x * spherical_).eval();
    }
    return x;
}

Eigen::MatrixXd Covariance::dense() const {
    switch (kind_) {
        case CovarianceKind::Full:
        case CovarianceKind::Tied:
            return matrix_;
        case CovarianceKind::Diagonal:
            return diag_.asDiagonal();
        case CovarianceKind::Spherical:
        case CovarianceKind::SoftKMeans:
            return spherical_ * Eigen::MatrixXd::Identity(dim_, dim_);
    }
    return matrix_;
}

Eigen::VectorXd Covariance::eigenvalues() const {
    switch (kind_) {
        case CovarianceKind::Full:
        case CovarianceKind::Tied: {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix_, Eigen::EigenvaluesOnly);
            return es.eigenvalues();
        }
        case CovarianceKind::Diagonal: {
            Eigen::VectorXd v = diag_;
            std::sort(v.data(), v.data() + v.size());
            return v;
        }
        case CovarianceKind::Spherical:
        case CovarianceKind::SoftKMeans:
            return Eigen::VectorXd::Constant(dim_, spherical_);
    }
    return diag_;
}

double Covariance::min_eigenvalue() const {
    if (is_dense_storage()) return eigenvalues().minCoeff();
    if (kind_ == CovarianceKind::Diagonal) return diag_.minCoeff();
    return spherical_;
}

double Covariance::max_eigenvalue() const {
    if (is_dense_storage()) return eigenvalues().maxCoeff();
    if (kind_ == CovarianceKind::Diagonal) return diag_.maxCoeff();
    return spherical_;
}

double Covariance::frobenius_distance(const Covariance& a, const Covariance& b) {
    if (a.dim() != b.dim()) throw domain_error("covariance shape mismatch");
    if (a.kind() == b.kind()) {
        switch (a.kind()) {
            case CovarianceKind::Diagonal:
                return (a.diag_ - b.diag_).norm();
            case CovarianceKind::Spherical:
            case CovarianceKind::SoftKMeans:
                return std::abs(a.spherical_ - b.spherical_) * std::sqrt(static_cast<double>(a.dim_));
            default:
                break;
        }
    }
    return (a.dense() - b.dense()).norm();
}

double gaussian_log_pdf(const Eigen::Ref<const Eigen::VectorXd>& v,
                        const Eigen::Ref<const Eigen::VectorXd>& mu,
                        const Covariance& sigma, double log_det) {
    if (v.size() != mu.size() || v.size() != sigma.dim())
        throw domain_error("gaussian_log_pdf dimension mismatch");
    const double quad = sigma.quad_form(v - mu);
    return -0.5 * (quad + static_cast<double>(v.size()) * kLog2Pi + log_det);
}

}  // namespace qemlab
