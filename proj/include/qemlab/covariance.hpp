#ifndef QEMLAB_COVARIANCE_HPP
#define QEMLAB_COVARIANCE_HPP

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <string>

namespace qemlab {

enum class CovarianceKind { Full, Diagonal, Spherical, Tied, SoftKMeans };

const char* to_string(CovarianceKind kind);
CovarianceKind covariance_kind_from_string(const std::string& name);

// SPD covariance with kind-dependent storage. Full/Tied keep the dense matrix
// plus its Cholesky factor; Diagonal keeps the variance vector; Spherical and
// SoftKMeans keep a single variance. Instances are immutable.
class Covariance {
  public:
    static Covariance full(const Eigen::MatrixXd& sigma);
    static Covariance tied(const Eigen::MatrixXd& sigma);
    static Covariance diagonal(Eigen::VectorXd variances);
    static Covariance spherical(double variance, Eigen::Index dim);
    // Soft k-means stiffness beta fixes the covariance at I/(2*beta).
    static Covariance soft_kmeans(double beta, Eigen::Index dim);

    CovarianceKind kind() const { return kind_; }
    Eigen::Index dim() const { return dim_; }
    double beta() const { return beta_; }

    double log_det() const { return log_det_; }
    // x' Sigma^{-1} x via the stored factorization.
    double quad_form(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    // Sigma^{+1} x or Sigma^{-1} x.
    Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x, bool inverse) const;

    Eigen::MatrixXd dense() const;
    // Ascending eigenvalues (diagonal entries sorted for the diagonal kinds).
    Eigen::VectorXd eigenvalues() const;
    double min_eigenvalue() const;
    double max_eigenvalue() const;

    bool is_dense_storage() const { return kind_ == CovarianceKind::Full || kind_ == CovarianceKind::Tied; }
    const Eigen::VectorXd& variances() const { return diag_; }
    double spherical_variance() const { return spherical_; }

    // Same-shape Frobenius distance, computed in the compact storage.
    static double frobenius_distance(const Covariance& a, const Covariance& b);

  private:
    Covariance() = default;

    CovarianceKind kind_ = CovarianceKind::Full;
    Eigen::Index dim_ = 0;
    Eigen::MatrixXd matrix_;       // Full/Tied
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd diag_;         // Diagonal
    double spherical_ = 1.0;       // Spherical/SoftKMeans
    double beta_ = 0.0;
    double log_det_ = 0.0;
};

// Exact log density of N(mu, sigma) at v, with the log-determinant supplied
// by the caller (normally the cache held in GmmParams).
double gaussian_log_pdf(const Eigen::Ref<const Eigen::VectorXd>& v,
                        const Eigen::Ref<const Eigen::VectorXd>& mu,
                        const Covariance& sigma, double log_det);

}  // namespace qemlab

#endif
