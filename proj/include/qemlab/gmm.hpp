#ifndef QEMLAB_GMM_HPP
#define QEMLAB_GMM_HPP

#include <Eigen/Dense>
#include <vector>

#include "qemlab/covariance.hpp"
#include "qemlab/dataset.hpp"

namespace qemlab {

// Mixture parameters (weights, means, covariances) with a log-determinant
// cache refreshed at construction. Immutable after construction.
class GmmParams {
  public:
    GmmParams(Eigen::VectorXd theta, Eigen::MatrixXd means, std::vector<Covariance> covariances);

    Eigen::Index k() const { return theta_.size(); }
    Eigen::Index d() const { return means_.cols(); }
    const Eigen::VectorXd& theta() const { return theta_; }
    const Eigen::MatrixXd& means() const { return means_; }
    const std::vector<Covariance>& covariances() const { return covariances_; }
    const Eigen::VectorXd& log_dets() const;
    CovarianceKind kind() const { return covariances_.front().kind(); }

    // Recomputes every cached log-determinant and checks it against the cache.
    void verify_log_dets(double tol = 1e-9) const;

  private:
    double covariance_checksum() const;

    Eigen::VectorXd theta_;
    Eigen::MatrixXd means_;
    std::vector<Covariance> covariances_;
    Eigen::VectorXd log_dets_;
    double checksum_ = 0.0;
};

// Row-stochastic posterior matrix, n rows by k components.
class Responsibilities {
  public:
    explicit Responsibilities(Eigen::MatrixXd r);

    Eigen::Index n() const { return r_.rows(); }
    Eigen::Index k() const { return r_.cols(); }
    const Eigen::MatrixXd& matrix() const { return r_; }
    Eigen::VectorXd column_sums() const { return r_.colwise().sum(); }

  private:
    Eigen::MatrixXd r_;
};

// Per-row log of theta_j * phi(v_i; mu_j, Sigma_j), the softmax arguments of
// the posterior. Shared by the three mixture statistics below.
Eigen::MatrixXd log_joint_matrix(const Dataset& data, const GmmParams& params);

Responsibilities responsibilities(const Dataset& data, const GmmParams& params);
double log_likelihood(const Dataset& data, const GmmParams& params);
// (1/n) sum_i p(v_i), the statistic driving the noisy-mode stopping rule.
double mean_probability(const Dataset& data, const GmmParams& params);

}  // namespace qemlab

#endif
