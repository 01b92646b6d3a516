#ifndef QEMLAB_NOISE_HPP
#define QEMLAB_NOISE_HPP

#include <optional>

#include "qemlab/gmm.hpp"
#include "qemlab/rng.hpp"

namespace qemlab {

// Per-iteration perturbation applied to a fitted model: truncated-Gaussian
// noise on theta and the means, spectral noise plus thresholding on the
// covariances. delta_theta/delta_mu bound the distances to the unperturbed
// parameters; sigma_floor and kappa_cap act as spectral regularization.
struct NoiseSpec {
    double delta_theta = 0.0;
    double delta_mu = 0.0;
    double sigma_floor = 0.07;
    std::optional<double> kappa_cap;
    double trunc_sigma = 1.0;

    void validate() const;
};

struct ApplyStats {
    double theta_pre_renorm_dist = 0.0;
};

Eigen::VectorXd perturb_theta(const Eigen::VectorXd& theta, const NoiseSpec& spec, Rng& rng,
                              double* pre_renorm_dist = nullptr);

Eigen::MatrixXd perturb_means(const Eigen::MatrixXd& means, const NoiseSpec& spec, Rng& rng);

std::vector<Covariance> perturb_covariances(const std::vector<Covariance>& covs, double eta,
                                            const NoiseSpec& spec, Rng& rng);

GmmParams apply_noise(const GmmParams& params, const NoiseSpec& spec, double eta, Rng& rng,
                      ApplyStats* stats = nullptr);

struct BoundsReport {
    double theta_dist = 0.0;        // pre-renormalization when stats supplied
    double theta_dist_renorm = 0.0;
    double max_mean_dist = 0.0;
    double max_cov_dist_fro = 0.0;
    bool pass = false;
};

BoundsReport verify_bounds(const GmmParams& before, const GmmParams& after, const NoiseSpec& spec,
                           double eta, const ApplyStats* stats = nullptr);

}  // namespace qemlab

#endif
