#ifndef QEMLAB_PROFILER_HPP
#define QEMLAB_PROFILER_HPP

#include <optional>
#include <vector>

#include "qemlab/gmm.hpp"
#include "qemlab/rng.hpp"

namespace qemlab {

// sigma_max / sigma_min over the retained singular values. With a threshold,
// values at or below it are discarded before taking the ratio.
double condition_number(const Eigen::MatrixXd& m, std::optional<double> threshold = std::nullopt);

// min over p in {0, 1/4, 1/2, 3/4, 1} of (||M||_F, sqrt(s_{2p}(M) s_{2(1-p)}(M')))
// after rescaling M to unit spectral norm.
double mu_param(const Eigen::MatrixXd& m);

// Maximum squared row norm once the shortest row is rescaled to unit norm.
double eta(const Dataset& data);

double logdet_exact(const Eigen::MatrixXd& sigma);

struct LogdetConfig {
    double degree_constant = 1.0;   // m = ceil(const * sqrt(kappa) * log(1/eps_poly))
    double probe_constant = 14.0;   // p = ceil(const * log(2/delta) / eps^2)
    std::int64_t probe_cap = 20000;
    int power_iters = 20;
    double rescale_safety = 1.1;
};

// Two-phase stochastic estimator: Hutchinson probes through a Chebyshev
// expansion of log on the rescaled spectrum, a coarse quarter-precision pass
// to size the fine pass, then the -d log c correction.
double logdet_chebyshev(const Eigen::MatrixXd& sigma, double eps, double delta, Rng& rng,
                        const LogdetConfig& cfg = {});

struct ProfileReport {
    Eigen::Index n = 0;
    Eigen::Index d = 0;
    Eigen::Index k = 0;
    double kappa_V = 0.0;
    std::vector<double> kappa_sigma;              // raw condition numbers
    std::vector<double> kappa_sigma_thresholded;  // after discarding small singular values
    double mu_V = 0.0;
    std::optional<double> mu_V_prime;
    double mu_V_prime_frobenius_bound = 0.0;      // streaming ||V'||_F / ||V'||_2 upper bound
    std::vector<double> mu_sigma;
    double eta = 0.0;
    std::vector<double> log_abs_dets;             // stochastic estimates
    std::vector<double> log_abs_dets_exact;       // eigendecomposition cross-check
    std::vector<double> spectral_norms;
};

struct ProfileConfig {
    double sigma_threshold = 0.07;
    double logdet_eps = 0.5;
    double logdet_delta = 0.1;
    std::uint64_t seed = 1;
    std::int64_t vprime_budget_bytes = 1LL << 28;
    LogdetConfig logdet;
};

ProfileReport profile(const Dataset& data, const GmmParams& params, bool include_v_prime,
                      const ProfileConfig& cfg = {});

}  // namespace qemlab

#endif
