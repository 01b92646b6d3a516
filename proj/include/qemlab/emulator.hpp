#ifndef QEMLAB_EMULATOR_HPP
#define QEMLAB_EMULATOR_HPP

#include <cstdint>
#include <functional>

#include "qemlab/gmm.hpp"
#include "qemlab/rng.hpp"

namespace qemlab {

// Emulation philosophy: every routine below knows the exact answer and draws
// its estimate from the measurement statistics the corresponding procedure
// would produce, so the error contracts (and their failure events) are real
// samples rather than assumptions. `failed` records whether the drawn
// estimate landed outside the contract's budget.
struct ScalarEstimate {
    double value = 0.0;
    double error_budget = 0.0;
    std::int64_t samples_used = 0;
    bool failed = false;
};

struct VectorEstimate {
    Eigen::VectorXd value;
    double error_budget = 0.0;
    std::int64_t samples_used = 0;
    bool failed = false;
};

struct EmulatorConfig {
    double tomography_constant = 36.0;  // C in N = ceil(C ln d / delta^2)
    int median_runs = 15;               // internal boosting for form estimates
    double grid_margin = 8.0;           // amplitude grid oversizing factor
};

// Per-coordinate reconstruction of a unit vector from 2N simulated
// measurement rounds: N computational-basis shots for the magnitudes and N
// interference shots against the uniform reference for the signs.
VectorEstimate tomography_linf(const Eigen::VectorXd& x, double delta, Rng& rng,
                               const EmulatorConfig& cfg = {});

// Same protocol with N = ceil(C d ln d / eps^2) shots and an l2 budget.
VectorEstimate tomography_l2(const Eigen::VectorXd& x, double eps, Rng& rng,
                             const EmulatorConfig& cfg = {});

// One draw from the canonical M-point phase-estimation outcome distribution
// for amplitude a; the estimate is the grid value sin^2(pi m / M).
ScalarEstimate amplitude_estimate(double a, std::int64_t M, Rng& rng);

// Full outcome pmf over the grid m = 0..M-1 (sums to 1).
Eigen::VectorXd amplitude_outcome_distribution(double a, std::int64_t M);

// |a_hat - a| <= 2 pi sqrt(a(1-a))/M + pi^2/M^2 holds with probability >= 8/pi^2.
double amplitude_error_bound(double a, std::int64_t M);

double median_boost(const std::function<double()>& estimator, int runs);

// v' Sigma^{+-1} v with an amplitude-estimation error channel calibrated so
// |estimate - truth| <= eps * ||v||^2. Requires spectral norm of sigma <= 1.
ScalarEstimate quadratic_form_estimate(const Eigen::VectorXd& v, const Covariance& sigma,
                                       bool inverse, double eps, Rng& rng,
                                       const EmulatorConfig& cfg = {});

// Gaussian exponent -(1/2)((v-mu)' Sigma^{-1} (v-mu) + d log 2pi + log det),
// assembled from three quadratic-form estimates at eps1/4 plus the supplied
// log-determinant estimate. Total budget 2 eps1. eps1 == 0 is the exact path.
ScalarEstimate gaussian_exponent_estimate(const Eigen::VectorXd& v, const Eigen::VectorXd& mu,
                                          const Covariance& sigma, double log_det_est, double eps1,
                                          Rng& rng, const EmulatorConfig& cfg = {});

// Posterior row for one sample: per-component exponents at eps1/sqrt(2k),
// then softmax. Entrywise budget eps1.
VectorEstimate responsibility_estimate(const Eigen::VectorXd& v, const GmmParams& params,
                                       double eps1, Rng& rng, const EmulatorConfig& cfg = {});

struct ComposeReport {
    std::int64_t trials = 0;
    double max_angle_ratio = 0.0;    // ||x/||x|| - y/||y|||| vs sqrt(2)||x-y||/||x||
    double max_compose_ratio = 0.0;  // ||c_hat - c|| vs sqrt(eta)(eps_a + eps_b)
    bool pass = false;
};

// Randomized check of the two error-composition inequalities used to chain
// norm and direction estimates into a full vector estimate.
ComposeReport compose_error_claims(std::int64_t trials, double eta, double eps_a, double eps_b,
                                   Rng& rng);

}  // namespace qemlab

#endif
