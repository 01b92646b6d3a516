#ifndef QEMLAB_EM_HPP
#define QEMLAB_EM_HPP

#include <optional>
#include <vector>

#include "qemlab/gmm.hpp"
#include "qemlab/noise.hpp"
#include "qemlab/rng.hpp"

namespace qemlab {

struct InitStrategy {
    enum class Kind { RandomEM, KMeansPP, SmallEM, CEM };
    Kind kind = Kind::KMeansPP;
    int rounds = 5;       // Lloyd iterations after D^2 seeding
    int restarts = 3;     // SmallEM
    int burn_iters = 5;   // SmallEM

    static InitStrategy random_em() { return {Kind::RandomEM, 0, 0, 0}; }
    static InitStrategy kmeanspp(int rounds = 5) { return {Kind::KMeansPP, rounds, 0, 0}; }
    static InitStrategy small_em(int restarts, int burn_iters) {
        return {Kind::SmallEM, 0, restarts, burn_iters};
    }
    static InitStrategy cem() { return {Kind::CEM, 0, 0, 0}; }
};

// Dirichlet prior on the weights plus a Normal-inverse-Wishart prior on each
// (mean, covariance) pair. S0 defaults to the pooled per-dimension variance.
struct MapPrior {
    Eigen::VectorXd alpha;
    Eigen::VectorXd m0;
    double iota0 = 1.0;
    double nu0 = 0.0;
    std::optional<Eigen::MatrixXd> S0;
};

enum class Estimator { Ml, Map };

struct FitConfig {
    int k = 1;
    CovarianceKind kind = CovarianceKind::Full;
    double beta = 1.0;                 // soft k-means stiffness
    double eps_tau = 7e-3;
    int max_iters = 70;
    double reg_floor = 0.0;            // <= 0 selects 1e-6 * mean data variance
    InitStrategy init;
    std::uint64_t seed = 1;
    Estimator estimator = Estimator::Ml;
    std::optional<MapPrior> prior;

    void validate() const;
};

struct IterationRecord {
    int iter = 0;
    double log_likelihood = 0.0;
    double mean_probability = 0.0;
    double wall_ms = 0.0;
    bool likelihood_decreased = false;
};

struct FitResult {
    GmmParams params;
    int iterations = 0;
    std::vector<IterationRecord> trace;
    bool converged = false;
};

double resolve_reg_floor(const Dataset& data, double reg_floor);

GmmParams initialize(const Dataset& data, const FitConfig& cfg, Rng& rng);

Responsibilities e_step(const Dataset& data, const GmmParams& params);

GmmParams m_step_ml(const Dataset& data, const Responsibilities& resp, CovarianceKind kind,
                    double reg_floor, double beta = 1.0);

GmmParams m_step_map(const Dataset& data, const Responsibilities& resp, const MapPrior& prior,
                     double reg_floor, CovarianceKind kind = CovarianceKind::Full,
                     double beta = 1.0);

// (1/k^{1/d}) Diag(s_1^2 ... s_d^2) from the per-dimension data variances.
Eigen::MatrixXd pooled_prior_s0(const Dataset& data, int k, double reg_floor);

FitResult fit(const Dataset& data, const FitConfig& cfg,
              const std::optional<NoiseSpec>& noise = std::nullopt);

std::vector<int> predict_labels(const Dataset& data, const GmmParams& params);

}  // namespace qemlab

#endif
