#include "qemlab/cost_model.hpp"

#include <algorithm>
#include <cmath>

#include "qemlab/errors.hpp"

namespace qemlab {

namespace {

double reduce(const std::vector<double>& values, CostOptions::Reduction reduction) {
    if (values.empty()) throw domain_error("profile has no per-component values");
    if (reduction == CostOptions::Reduction::Max)
        return *std::max_element(values.begin(), values.end());
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc / static_cast<double>(values.size());
}

void check_positive(const CostInputs& in) {
    const double fields[] = {static_cast<double>(in.k), static_cast<double>(in.d), in.n,
                             in.eta,  in.kappa_V, in.mu_V, in.mu_V_prime, in.kappa_sigma,
                             in.mu_sigma, in.delta_theta, in.delta_mu, in.eps_tau};
    for (double f : fields)
        if (!(f > 0.0) || !std::isfinite(f)) throw domain_error("cost inputs must be positive and finite");
}

}  // namespace

CostInputs cost_inputs_from_profile(const ProfileReport& profile, double delta_theta,
                                    double delta_mu, double eps_tau,
                                    CostOptions::Reduction reduction) {
    CostInputs in;
    in.k = static_cast<int>(profile.k);
    in.d = static_cast<int>(profile.d);
    in.n = static_cast<double>(profile.n);
    in.eta = profile.eta;
    in.kappa_V = profile.kappa_V;
    in.mu_V = profile.mu_V;
    in.kappa_sigma = reduce(profile.kappa_sigma_thresholded, reduction);
    in.mu_sigma = reduce(profile.mu_sigma, reduction);
    if (profile.mu_V_prime) {
        in.mu_V_prime = *profile.mu_V_prime;
    } else {
        in.mu_V_prime = profile.mu_V_prime_frobenius_bound;
        in.mu_V_prime_is_upper_bound = true;
    }
    in.delta_theta = delta_theta;
    in.delta_mu = delta_mu;
    in.eps_tau = eps_tau;
    return in;
}

CostReport qem_iteration_cost(const CostInputs& in, const CostOptions& opt) {
    check_positive(in);
    const double k = static_cast<double>(in.k);
    const double d = static_cast<double>(in.d);
    const double ks  = in.kappa_sigma;
    const double ms  = in.mu_sigma;
    const double kv  = opt.kappa_v_squared ? in.kappa_V * in.kappa_V : in.kappa_V;

    CostReport rep;
    rep.inputs_echo = in;
    rep.kappa_v_squared = opt.kappa_v_squared;
    rep.reduction = opt.reduction == CostOptions::Reduction::Max ? "max" : "mean";
    rep.mu_v_prime_flagged = in.mu_V_prime_is_upper_bound;

    const double k35 = std::pow(k, 3.5);
    const double eta15 = std::pow(in.eta, 1.5);
    rep.t_theta = k35 * eta15 * ks * ms / (in.delta_theta * in.delta_theta);
    rep.t_mu = k * d * in.eta * in.kappa_V * (in.mu_V + k35 * eta15 * ks * ms) /
               std::pow(in.delta_mu, 3.0);
    rep.t_sigma = k * d * d * in.eta * kv *
                  (in.mu_V_prime + in.eta * in.eta * k35 * ks * ms) / std::pow(in.delta_mu, 3.0);
    rep.t_ell = std::pow(k, 1.5) * eta15 * ks * ms / (in.eps_tau * in.eps_tau);

    rep.classical_cost = k * in.n * d * d;

    const double terms[] = {rep.t_theta, rep.t_mu, rep.t_sigma, rep.t_ell};
    const char* names[] = {"t_theta", "t_mu", "t_sigma", "t_ell"};
    int best = 0;
    for (int i = 1; i < 4; ++i)
        if (terms[i] > terms[best]) best = i;
    rep.dominant_term = names[best];
    rep.crossover_n = crossover_n(rep);
    return rep;
}

CostReport qem_iteration_cost(const ProfileReport& profile, int k, int d, double delta_theta,
                              double delta_mu, double eps_tau, const CostOptions& opt) {
    if (k != profile.k || d != profile.d)
        throw domain_error("cost shape disagrees with the profile");
    return qem_iteration_cost(cost_inputs_from_profile(profile, delta_theta, delta_mu, eps_tau,
                                                       opt.reduction),
                              opt);
}

CostReport map_iteration_cost(const CostInputs& in, const CostOptions& opt) {
    CostReport rep = qem_iteration_cost(in, opt);
    rep.estimator = "MAP";
    return rep;
}

std::optional<double> crossover_n(const CostReport& report) {
    const double max_term =
        std::max({report.t_theta, report.t_mu, report.t_sigma, report.t_ell});
    if (!std::isfinite(max_term)) return std::nullopt;
    const double k = static_cast<double>(report.inputs_echo.k);
    const double d = static_cast<double>(report.inputs_echo.d);
    return std::max(1.0, max_term / (k * d * d));
}

}  // namespace qemlab
