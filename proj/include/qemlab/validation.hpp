#ifndef QEMLAB_VALIDATION_HPP
#define QEMLAB_VALIDATION_HPP

#include <cstdint>
#include <map>
#include <string>

namespace qemlab {

// One Monte-Carlo contract check. `observed` is the suite's headline
// statistic, compared against `bound` with the stated direction.
struct SuiteResult {
    std::string suite;
    std::int64_t trials = 0;
    bool pass = false;
    double observed = 0.0;
    double bound = 0.0;
    std::string comparison;  // "<=" or ">="
    std::map<std::string, double> details;
};

SuiteResult validate_lipschitz(std::int64_t trials, std::uint64_t seed);
SuiteResult validate_responsibility_error(std::int64_t trials_per_case, std::uint64_t seed);
SuiteResult validate_tomography(std::int64_t trials_per_case, std::uint64_t seed);
SuiteResult validate_amplitude(std::int64_t trials_per_case, std::uint64_t seed);
SuiteResult validate_quadratic_form(std::int64_t trials, std::uint64_t seed);
SuiteResult validate_noise_bounds(std::int64_t trials, std::uint64_t seed,
                                  double delta_theta = 0.038, double delta_mu = 0.5);
SuiteResult validate_logdet(int matrices, std::uint64_t seed);

SuiteResult run_suite(const std::string& name, std::int64_t trials, std::uint64_t seed);

}  // namespace qemlab

#endif
