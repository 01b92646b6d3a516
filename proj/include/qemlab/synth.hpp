#ifndef QEMLAB_SYNTH_HPP
#define QEMLAB_SYNTH_HPP

#include <vector>

#include "qemlab/gmm.hpp"

namespace qemlab {

// Ground-truth mixture generator. Means sit on a shell of norms in
// [mean_norm_lo, mean_norm_hi] with pairwise distance at least
// separation * max component standard deviation; per-dimension variances are
// drawn from [var_lo, var_hi].
struct SynthSpec {
    int k = 2;
    int d = 2;
    long n = 100;
    double separation = 6.0;
    CovarianceKind kind = CovarianceKind::Diagonal;
    double beta = 1.0;
    std::uint64_t seed = 1;
    double mean_norm_lo = 4.0;
    double mean_norm_hi = 21.0;
    double var_lo = 0.5;
    double var_hi = 1.5;

    void validate() const;
};

struct SynthResult {
    Eigen::MatrixXd points;
    std::vector<int> labels;
    GmmParams truth;
};

SynthResult synth_mixture(const SynthSpec& spec);

}  // namespace qemlab

#endif
