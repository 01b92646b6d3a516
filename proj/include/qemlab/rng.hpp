#ifndef QEMLAB_RNG_HPP
#define QEMLAB_RNG_HPP

#include <cstdint>
#include <random>

#include "qemlab/numeric.hpp"

namespace qemlab {

using Rng = std::mt19937_64;

// Per-trial seed derivation for Monte-Carlo harnesses: seed = base xor trial.
inline Rng derived_rng(std::uint64_t base, std::uint64_t trial) {
    return Rng(base ^ trial);
}

// Draw from a normal(center, sigma) truncated to [lo, hi], by inverse CDF.
// Degenerate interval (lo == hi) returns the endpoint.
inline double truncated_normal(double center, double sigma, double lo, double hi, Rng& rng) {
    if (!(lo < hi)) return lo;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double za = (lo - center) / sigma;
    const double zb = (hi - center) / sigma;
    const double pa = 0.5 * std::erfc(-za / std::sqrt(2.0));
    const double pb = 0.5 * std::erfc(-zb / std::sqrt(2.0));
    const double u = pa + (pb - pa) * unif(rng);
    double x = center + sigma * norm_ppf(u);
    if (x < lo) x = lo;
    if (x > hi) x = hi;
    return x;
}

}  // namespace qemlab

#endif
