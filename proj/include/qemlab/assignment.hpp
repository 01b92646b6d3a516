#ifndef QEMLAB_ASSIGNMENT_HPP
#define QEMLAB_ASSIGNMENT_HPP

#include <cstdint>
#include <vector>

#include "qemlab/errors.hpp"

namespace qemlab {

// Fraction of samples matched under the best one-to-one relabeling of the
// predicted components (subset DP over truth classes; k <= 24).
inline double aligned_accuracy(const std::vector<int>& truth, const std::vector<int>& predicted,
                               int k) {
    if (truth.size() != predicted.size() || truth.empty())
        throw domain_error("label vectors must match and be nonempty");
    if (k < 1 || k > 24) throw domain_error("component count out of range for alignment");

    std::vector<std::int64_t> counts(static_cast<std::size_t>(k) * k, 0);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= k || predicted[i] < 0 || predicted[i] >= k)
            throw domain_error("label outside [0,k)");
        ++counts[static_cast<std::size_t>(predicted[i]) * k + truth[i]];
    }

    const std::size_t full = std::size_t{1} << k;
    std::vector<std::int64_t> dp(full, -1);
    dp[0] = 0;
    for (std::size_t mask = 1; mask < full; ++mask) {
        const int p = __builtin_popcountll(mask) - 1;  // predicted class index
        for (int t = 0; t < k; ++t) {
            if (!(mask & (std::size_t{1} << t))) continue;
            const std::int64_t prev = dp[mask ^ (std::size_t{1} << t)];
            if (prev < 0) continue;
            dp[mask] = std::max(dp[mask], prev + counts[static_cast<std::size_t>(p) * k + t]);
        }
    }
    return static_cast<double>(dp[full - 1]) / static_cast<double>(truth.size());
}

}  // namespace qemlab

#endif
