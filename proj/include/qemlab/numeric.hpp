#ifndef QEMLAB_NUMERIC_HPP
#define QEMLAB_NUMERIC_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>

namespace qemlab {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// log(sum_j exp(x_j)) with max subtraction. Returns -inf for all -inf input.
inline double log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    const double m = x.maxCoeff();
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) s += std::exp(x[j] - m);
    return m + std::log(s);
}

// Stable softmax; -inf entries map to exact zeros.
inline Eigen::RowVectorXd softmax(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    const double m = x.maxCoeff();
    Eigen::RowVectorXd e(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j)
        e[j] = std::isfinite(x[j] - m) ? std::exp(x[j] - m) : 0.0;
    const double s = e.sum();
    return e / s;
}

// Normalized exponentials exp(x - lse) / sum. Shared by the exact posterior
// computation and its emulated counterpart so the two agree bit for bit.
// Scalar std::exp keeps exp(-inf) an exact zero, unlike the SIMD path.
inline Eigen::RowVectorXd posterior_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    const double lse = log_sum_exp(x);
    Eigen::RowVectorXd e(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) e[j] = std::exp(x[j] - lse);
    return e / e.sum();
}

// Row argmax with ties broken toward the lowest index.
inline Eigen::Index argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < x.size(); ++j)
        if (x[j] > x[best]) best = j;
    return best;
}

// Inverse standard normal CDF, Acklam's rational approximation refined with
// one Halley step against erfc. Accurate to ~1e-15 on (0,1).
double norm_ppf(double p);

inline std::int64_t next_pow2(std::int64_t n) {
    std::int64_t m = 1;
    while (m < n) m <<= 1;
    return m;
}

}  // namespace qemlab

#endif
