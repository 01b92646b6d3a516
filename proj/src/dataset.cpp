#include "qemlab/dataset.hpp"

#include <cmath>

#include "qemlab/errors.hpp"

namespace qemlab {

Dataset::Dataset(Eigen::MatrixXd points, bool normalized)
    : points_(std::move(points)), normalized_(normalized) {
    if (points_.rows() < 1 || points_.cols() < 1)
        throw domain_error("dataset must have at least one row and one column");
    if (!points_.allFinite())
        throw domain_error("dataset contains non-finite entries");
    row_norms_ = points_.rowwise().norm();
    if (normalized_ && std::abs(min_row_norm() - 1.0) > 1e-9)
        throw domain_error("normalized dataset must have minimum row norm 1");
}

double Dataset::eta() const {
    const double lo = min_row_norm();
    if (lo <= 0.0) throw domain_error("zero-norm sample");
    const double hi = max_row_norm();
    return (hi / lo) * (hi / lo);
}

Dataset Dataset::normalized() const {
    const double lo = min_row_norm();
    if (lo <= 0.0) throw domain_error("zero-norm sample");
    return Dataset(points_ / lo, true);
}

}  // namespace qemlab
