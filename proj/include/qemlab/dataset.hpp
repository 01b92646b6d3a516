#ifndef QEMLAB_DATASET_HPP
#define QEMLAB_DATASET_HPP

#include <Eigen/Dense>

namespace qemlab {

// Immutable sample matrix. Rows are observations, columns are features.
class Dataset {
  public:
    explicit Dataset(Eigen::MatrixXd points, bool normalized = false);

    Eigen::Index n() const { return points_.rows(); }
    Eigen::Index d() const { return points_.cols(); }
    const Eigen::MatrixXd& points() const { return points_; }
    const Eigen::VectorXd& row_norms() const { return row_norms_; }
    bool is_normalized() const { return normalized_; }

    double min_row_norm() const { return row_norms_.minCoeff(); }
    double max_row_norm() const { return row_norms_.maxCoeff(); }

    // Max squared row norm. Matches the scale-free ratio max^2/min^2 once the
    // shortest row has been rescaled to unit norm.
    double eta() const;

    // Copy rescaled so the shortest row has norm 1. Throws on a zero row.
    Dataset normalized() const;

  private:
    Eigen::MatrixXd points_;
    Eigen::VectorXd row_norms_;
    bool normalized_ = false;
};

}  // namespace qemlab

#endif
