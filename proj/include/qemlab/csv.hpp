#ifndef QEMLAB_CSV_HPP
#define QEMLAB_CSV_HPP

#include <Eigen/Dense>
#include <string>

namespace qemlab {

// Sample CSV: header row f0,...,f{d-1}, one sample per line, 17-significant-
// digit decimal floats, LF line endings.
void write_csv(const std::string& path, const Eigen::MatrixXd& points);

// Strict parse of the same format; errors carry path and line number.
Eigen::MatrixXd read_csv(const std::string& path);

std::string format_double(double v);  // shortest 17-digit round-trip form

}  // namespace qemlab

#endif
