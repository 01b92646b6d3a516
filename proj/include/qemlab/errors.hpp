#ifndef QEMLAB_ERRORS_HPP
#define QEMLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qemlab {

// Violation of a model/data contract (bad covariance, empty component, ...).
// The CLI maps these to exit code 2.
class domain_error : public std::runtime_error {
  public:
    explicit domain_error(const std::string& what) : std::runtime_error(what) {}
};

// Bad configuration, unreadable files, malformed input. Exit code 1.
class config_error : public std::runtime_error {
  public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qemlab

#endif
