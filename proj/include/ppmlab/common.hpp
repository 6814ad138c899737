#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace ppmlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A single Gaussian (mean, covariance). Used by the analysis closed forms
/// and as the component type of mixtures.
struct Gaussian {
    Vector mean;
    Matrix cov;

    int dim() const { return static_cast<int>(mean.size()); }
};

/// Thrown when an operation is requested from an object that cannot provide
/// it (e.g. a score oracle without Jacobian support).
class CapabilityError : public std::runtime_error {
public:
    explicit CapabilityError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown by iterative solvers when the iterate norm exceeds the guard bound.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, long iteration, double norm)
        : std::runtime_error(what), iteration(iteration), norm(norm) {}

    long iteration;
    double norm;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

} // namespace ppmlab
