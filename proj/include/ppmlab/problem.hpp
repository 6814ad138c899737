#pragma once

#include "ppmlab/gaussian_mixture.hpp"
#include "ppmlab/linear_operator.hpp"

#include <optional>

namespace ppmlab {

/// Linear-Gaussian observation model y = F x + n, n ~ N(0, sigma_y^2 I).
/// The ground-truth signal, when known, is kept behind an accessor named for
/// evaluation so that solver code stays observably free of it.
class LinearGaussianProblem {
public:
    LinearGaussianProblem(LinearOperator op, Vector y, double sigma_y,
                          std::optional<Vector> x_true = std::nullopt);

    const LinearOperator& op() const { return op_; }
    const Vector& y() const { return y_; }
    double sigma_y() const { return sigma_y_; }

    bool has_x_true() const { return x_true_.has_value(); }
    const Vector& x_true_for_eval() const;

    double log_likelihood(const Vector& x) const;
    Vector log_likelihood_grad(const Vector& x) const;

private:
    LinearOperator op_;
    Vector y_;
    double sigma_y_;
    std::optional<Vector> x_true_;
};

/// Exact posterior of a Gaussian-mixture prior under the linear-Gaussian
/// likelihood: per-component conjugate update plus evidence reweighting.
GaussianMixture analytic_posterior(const GaussianMixture& prior,
                                   const LinearGaussianProblem& prob);

/// Draw x_true from the prior and a noisy observation y = F x_true + n.
LinearGaussianProblem simulate_observation(const GaussianMixture& prior,
                                           const LinearOperator& op, double sigma_y,
                                           Rng& rng);

} // namespace ppmlab
