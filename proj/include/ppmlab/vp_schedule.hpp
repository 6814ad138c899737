#pragma once

#include "ppmlab/common.hpp"
#include "ppmlab/rng.hpp"

namespace ppmlab {

/// One (t, eps) draw of the perturbation kernel.
struct ScoreDraw {
    double t;
    Vector eps;
};

/// Variance-preserving noise schedule with linear beta(t).
///
/// alpha(t) = exp(-1/4 t^2 (beta_max - beta_min) - 1/2 t beta_min),
/// sigma(t) = sqrt(1 - alpha(t)^2), g(t)^2 = beta(t).
///
/// All values are pure functions of the immutable configuration; instances
/// can be shared freely across workers.
struct VpSchedule {
    double beta_min = 0.1;
    double beta_max = 20.0;
    double t_min = 1e-3;
    double t_max = 1.0;

    void validate() const;

    double beta(double t) const { return beta_min + t * (beta_max - beta_min); }
    double g2(double t) const { return beta(t); }

    /// (alpha_t, sigma_t). Rejects t outside [0, t_max].
    std::pair<double, double> alpha_sigma(double t) const;

    double alpha(double t) const { return alpha_sigma(t).first; }
    double sigma(double t) const { return alpha_sigma(t).second; }

    /// x_t = alpha_t x0 + sigma_t eps.
    Vector perturb(const Vector& x0, double t, const Vector& eps) const;

    /// grad_{x_t} log p_t(x_t | x0) = -(x_t - alpha_t x0) / sigma_t^2.
    /// Requires t >= t_min so sigma_t is bounded away from zero.
    Vector conditional_score(const Vector& x_t, const Vector& x0, double t) const;

    /// t ~ U(t_min, t_max).
    double sample_time(Rng& rng) const { return rng.uniform(t_min, t_max); }

    double time_range() const { return t_max - t_min; }
};

} // namespace ppmlab
