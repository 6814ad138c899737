#include "ppmlab/vp_schedule.hpp"

#include <cmath>

namespace ppmlab {

void VpSchedule::validate() const {
    require(beta_min > 0.0, "VpSchedule: beta_min must be > 0");
    require(beta_max >= beta_min, "VpSchedule: beta_max must be >= beta_min");
    require(t_min > 0.0 && t_min < 1.0, "VpSchedule: t_min must lie in (0, 1)");
    require(t_max == 1.0, "VpSchedule: t_max must equal 1");
}

std::pair<double, double> VpSchedule::alpha_sigma(double t) const {
    if (t < 0.0 || t > t_max)
        throw std::domain_error("VpSchedule: t=" + std::to_string(t) +
                                " outside [0, " + std::to_string(t_max) + "]");
    const double log_alpha = -0.25 * t * t * (beta_max - beta_min) - 0.5 * t * beta_min;
    const double a = std::exp(log_alpha);
    // expm1 keeps 1 - alpha^2 accurate near t = 0.
    const double s = std::sqrt(-std::expm1(2.0 * log_alpha));
    return {a, s};
}

Vector VpSchedule::perturb(const Vector& x0, double t, const Vector& eps) const {
    require(x0.size() == eps.size(), "perturb: x0 and eps dimension mismatch");
    auto [a, s] = alpha_sigma(t);
    return a * x0 + s * eps;
}

Vector VpSchedule::conditional_score(const Vector& x_t, const Vector& x0, double t) const {
    require(x_t.size() == x0.size(), "conditional_score: dimension mismatch");
    if (t < t_min)
        throw std::domain_error("conditional_score: t < t_min would divide by sigma_t ~ 0");
    auto [a, s] = alpha_sigma(t);
    return -(x_t - a * x0) / (s * s);
}

} // namespace ppmlab
