#pragma once

#include "ppmlab/common.hpp"

#include <functional>
#include <string>

namespace ppmlab {

/// Convex distance d(.) plugged into the score-matching objective, together
/// with its gradient and Hessian maps (the estimator's chain rule needs both).
struct MetricFn {
    std::string id;
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&)> grad;
    std::function<Matrix(const Vector&)> hessian;

    /// d(v) = scale * ||v||_2^2.
    static MetricFn l2_squared(double scale = 1.0);
};

/// Named time-weight omega(t) used by the integral objectives.
struct TimeWeight {
    std::string id;
    std::function<double(double)> value;

    static TimeWeight one();
    /// sigma_t^2 / alpha_t, the SNR-style weighting.
    static TimeWeight snr(const struct VpSchedule& s);
    /// Narrow bump of half-width `width` centered at t0 (box weight).
    static TimeWeight box(double t0, double width);
    static TimeWeight scaled(const TimeWeight& w, double c);
};

} // namespace ppmlab
