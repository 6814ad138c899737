#include "ppmlab/metric_fn.hpp"

#include "ppmlab/vp_schedule.hpp"

namespace ppmlab {

MetricFn MetricFn::l2_squared(double scale) {
    MetricFn m;
    m.id = scale == 1.0 ? "l2sq" : "l2sq*" + std::to_string(scale);
    m.value = [scale](const Vector& v) { return scale * v.squaredNorm(); };
    m.grad = [scale](const Vector& v) { return Vector(2.0 * scale * v); };
    m.hessian = [scale](const Vector& v) {
        return Matrix(2.0 * scale * Matrix::Identity(v.size(), v.size()));
    };
    return m;
}

TimeWeight TimeWeight::one() {
    return {"one", [](double) { return 1.0; }};
}

TimeWeight TimeWeight::snr(const VpSchedule& s) {
    return {"snr", [s](double t) {
                auto [a, sig] = s.alpha_sigma(t);
                return sig * sig / a;
            }};
}

TimeWeight TimeWeight::box(double t0, double width) {
    return {"box", [t0, width](double t) { return std::abs(t - t0) <= width ? 1.0 : 0.0; }};
}

TimeWeight TimeWeight::scaled(const TimeWeight& w, double c) {
    auto f = w.value;
    return {w.id + "*" + std::to_string(c), [f, c](double t) { return c * f(t); }};
}

} // namespace ppmlab
