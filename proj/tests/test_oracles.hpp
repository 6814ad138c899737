#pragma once

// Test-only oracles: finite differences, grid quadrature, closed forms and
// an independent net re-implementation. Everything here is deliberately
// written without touching the library's own evaluation paths.

#include "ppmlab/common.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace oracles {

using ppmlab::Matrix;
using ppmlab::Vector;

inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                          double h = 1e-5) {
    Vector g(x.size());
    for (int i = 0; i < x.size(); ++i) {
        Vector hi = x, lo = x;
        hi[i] += h;
        lo[i] -= h;
        g[i] = (f(hi) - f(lo)) / (2.0 * h);
    }
    return g;
}

inline Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x,
                          double h = 1e-6) {
    const Vector f0 = f(x);
    Matrix j(f0.size(), x.size());
    for (int i = 0; i < x.size(); ++i) {
        Vector hi = x, lo = x;
        hi[i] += h;
        lo[i] -= h;
        j.col(i) = (f(hi) - f(lo)) / (2.0 * h);
    }
    return j;
}

/// Midpoint-rule integral of f over the 2D box [lo, hi] on an n x n grid.
inline double grid_integral_2d(const std::function<double(const Vector&)>& f, const Vector& lo,
                               const Vector& hi, int n) {
    const double hx = (hi[0] - lo[0]) / n;
    const double hy = (hi[1] - lo[1]) / n;
    double acc = 0.0;
    Vector p(2);
    for (int i = 0; i < n; ++i) {
        p[0] = lo[0] + (i + 0.5) * hx;
        for (int j = 0; j < n; ++j) {
            p[1] = lo[1] + (j + 0.5) * hy;
            acc += f(p);
        }
    }
    return acc * hx * hy;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// E|Z| for Z ~ N(m, v).
inline double folded_normal_mean(double m, double v) {
    const double s = std::sqrt(v);
    return s * std::sqrt(2.0 / M_PI) * std::exp(-m * m / (2.0 * v)) +
           m * (1.0 - 2.0 * normal_cdf(-m / s));
}

/// Population energy distance between N(m1, v1) and N(m2, v2) in 1D.
inline double energy_distance_gaussians_1d(double m1, double v1, double m2, double v2) {
    return 2.0 * folded_normal_mean(m1 - m2, v1 + v2) - folded_normal_mean(0.0, 2.0 * v1) -
           folded_normal_mean(0.0, 2.0 * v2);
}

/// Plain-loop tanh MLP forward pass, independent of the library path.
inline std::vector<double> reference_mlp_forward(
    const std::vector<std::vector<std::vector<double>>>& weights,
    const std::vector<std::vector<double>>& biases, const std::vector<double>& input) {
    std::vector<double> a = input;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        std::vector<double> z(biases[l]);
        for (std::size_t i = 0; i < weights[l].size(); ++i)
            for (std::size_t j = 0; j < a.size(); ++j) z[i] += weights[l][i][j] * a[j];
        if (l + 1 < weights.size())
            for (auto& v : z) v = std::tanh(v);
        a = std::move(z);
    }
    return a;
}

/// Simpson-rule line integral of a vector field along the segment x0 -> x1.
inline double line_integral(const std::function<Vector(const Vector&)>& field, const Vector& x0,
                            const Vector& x1, int n) {
    const Vector dir = x1 - x0;
    auto g = [&](double s) { return field(x0 + s * dir).dot(dir); };
    double acc = g(0.0) + g(1.0);
    for (int i = 1; i < n; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * g(i / static_cast<double>(n));
    return acc / (3.0 * n);
}

} // namespace oracles
