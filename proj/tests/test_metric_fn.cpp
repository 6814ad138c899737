#include "ppmlab/metric_fn.hpp"

#include "ppmlab/vp_schedule.hpp"
#include "test_oracles.hpp"

#include <doctest.h>

using namespace ppmlab;

TEST_CASE("l2 squared metric: value, gradient, hessian, homogeneity") {
    auto m = MetricFn::l2_squared();
    CHECK(m.value(Vector::Zero(3)) == 0.0);

    Rng rng(1);
    Vector u = rng.normal_vector(3);
    CHECK(m.value(u) == doctest::Approx(u.squaredNorm()));
    CHECK((m.grad(u) - 2.0 * u).norm() < 1e-14);
    CHECK((m.hessian(u) - 2.0 * Matrix::Identity(3, 3)).norm() < 1e-14);

    // quadratic homogeneity: scaling u by c scales d by c^2 and d' by c
    const double c = 2.7;
    CHECK(m.value(c * u) == doctest::Approx(c * c * m.value(u)));
    CHECK((m.grad(c * u) - c * m.grad(u)).norm() < 1e-12);

    // d' is the exact gradient of d
    Vector fd = oracles::fd_gradient(m.value, u, 1e-6);
    CHECK((fd - m.grad(u)).norm() < 1e-6);

    auto scaled = MetricFn::l2_squared(3.0);
    CHECK(scaled.value(u) == doctest::Approx(3.0 * u.squaredNorm()));
    CHECK((scaled.grad(u) - 6.0 * u).norm() < 1e-14);
}

TEST_CASE("time weights") {
    VpSchedule s;
    auto one = TimeWeight::one();
    CHECK(one.value(0.3) == 1.0);

    auto snr = TimeWeight::snr(s);
    auto [a, sig] = s.alpha_sigma(0.4);
    CHECK(snr.value(0.4) == doctest::Approx(sig * sig / a));

    auto box = TimeWeight::box(0.2, 0.05);
    CHECK(box.value(0.2) == 1.0);
    CHECK(box.value(0.26) == 0.0);

    auto scaled = TimeWeight::scaled(one, 2.5);
    CHECK(scaled.value(0.9) == 2.5);
}
