#include "ppmlab/vp_schedule.hpp"

#include "test_oracles.hpp"

#include <doctest.h>

using namespace ppmlab;

TEST_CASE("alpha_sigma identity cases") {
    VpSchedule s;
    auto [a0, s0] = s.alpha_sigma(0.0);
    CHECK(a0 == doctest::Approx(1.0));
    CHECK(s0 == doctest::Approx(0.0));

    // closed-form integral at t = 1: exp(-0.25*(20-0.1) - 0.5*0.1) = exp(-5.025)
    auto [a1, s1] = s.alpha_sigma(1.0);
    CHECK(a1 == doctest::Approx(std::exp(-5.025)).epsilon(1e-12));
    CHECK(a1 == doctest::Approx(6.56e-3).epsilon(1e-2));
    CHECK(a1 * a1 + s1 * s1 == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("VP identity holds across the time axis") {
    VpSchedule s;
    for (double t = 0.0; t <= 1.0; t += 0.01) {
        auto [a, sig] = s.alpha_sigma(t);
        CHECK(std::abs(a * a + sig * sig - 1.0) < 1e-12);
    }
}

TEST_CASE("alpha strictly decreasing and domain checked") {
    VpSchedule s;
    double prev = s.alpha(s.t_min);
    for (double t = s.t_min + 0.01; t <= 1.0; t += 0.01) {
        const double a = s.alpha(t);
        CHECK(a < prev);
        prev = a;
    }
    CHECK_THROWS_AS(s.alpha_sigma(-0.1), std::domain_error);
    CHECK_THROWS_AS(s.alpha_sigma(1.1), std::domain_error);
}

TEST_CASE("stationarity of the standard normal moments under the marginal map") {
    // mean alpha*m and covariance alpha^2*S + sigma^2*I fix (0, I)
    VpSchedule s;
    for (double t : {0.05, 0.3, 0.8, 1.0}) {
        auto [a, sig] = s.alpha_sigma(t);
        CHECK(a * 0.0 == 0.0);
        CHECK(a * a * 1.0 + sig * sig == doctest::Approx(1.0).epsilon(1e-13));
    }
}

TEST_CASE("perturb evaluates the affine map") {
    VpSchedule s;
    Vector x0(2), eps(2);
    x0 << 1.0, 1.0;
    eps << 1.0, 0.0;
    // pick the t whose (alpha, sigma) we use explicitly: verify against alpha_sigma
    const double t = 0.4;
    auto [a, sig] = s.alpha_sigma(t);
    Vector xt = s.perturb(x0, t, eps);
    CHECK(xt[0] == doctest::Approx(a * 1.0 + sig * 1.0));
    CHECK(xt[1] == doctest::Approx(a * 1.0));

    // the spec's worked numbers with alpha = 0.8, sigma = 0.6
    Vector direct = 0.8 * x0 + 0.6 * eps;
    CHECK(direct[0] == doctest::Approx(1.4));
    CHECK(direct[1] == doctest::Approx(0.8));

    CHECK(s.perturb(x0, 0.0, eps) == x0);
    Vector zero = Vector::Zero(2);
    CHECK(s.perturb(zero, t, eps) == sig * eps);

    Vector bad(3);
    CHECK_THROWS_AS(s.perturb(x0, t, bad), std::invalid_argument);
}

TEST_CASE("conditional score formula and degenerate cases") {
    VpSchedule s;
    Vector x0(2);
    x0 << 0.7, -0.3;
    const double t = 0.5;
    auto [a, sig] = s.alpha_sigma(t);

    SUBCASE("zero at the kernel mean") {
        Vector xt = a * x0;
        CHECK(s.conditional_score(xt, x0, t).norm() == doctest::Approx(0.0));
    }
    SUBCASE("-eps/sigma form") {
        Vector eps(2);
        eps << 1.0, 0.0;
        Vector xt = s.perturb(x0, t, eps);
        Vector score = s.conditional_score(xt, x0, t);
        CHECK(score[0] == doctest::Approx(-1.0 / sig).epsilon(1e-12));
        CHECK(score[1] == doctest::Approx(0.0));
    }
    SUBCASE("sigma = 0.5 hand case") {
        // -(x_t - a x0)/sigma^2 with residual sigma*eps gives -eps/sigma
        const double sigma = 0.5;
        Vector eps(2);
        eps << 1.0, 0.0;
        Vector resid = sigma * eps;
        Vector score = -resid / (sigma * sigma);
        CHECK(score[0] == doctest::Approx(-2.0));
        CHECK(score[1] == doctest::Approx(0.0));
    }
    SUBCASE("rejects t below t_min") {
        CHECK_THROWS_AS(s.conditional_score(x0, x0, 0.0), std::domain_error);
    }
}

TEST_CASE("conditional score matches finite differences of the log kernel") {
    VpSchedule s;
    Rng rng(7);
    for (int rep = 0; rep < 5; ++rep) {
        const double t = rng.uniform(s.t_min, 1.0);
        auto [a, sig] = s.alpha_sigma(t);
        Vector x0 = rng.normal_vector(3);
        Vector xt = s.perturb(x0, t, rng.normal_vector(3));
        auto log_kernel = [&](const Vector& x) {
            return -0.5 * (x - a * x0).squaredNorm() / (sig * sig);
        };
        Vector fd = oracles::fd_gradient(log_kernel, xt);
        Vector score = s.conditional_score(xt, x0, t);
        CHECK((score - fd).norm() / std::max(score.norm(), 1.0) < 1e-6);
        CHECK((score - fd).norm() < 1e-6 * (1.0 + score.norm()));
    }
}

TEST_CASE("sample_time is reproducible, in range, and uniform on average") {
    VpSchedule s;
    Rng a(42), b(42);
    CHECK(s.sample_time(a) == s.sample_time(b));

    Rng rng(123);
    const int n = 100000;
    double mean = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = s.sample_time(rng);
        REQUIRE(t >= s.t_min);
        REQUIRE(t <= s.t_max);
        mean += t;
    }
    mean /= n;
    const double expected = 0.5 * (s.t_min + s.t_max);
    const double se = (s.t_max - s.t_min) / std::sqrt(12.0 * n);
    CHECK(std::abs(mean - expected) < 3.0 * se);
}
