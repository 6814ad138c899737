#include "ppmlab/gaussian_mixture.hpp"

#include "test_oracles.hpp"

#include <doctest.h>

using namespace ppmlab;

namespace {

GaussianMixture symmetric_bimodal() {
    Vector w(2);
    w << 0.5, 0.5;
    Vector m1(2), m2(2);
    m1 << -1.5, 0.0;
    m2 << 1.5, 0.0;
    Matrix c = 0.25 * Matrix::Identity(2, 2);
    return GaussianMixture(w, {m1, m2}, {c, c});
}

} // namespace

TEST_CASE("construction validates weights and covariances") {
    Vector w(2);
    w << 0.6, 0.5; // sums to 1.1
    Vector m = Vector::Zero(1);
    Matrix c = Matrix::Identity(1, 1);
    CHECK_THROWS_AS(GaussianMixture(w, {m, m}, {c, c}), std::invalid_argument);

    Vector w2(1);
    w2 << 1.0;
    Matrix negative(1, 1);
    negative << -1.0;
    CHECK_THROWS_AS(GaussianMixture(w2, {m}, {negative}), std::invalid_argument);
}

TEST_CASE("single standard normal log density at the mean") {
    for (int d : {1, 2, 5}) {
        auto g = GaussianMixture::single(Vector::Zero(d), Matrix::Identity(d, d));
        CHECK(g.log_density(Vector::Zero(d)) ==
              doctest::Approx(-0.5 * d * std::log(2.0 * M_PI)).epsilon(1e-12));
    }
}

TEST_CASE("symmetric mixture density is even") {
    auto g = symmetric_bimodal();
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        Vector x = rng.normal_vector(2) * 2.0;
        CHECK(g.log_density(x) == doctest::Approx(g.log_density(-x)).epsilon(1e-12));
    }
}

TEST_CASE("grid quadrature normalization in 2D") {
    auto g = symmetric_bimodal();
    Vector lo(2), hi(2);
    lo << -1.5 - 6 * 0.5, -6 * 0.5;
    hi << 1.5 + 6 * 0.5, 6 * 0.5;
    const double mass = oracles::grid_integral_2d(
        [&](const Vector& x) { return std::exp(g.log_density(x)); }, lo, hi, 400);
    CHECK(std::abs(mass - 1.0) < 1e-3);
}

TEST_CASE("sampling: determinism, tiny-covariance limit, component frequencies") {
    auto g = symmetric_bimodal();
    Rng a(5), b(5);
    CHECK(g.sample(a) == g.sample(b));

    auto tight = GaussianMixture::single(Vector::Ones(2), 1e-12 * Matrix::Identity(2, 2));
    Rng rng(6);
    CHECK((tight.sample(rng) - Vector::Ones(2)).norm() < 1e-4);

    Vector w(2);
    w << 0.3, 0.7;
    Vector m1 = Vector::Zero(1), m2 = Vector::Ones(1) * 10.0;
    Matrix c = 0.01 * Matrix::Identity(1, 1);
    GaussianMixture skewed(w, {m1, m2}, {c, c});
    Rng rng2(7);
    const int n = 100000;
    int hits = 0;
    for (int i = 0; i < n; ++i)
        if (skewed.sample(rng2)[0] > 5.0) ++hits;
    const double freq = static_cast<double>(hits) / n;
    const double se = std::sqrt(0.7 * 0.3 / n);
    CHECK(std::abs(freq - 0.7) < 3.0 * se);
}

TEST_CASE("diffusion: t = 0 is the identity") {
    auto g = symmetric_bimodal();
    VpSchedule s;
    auto g0 = g.diffused(s, 0.0);
    for (int i = 0; i < g.components(); ++i) {
        CHECK((g0.mean(i) - g.mean(i)).norm() < 1e-12);
        CHECK((g0.cov(i) - g.cov(i)).norm() < 1e-9); // eigenvalue floor perturbs at 1e-10
    }
}

TEST_CASE("diffusion: standard normal is stationary") {
    auto g = GaussianMixture::single(Vector::Zero(2), Matrix::Identity(2, 2));
    VpSchedule s;
    for (double t : {0.1, 0.5, 1.0}) {
        auto gt = g.diffused(s, t);
        CHECK(gt.mean(0).norm() < 1e-12);
        CHECK((gt.cov(0) - Matrix::Identity(2, 2)).norm() < 1e-12);
    }
}

TEST_CASE("diffusion at t_max flattens every component toward N(0, I)") {
    Vector w(2);
    w << 0.5, 0.5;
    Vector m1(2), m2(2);
    m1 << 5.0, 0.0;
    m2 << -3.0, 4.0; // norms within 5
    Matrix c = Matrix::Identity(2, 2);
    GaussianMixture g(w, {m1, m2}, {c, c});
    VpSchedule s;
    auto gt = g.diffused(s, s.t_max);
    for (int i = 0; i < gt.components(); ++i) {
        CHECK(gt.mean(i).norm() < 0.05);
        CHECK((gt.cov(i) - Matrix::Identity(2, 2)).norm() < 1e-3);
    }
}
