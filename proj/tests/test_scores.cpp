#include "ppmlab/score_oracle.hpp"

#include "test_oracles.hpp"

#include <doctest.h>

using namespace ppmlab;

namespace {

GaussianMixture toy_mixture() {
    Vector w(2);
    w << 0.4, 0.6;
    Vector m1(2), m2(2);
    m1 << -1.2, 0.4;
    m2 << 1.1, -0.6;
    Matrix c1 = 0.35 * Matrix::Identity(2, 2);
    Matrix c2(2, 2);
    c2 << 0.5, 0.1, 0.1, 0.3;
    return GaussianMixture(w, {m1, m2}, {c1, c2});
}

} // namespace

TEST_CASE("single-component score closed form") {
    VpSchedule s;
    const double var0 = 0.49;
    auto g = GaussianMixture::single(Vector::Ones(2), var0 * Matrix::Identity(2, 2));
    for (double t : {0.1, 0.5, 0.9}) {
        auto [a, sig] = s.alpha_sigma(t);
        const double vt = a * a * var0 + sig * sig;
        Rng rng(1);
        for (int i = 0; i < 5; ++i) {
            Vector x = rng.normal_vector(2);
            Vector expected = -(x - a * Vector::Ones(2)) / vt;
            CHECK((mixture_score(g, s, x, t) - expected).norm() < 1e-12);
        }
        CHECK(mixture_score(g, s, a * Vector::Ones(2), t).norm() < 1e-14);
    }
}

TEST_CASE("standard normal prior: score is -x at every t") {
    VpSchedule s;
    auto g = GaussianMixture::single(Vector::Zero(3), Matrix::Identity(3, 3));
    Rng rng(2);
    for (double t : {0.0, 0.2, 0.6, 1.0}) {
        Vector x = rng.normal_vector(3);
        CHECK((mixture_score(g, s, x, t) + x).norm() < 1e-12);
    }
}

TEST_CASE("mixture score matches finite differences of the diffused log density") {
    VpSchedule s;
    auto g = toy_mixture();
    Rng rng(3);
    for (double t : {0.05, 0.35, 0.8}) {
        auto gt = g.diffused(s, t);
        for (int i = 0; i < 5; ++i) {
            Vector x = 2.0 * rng.normal_vector(2);
            Vector fd = oracles::fd_gradient([&](const Vector& p) { return gt.log_density(p); },
                                             x, 1e-6);
            Vector sc = mixture_score(g, s, x, t);
            CHECK((sc - fd).norm() < 1e-6 * std::max(1.0, sc.norm()));
        }
    }
}

TEST_CASE("score Jacobian: identity prior, symmetry, finite differences") {
    VpSchedule s;
    auto normal = GaussianMixture::single(Vector::Zero(2), Matrix::Identity(2, 2));
    Rng rng(4);
    for (double t : {0.1, 0.7}) {
        Vector x = rng.normal_vector(2);
        CHECK((mixture_score_jacobian(normal, s, x, t) + Matrix::Identity(2, 2)).norm() <
              1e-12);
    }

    auto g = toy_mixture();
    for (double t : {0.1, 0.5}) {
        Vector x = 1.5 * rng.normal_vector(2);
        Matrix jac = mixture_score_jacobian(g, s, x, t);
        CHECK((jac - jac.transpose()).norm() < 1e-12);
        Matrix fd = oracles::fd_jacobian(
            [&](const Vector& p) { return mixture_score(g, s, p, t); }, x, 1e-6);
        CHECK((jac - fd).norm() < 1e-5 * std::max(1.0, jac.norm()));
    }
}

TEST_CASE("score is a conservative field: line integrals recover log-density gaps") {
    VpSchedule s;
    auto g = toy_mixture();
    const double t = 0.4;
    auto gt = g.diffused(s, t);
    Rng rng(5);
    for (int i = 0; i < 3; ++i) {
        Vector x0 = rng.normal_vector(2);
        Vector x1 = rng.normal_vector(2) + Vector::Ones(2);
        const double path = oracles::line_integral(
            [&](const Vector& p) { return mixture_score(g, s, p, t); }, x0, x1, 400);
        const double gap = gt.log_density(x1) - gt.log_density(x0);
        CHECK(std::abs(path - gap) < 1e-4 * std::max(1.0, std::abs(gap)));
    }
}

TEST_CASE("particle marginal score") {
    VpSchedule s;
    Vector mu1(2), mu2(2);
    mu1 << -1.0, 0.0;
    mu2 << 1.0, 0.0;

    SUBCASE("K = 1 closed form") {
        ParticleMarginalScore one({mu1}, s);
        const double t = 0.3;
        auto [a, sig] = s.alpha_sigma(t);
        Rng rng(6);
        Vector x = rng.normal_vector(2);
        Vector expected = -(x - a * mu1) / (sig * sig);
        CHECK((one.score(x, t) - expected).norm() < 1e-12);
    }

    SUBCASE("symmetry kills the tangential component at the midpoint") {
        ParticleMarginalScore two({mu1, mu2}, s);
        const double t = 0.3;
        Vector x(2);
        x << 0.0, 0.7; // equidistant from both diffused means
        Vector sc = two.score(x, t);
        CHECK(std::abs(sc[0]) < 1e-12);
    }

    SUBCASE("identical particles reduce to the K = 1 formula") {
        ParticleMarginalScore stacked({mu1, mu1, mu1}, s);
        ParticleMarginalScore one({mu1}, s);
        Rng rng(7);
        Vector x = rng.normal_vector(2);
        CHECK((stacked.score(x, 0.5) - one.score(x, 0.5)).norm() < 1e-13);
    }

    SUBCASE("cross-implementation oracle: tiny-covariance mixture") {
        Vector w(2);
        w << 0.5, 0.5;
        Matrix tiny = 1e-18 * Matrix::Identity(2, 2);
        GaussianMixture as_mixture(w, {mu1, mu2}, {tiny, tiny});
        ParticleMarginalScore particles({mu1, mu2}, s);
        Rng rng(8);
        for (double t : {0.2, 0.6}) {
            for (int i = 0; i < 5; ++i) {
                Vector x = rng.normal_vector(2);
                Vector a = particles.score(x, t);
                Vector b = mixture_score(as_mixture, s, x, t);
                CHECK((a - b).norm() < 1e-6 * std::max(1.0, a.norm()));
            }
        }
    }

    SUBCASE("Jacobian matches finite differences") {
        ParticleMarginalScore two({mu1, mu2}, s);
        Rng rng(9);
        Vector x = rng.normal_vector(2);
        const double t = 0.25;
        Matrix jac = two.score_jacobian(x, t);
        Matrix fd = oracles::fd_jacobian(
            [&](const Vector& p) { return two.score(p, t); }, x, 1e-6);
        CHECK((jac - fd).norm() < 1e-5 * std::max(1.0, jac.norm()));
    }
}

TEST_CASE("jacobian call counter instruments the oracle") {
    VpSchedule s;
    AnalyticMixtureScore oracle(toy_mixture(), s);
    CHECK(oracle.jacobian_calls() == 0);
    oracle.score(Vector::Zero(2), 0.5);
    CHECK(oracle.jacobian_calls() == 0);
    oracle.score_jacobian(Vector::Zero(2), 0.5);
    oracle.score_jacobian(Vector::Zero(2), 0.5);
    CHECK(oracle.jacobian_calls() == 2);
    oracle.reset_jacobian_calls();
    CHECK(oracle.jacobian_calls() == 0);
}

TEST_CASE("tweedie denoiser") {
    VpSchedule s;

    SUBCASE("standard normal prior gives alpha * x_t") {
        AnalyticMixtureScore oracle(
            GaussianMixture::single(Vector::Zero(2), Matrix::Identity(2, 2)), s);
        Rng rng(10);
        for (double t : {0.2, 0.6, 1.0}) {
            const double a = s.alpha(t);
            Vector x = rng.normal_vector(2);
            CHECK((tweedie_denoise(oracle, s, x, t) - a * x).norm() < 1e-12);
        }
    }

    SUBCASE("t near 0 returns x_t") {
        AnalyticMixtureScore oracle(toy_mixture(), s);
        Vector x(2);
        x << 0.4, -0.2;
        CHECK((tweedie_denoise(oracle, s, x, s.t_min) - x).norm() < 0.02);
    }

    SUBCASE("bimodal prior matches the grid conditional mean") {
        auto g = toy_mixture();
        AnalyticMixtureScore oracle(g, s);
        const double t = 0.45;
        auto [a, sig] = s.alpha_sigma(t);
        Vector xt(2);
        xt << 0.3, -0.1;
        // E[x0 | x_t] by quadrature over the clean variable
        auto joint = [&](const Vector& x0) {
            return std::exp(g.log_density(x0) -
                            0.5 * (xt - a * x0).squaredNorm() / (sig * sig));
        };
        Vector lo(2), hi(2);
        lo << -5.0, -5.0;
        hi << 5.0, 5.0;
        const double z = oracles::grid_integral_2d(joint, lo, hi, 500);
        Vector num(2);
        for (int c = 0; c < 2; ++c)
            num[c] = oracles::grid_integral_2d(
                [&](const Vector& x0) { return x0[c] * joint(x0); }, lo, hi, 500);
        Vector oracle_mean = num / z;
        CHECK((tweedie_denoise(oracle, s, xt, t) - oracle_mean).norm() < 1e-3);
    }

    SUBCASE("rejects t below t_min") {
        AnalyticMixtureScore oracle(toy_mixture(), s);
        CHECK_THROWS_AS(tweedie_denoise(oracle, s, Vector::Zero(2), 0.0), std::domain_error);
    }
}
