#include "ppmlab/metrics.hpp"

#include "test_oracles.hpp"

#include <doctest.h>

using namespace ppmlab;

TEST_CASE("diversity: identical, orthogonal, hand case, invariances") {
    Vector a(2), b(2);
    a << 1.0, 0.0;
    b << 1.0, 1.0;
    CHECK(diversity({a, a, a}) == doctest::Approx(0.0));

    Vector e1(2), e2(2);
    e1 << 1.0, 0.0;
    e2 << 0.0, 1.0;
    CHECK(diversity({e1, e2}) == doctest::Approx(1.0));

    CHECK(diversity({a, b}) == doctest::Approx(1.0 - 1.0 / std::sqrt(2.0)).epsilon(1e-12));

    // invariant to positive rescaling of all samples
    CHECK(diversity({3.7 * a, 3.7 * b}) == doctest::Approx(diversity({a, b})).epsilon(1e-12));

    CHECK_THROWS_AS(diversity({a}), std::invalid_argument);
    CHECK_THROWS_AS(diversity({a, Vector::Zero(2)}), std::invalid_argument);
    CHECK(diversity_or({a, Vector::Zero(2)}, -1.0) == -1.0);
}

TEST_CASE("multi-observation diversity averages per observation") {
    Vector a(2), b(2), c(2);
    a << 1.0, 0.0;
    b << 0.0, 1.0;
    c << 1.0, 1.0;
    const double d1 = diversity({a, b});
    const double d2 = diversity({a, c});
    CHECK(diversity_multi({{a, b}, {a, c}}) == doctest::Approx(0.5 * (d1 + d2)));
}

TEST_CASE("mode coverage and assignment") {
    Vector w(2);
    w << 0.5, 0.5;
    Vector m1(2), m2(2);
    m1 << -2.0, 0.0;
    m2 << 2.0, 0.0;
    Matrix c = 0.25 * Matrix::Identity(2, 2);
    GaussianMixture post(w, {m1, m2}, {c, c});

    SUBCASE("particles at every mean give full coverage") {
        auto mc = mode_coverage({m1, m2}, post);
        CHECK(mc.coverage == doctest::Approx(1.0));
        CHECK(mc.assignment_fractions[0] == doctest::Approx(0.5));
        CHECK(mc.assignment_fractions[1] == doctest::Approx(0.5));
    }
    SUBCASE("all particles on one mode") {
        auto mc = mode_coverage({m1, m1, m1}, post);
        CHECK(mc.coverage == doctest::Approx(0.5));
        CHECK(mc.assignment_fractions[0] == doctest::Approx(1.0));
        CHECK(mc.assignment_fractions[1] == doctest::Approx(0.0));
    }
    SUBCASE("far-away particles stay unassigned") {
        Vector far(2);
        far << 0.0, 50.0;
        auto mc = mode_coverage({far}, post);
        CHECK(mc.coverage == doctest::Approx(0.0));
    }
    SUBCASE("posterior samples recover the weights within sampling error") {
        Vector w2(2);
        w2 << 0.7, 0.3;
        GaussianMixture post2(w2, {m1, m2}, {c, c});
        Rng rng(11);
        std::vector<Vector> samples;
        for (int i = 0; i < 256; ++i) samples.push_back(post2.sample(rng));
        auto mc = mode_coverage(samples, post2);
        CHECK(std::abs(mc.assignment_fractions[0] - 0.7) < 0.1);
        CHECK(std::abs(mc.assignment_fractions[1] - 0.3) < 0.1);
    }
    SUBCASE("permutation invariance") {
        Rng rng(12);
        std::vector<Vector> samples;
        for (int i = 0; i < 64; ++i) samples.push_back(post.sample(rng));
        auto mc1 = mode_coverage(samples, post);
        std::reverse(samples.begin(), samples.end());
        auto mc2 = mode_coverage(samples, post);
        CHECK(mc1.coverage == mc2.coverage);
        CHECK(mc1.assignment_fractions == mc2.assignment_fractions);
    }
}

TEST_CASE("energy distance: degenerate cases, symmetry, closed-form oracle") {
    Rng rng(13);
    std::vector<Vector> a, b;
    for (int i = 0; i < 200; ++i) {
        a.push_back(rng.normal_vector(2));
        b.push_back(rng.normal_vector(2) + Vector::Ones(2));
    }
    CHECK(energy_distance(a, a) == doctest::Approx(0.0));
    CHECK(energy_distance(a, b) == doctest::Approx(energy_distance(b, a)));
    CHECK(energy_distance(a, b) >= 0.0);

    // 1D N(0,1) vs N(1,1) against the folded-normal closed form
    std::vector<Vector> x, y;
    Rng rng2(14);
    for (int i = 0; i < 10000; ++i) {
        Vector xi(1), yi(1);
        xi << rng2.normal();
        yi << rng2.normal() + 1.0;
        x.push_back(xi);
        y.push_back(yi);
    }
    const double closed = oracles::energy_distance_gaussians_1d(0.0, 1.0, 1.0, 1.0);
    CHECK(std::abs(energy_distance(x, y) - closed) / closed < 0.05);
}

TEST_CASE("energy permutation test has reasonable size and power") {
    // size: under the null the 5%-level rejection rate stays near 5%
    int null_rejections = 0;
    for (int trial = 0; trial < 30; ++trial) {
        Rng rng(1000 + trial);
        std::vector<Vector> a, b;
        for (int i = 0; i < 128; ++i) {
            a.push_back(rng.normal_vector(2));
            b.push_back(rng.normal_vector(2));
        }
        Rng perm(2000 + trial);
        if (energy_distance_pvalue(a, b, 200, perm) <= 0.05) ++null_rejections;
    }
    CHECK(null_rejections <= 6); // binomial(30, 0.05) tail

    // power: a 2-sigma mean shift is always detected
    for (int trial = 0; trial < 5; ++trial) {
        Rng rng(3000 + trial);
        std::vector<Vector> a, c;
        for (int i = 0; i < 128; ++i) {
            a.push_back(rng.normal_vector(2));
            c.push_back(rng.normal_vector(2) + 2.0 * Vector::Ones(2));
        }
        Rng perm(4000 + trial);
        CHECK(energy_distance_pvalue(a, c, 200, perm) < 0.05);
    }
}

TEST_CASE("gaussian KL closed form") {
    Gaussian p{Vector::Zero(2), Matrix::Identity(2, 2)};
    CHECK(gaussian_kl(p, p) == doctest::Approx(0.0));

    Vector delta(2);
    delta << 1.2, -0.4;
    Gaussian q{delta, Matrix::Identity(2, 2)};
    CHECK(gaussian_kl(q, p) == doctest::Approx(0.5 * delta.squaredNorm()).epsilon(1e-12));

    // 1D quadrature oracle on a random SPD pair
    Gaussian q1{Vector::Constant(1, 0.3), Matrix::Constant(1, 1, 0.49)};
    Gaussian p1{Vector::Constant(1, -0.5), Matrix::Constant(1, 1, 1.21)};
    auto log_pdf = [](const Gaussian& g, double x) {
        const double v = g.cov(0, 0);
        return -0.5 * std::log(2.0 * M_PI * v) - 0.5 * (x - g.mean[0]) * (x - g.mean[0]) / v;
    };
    double kl_quad = 0.0;
    const int n = 200000;
    const double lo = -8.0, hi = 8.0, h = (hi - lo) / n;
    for (int i = 0; i < n; ++i) {
        const double x = lo + (i + 0.5) * h;
        const double lq = log_pdf(q1, x);
        kl_quad += std::exp(lq) * (lq - log_pdf(p1, x)) * h;
    }
    CHECK(gaussian_kl(q1, p1) == doctest::Approx(kl_quad).epsilon(1e-4));
}

TEST_CASE("residual rms") {
    Matrix f = Matrix::Identity(1, 1);
    Vector y(1);
    y << 2.0;
    LinearGaussianProblem prob(LinearOperator::dense(f), y, 1.0);

    Vector fit(1), off(1);
    fit << 2.0;
    off << 1.0;
    CHECK(residual_rms(prob, {fit}) == doctest::Approx(0.0));
    CHECK(residual_rms(prob, {off}) == doctest::Approx(1.0));

    Rng rng(18);
    std::vector<Vector> pts;
    double acc = 0.0;
    for (int i = 0; i < 10; ++i) {
        pts.push_back(rng.normal_vector(1));
        acc += (y - pts.back()).squaredNorm();
    }
    CHECK(residual_rms(prob, pts) == doctest::Approx(std::sqrt(acc / 10.0)).epsilon(1e-12));
}
