#include "ppmlab/problem.hpp"

#include "test_oracles.hpp"

#include <doctest.h>

using namespace ppmlab;

TEST_CASE("operator apply and adjoint are exact transposes") {
    Rng rng(11);
    std::vector<LinearOperator> ops;
    Matrix f(2, 3);
    f << 1.0, -0.5, 2.0, 0.0, 1.5, -1.0;
    ops.push_back(LinearOperator::dense(f));
    ops.push_back(LinearOperator::mask({0, 2}, 3));
    ops.push_back(LinearOperator::dft_mask({0, 1, 3}, 6));

    for (const auto& op : ops) {
        for (int rep = 0; rep < 20; ++rep) {
            Vector u = rng.normal_vector(op.input_dim());
            Vector v = rng.normal_vector(op.output_dim());
            const double lhs = op.apply(u).dot(v);
            const double rhs = u.dot(op.apply_adjoint(v));
            CHECK(std::abs(lhs - rhs) < 1e-12 * (1.0 + std::abs(lhs)));
        }
    }
}

TEST_CASE("structured operators agree with their dense materialization") {
    Rng rng(12);
    auto mask = LinearOperator::mask({1, 3}, 4);
    auto dft = LinearOperator::dft_mask({0, 2, 5}, 8);
    for (int rep = 0; rep < 10; ++rep) {
        Vector x4 = rng.normal_vector(4);
        CHECK((mask.apply(x4) - mask.to_dense() * x4).norm() < 1e-14);
        Vector x8 = rng.normal_vector(8);
        CHECK((dft.apply(x8) - dft.to_dense() * x8).norm() < 1e-12);
    }
    // orthonormal rows: selecting all DFT rows gives an orthogonal matrix
    auto full = LinearOperator::dft_mask({0, 1, 2, 3, 4, 5, 6, 7}, 8);
    CHECK((full.to_dense() * full.to_dense().transpose() - Matrix::Identity(8, 8)).norm() <
          1e-12);
}

TEST_CASE("1D conjugate posterior") {
    auto prior = GaussianMixture::single(Vector::Zero(1), Matrix::Identity(1, 1));
    Vector y(1);
    y << 2.0;
    LinearGaussianProblem prob(LinearOperator::dense(Matrix::Identity(1, 1)), y, 1.0);
    auto post = analytic_posterior(prior, prob);
    CHECK(post.mean(0)[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(post.cov(0)(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("symmetric bimodal prior with symmetric observation keeps equal weights") {
    Vector w(2);
    w << 0.5, 0.5;
    Vector m1(2), m2(2);
    m1 << -2.0, 1.0;
    m2 << 2.0, 1.0;
    Matrix c = 0.25 * Matrix::Identity(2, 2);
    GaussianMixture prior(w, {m1, m2}, {c, c});

    Matrix f(1, 2);
    f << 0.0, 1.0; // observes only the symmetric coordinate
    Vector y(1);
    y << 1.2;
    LinearGaussianProblem prob(LinearOperator::dense(f), y, 0.5);
    auto post = analytic_posterior(prior, prob);
    CHECK(post.weights()[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(post.weights()[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("2D posterior matches the grid-quadrature Bayes oracle in total variation") {
    Vector w(2);
    w << 0.65, 0.35;
    Vector m1(2), m2(2);
    m1 << -1.6, 0.5;
    m2 << 1.6, 1.1;
    Matrix c1 = 0.16 * Matrix::Identity(2, 2);
    Matrix c2(2, 2);
    c2 << 0.2, 0.05, 0.05, 0.12;
    GaussianMixture prior(w, {m1, m2}, {c1, c2});

    Matrix f(1, 2);
    f << 0.3, 1.0;
    Vector y(1);
    y << 0.8;
    LinearGaussianProblem prob(LinearOperator::dense(f), y, 0.6);
    auto post = analytic_posterior(prior, prob);

    // brute-force Bayes on a 200 x 200 grid
    Vector lo(2), hi(2);
    lo << -4.0, -2.5;
    hi << 4.0, 3.5;
    const int n = 200;
    const double hx = (hi[0] - lo[0]) / n, hy = (hi[1] - lo[1]) / n;
    Matrix unnorm(n, n);
    double total = 0.0;
    Vector p(2);
    for (int i = 0; i < n; ++i) {
        p[0] = lo[0] + (i + 0.5) * hx;
        for (int j = 0; j < n; ++j) {
            p[1] = lo[1] + (j + 0.5) * hy;
            unnorm(i, j) = std::exp(prior.log_density(p) + prob.log_likelihood(p));
            total += unnorm(i, j);
        }
    }
    double tv = 0.0;
    for (int i = 0; i < n; ++i) {
        p[0] = lo[0] + (i + 0.5) * hx;
        for (int j = 0; j < n; ++j) {
            p[1] = lo[1] + (j + 0.5) * hy;
            const double oracle_cell = unnorm(i, j) / total;
            const double analytic_cell = std::exp(post.log_density(p)) * hx * hy;
            tv += 0.5 * std::abs(oracle_cell - analytic_cell);
        }
    }
    CHECK(tv < 1e-3);
}

TEST_CASE("posterior weights sum to one and covariances stay SPD") {
    Vector w(3);
    w << 0.2, 0.5, 0.3;
    std::vector<Vector> means = {Vector::Zero(2), 2.0 * Vector::Ones(2), -Vector::Ones(2)};
    Matrix c = 0.3 * Matrix::Identity(2, 2);
    GaussianMixture prior(w, means, {c, c, c});
    Matrix f(1, 2);
    f << 1.0, -0.4;
    Vector y(1);
    y << 0.3;
    LinearGaussianProblem prob(LinearOperator::dense(f), y, 0.4);
    auto post = analytic_posterior(prior, prob);
    CHECK(post.weights().sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (int i = 0; i < post.components(); ++i) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(post.cov(i));
        CHECK(es.eigenvalues().minCoeff() > 0.0);
    }
}

TEST_CASE("simulate_observation residual statistics and determinism") {
    auto prior = GaussianMixture::single(Vector::Zero(3), Matrix::Identity(3, 3));
    Matrix f(2, 3);
    f << 1.0, 0.0, 0.5, 0.0, 1.0, -0.5;
    auto op = LinearOperator::dense(f);

    SUBCASE("tiny noise pins y to F x_true") {
        Rng rng(1);
        auto prob = simulate_observation(prior, op, 1e-12, rng);
        CHECK((prob.y() - op.apply(prob.x_true_for_eval())).norm() < 1e-9);
    }
    SUBCASE("residual rms concentrates near sigma_y") {
        const double sigma_y = 0.7;
        double acc = 0.0;
        const int reps = 2000;
        Rng rng(2);
        for (int i = 0; i < reps; ++i) {
            auto prob = simulate_observation(prior, op, sigma_y, rng);
            acc += (prob.y() - op.apply(prob.x_true_for_eval())).squaredNorm();
        }
        // chi-square with 2*reps degrees of freedom
        const double mean_sq = acc / (2.0 * reps);
        const double se = sigma_y * sigma_y * std::sqrt(2.0 / (2.0 * reps));
        CHECK(std::abs(mean_sq - sigma_y * sigma_y) < 3.0 * se);
    }
    SUBCASE("seeded determinism") {
        Rng a(9), b(9);
        auto p1 = simulate_observation(prior, op, 0.5, a);
        auto p2 = simulate_observation(prior, op, 0.5, b);
        CHECK(p1.y() == p2.y());
        CHECK(p1.x_true_for_eval() == p2.x_true_for_eval());
    }
}

TEST_CASE("near-singular prior covariance is rejected with a condition report") {
    // the eigenvalue floor lifts 1e-11 to 1e-10; the 1e3 top eigenvalue then
    // puts the condition number at 1e13, past the conjugate-update guard
    Matrix c(2, 2);
    c << 1e3, 0.0, 0.0, 1e-11;
    auto prior = GaussianMixture::single(Vector::Zero(2), c);
    Matrix f(1, 2);
    f << 1.0, 0.0;
    Vector y(1);
    y << 0.5;
    LinearGaussianProblem prob(LinearOperator::dense(f), y, 0.3);
    CHECK_THROWS_WITH_AS(analytic_posterior(prior, prob),
                         doctest::Contains("condition number"), std::runtime_error);
}
