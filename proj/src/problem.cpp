#include "ppmlab/problem.hpp"

#include <cmath>
#include <sstream>

namespace ppmlab {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;

double gaussian_log_density(const Vector& x, const Vector& mean, const Matrix& cov) {
    Eigen::LLT<Matrix> llt(cov);
    require(llt.info() == Eigen::Success, "gaussian_log_density: covariance not SPD");
    Vector r = x - mean;
    double maha = r.dot(llt.solve(r));
    double log_det = 0.0;
    for (int k = 0; k < cov.rows(); ++k) log_det += 2.0 * std::log(llt.matrixL()(k, k));
    return -0.5 * (x.size() * kLog2Pi + log_det + maha);
}
} // namespace

LinearGaussianProblem::LinearGaussianProblem(LinearOperator op, Vector y, double sigma_y,
                                             std::optional<Vector> x_true)
    : op_(std::move(op)), y_(std::move(y)), sigma_y_(sigma_y), x_true_(std::move(x_true)) {
    require(sigma_y_ > 0.0, "LinearGaussianProblem: sigma_y must be > 0");
    require(y_.size() == op_.output_dim(), "LinearGaussianProblem: dim(y) != output_dim");
    if (x_true_)
        require(x_true_->size() == op_.input_dim(),
                "LinearGaussianProblem: x_true dimension mismatch");
}

const Vector& LinearGaussianProblem::x_true_for_eval() const {
    require(x_true_.has_value(), "LinearGaussianProblem: no x_true recorded");
    return *x_true_;
}

double LinearGaussianProblem::log_likelihood(const Vector& x) const {
    Vector r = y_ - op_.apply(x);
    const double s2 = sigma_y_ * sigma_y_;
    return -0.5 * (y_.size() * (kLog2Pi + std::log(s2)) + r.squaredNorm() / s2);
}

Vector LinearGaussianProblem::log_likelihood_grad(const Vector& x) const {
    Vector r = y_ - op_.apply(x);
    return op_.apply_adjoint(r) / (sigma_y_ * sigma_y_);
}

GaussianMixture analytic_posterior(const GaussianMixture& prior,
                                   const LinearGaussianProblem& prob) {
    const int d = prior.dim();
    require(prob.op().input_dim() == d, "analytic_posterior: operator/prior dim mismatch");
    const Matrix f = prob.op().to_dense();
    const double s2 = prob.sigma_y() * prob.sigma_y();
    const Matrix ftf_over_s2 = f.transpose() * f / s2;
    const Vector fty_over_s2 = f.transpose() * prob.y() / s2;

    std::vector<Vector> means(prior.components());
    std::vector<Matrix> covs(prior.components());
    Vector log_w(prior.components());

    for (int i = 0; i < prior.components(); ++i) {
        const Matrix& cov_i = prior.cov(i);
        Eigen::SelfAdjointEigenSolver<Matrix> es(cov_i);
        const double cond = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
        if (!(cond < 1e12)) {
            std::ostringstream msg;
            msg << "analytic_posterior: component " << i
                << " covariance numerically singular (condition number " << cond << ")";
            throw std::runtime_error(msg.str());
        }
        Eigen::LLT<Matrix> llt(cov_i);
        const Matrix lambda_i = llt.solve(Matrix::Identity(d, d));

        Matrix post_prec = lambda_i + ftf_over_s2;
        Eigen::LLT<Matrix> post_llt(0.5 * (post_prec + post_prec.transpose()));
        require(post_llt.info() == Eigen::Success, "analytic_posterior: precision not SPD");
        covs[i] = post_llt.solve(Matrix::Identity(d, d));
        means[i] = post_llt.solve(lambda_i * prior.mean(i) + fty_over_s2);

        // evidence of component i: N(y; F m_i, F S_i F^T + sigma_y^2 I)
        Matrix y_cov = f * cov_i * f.transpose() +
                       s2 * Matrix::Identity(prob.y().size(), prob.y().size());
        double lw = prior.weights()[i] > 0.0 ? std::log(prior.weights()[i])
                                             : -std::numeric_limits<double>::infinity();
        log_w[i] = lw + gaussian_log_density(prob.y(), f * prior.mean(i), y_cov);
    }

    double m = log_w.maxCoeff();
    Vector w(prior.components());
    for (int i = 0; i < prior.components(); ++i) w[i] = std::exp(log_w[i] - m);
    w /= w.sum();
    return GaussianMixture(w, std::move(means), std::move(covs));
}

LinearGaussianProblem simulate_observation(const GaussianMixture& prior,
                                           const LinearOperator& op, double sigma_y,
                                           Rng& rng) {
    require(sigma_y > 0.0, "simulate_observation: sigma_y must be > 0");
    Vector x_true = prior.sample(rng);
    Vector y = op.apply(x_true) + sigma_y * rng.normal_vector(op.output_dim());
    return LinearGaussianProblem(op, std::move(y), sigma_y, std::move(x_true));
}

} // namespace ppmlab
