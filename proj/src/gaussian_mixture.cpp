#include "ppmlab/gaussian_mixture.hpp"

#include <cmath>
#include <limits>

namespace ppmlab {

namespace {

constexpr double kEigenvalueFloor = 1e-10;
constexpr double kLog2Pi = 1.8378770664093454836;

// Symmetrize and floor eigenvalues at kEigenvalueFloor. Rejects matrices
// with clearly negative spectrum.
Matrix spd_project(const Matrix& a) {
    Matrix sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    require(es.info() == Eigen::Success, "GaussianMixture: eigendecomposition failed");
    Vector ev = es.eigenvalues();
    require(ev.minCoeff() > -1e-8, "GaussianMixture: covariance has negative eigenvalue");
    for (int i = 0; i < ev.size(); ++i) ev[i] = std::max(ev[i], kEigenvalueFloor);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double logsumexp(const Vector& v) {
    double m = v.maxCoeff();
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (int i = 0; i < v.size(); ++i) s += std::exp(v[i] - m);
    return m + std::log(s);
}

} // namespace

GaussianMixture::GaussianMixture(Vector weights, std::vector<Vector> means,
                                 std::vector<Matrix> covariances)
    : weights_(std::move(weights)), means_(std::move(means)), covs_(std::move(covariances)) {
    require(!means_.empty(), "GaussianMixture: needs at least one component");
    require(weights_.size() == static_cast<long>(means_.size()) &&
                means_.size() == covs_.size(),
            "GaussianMixture: weights/means/covariances count mismatch");
    dim_ = static_cast<int>(means_[0].size());
    require(weights_.minCoeff() >= 0.0, "GaussianMixture: negative weight");
    require(std::abs(weights_.sum() - 1.0) <= 1e-12, "GaussianMixture: weights must sum to 1");

    chol_.reserve(covs_.size());
    log_norm_.reserve(covs_.size());
    for (std::size_t i = 0; i < covs_.size(); ++i) {
        require(means_[i].size() == dim_, "GaussianMixture: mean dimension mismatch");
        require(covs_[i].rows() == dim_ && covs_[i].cols() == dim_,
                "GaussianMixture: covariance shape mismatch");
        covs_[i] = spd_project(covs_[i]);
        chol_.emplace_back(covs_[i]);
        require(chol_.back().info() == Eigen::Success, "GaussianMixture: Cholesky failed");
        double log_det = 0.0;
        const auto& l = chol_.back().matrixL();
        for (int k = 0; k < dim_; ++k) log_det += 2.0 * std::log(l(k, k));
        log_norm_.push_back(-0.5 * dim_ * kLog2Pi - 0.5 * log_det);
    }
}

GaussianMixture GaussianMixture::single(Vector mean, Matrix cov) {
    Vector w(1);
    w[0] = 1.0;
    return GaussianMixture(w, {std::move(mean)}, {std::move(cov)});
}

Vector GaussianMixture::component_log_joint(const Vector& x) const {
    require(x.size() == dim_, "GaussianMixture: point dimension mismatch");
    Vector lj(components());
    for (int i = 0; i < components(); ++i) {
        Vector r = x - means_[i];
        double maha = r.dot(chol_[i].solve(r));
        double lw = weights_[i] > 0.0 ? std::log(weights_[i])
                                      : -std::numeric_limits<double>::infinity();
        lj[i] = lw + log_norm_[i] - 0.5 * maha;
    }
    return lj;
}

double GaussianMixture::log_density(const Vector& x) const {
    return logsumexp(component_log_joint(x));
}

Vector GaussianMixture::sample(Rng& rng) const {
    int i = rng.categorical(weights_);
    Vector z = rng.normal_vector(dim_);
    return means_[i] + chol_[i].matrixL() * z;
}

GaussianMixture GaussianMixture::diffused(const VpSchedule& s, double t) const {
    auto [a, sig] = s.alpha_sigma(t);
    std::vector<Vector> means;
    std::vector<Matrix> covs;
    means.reserve(means_.size());
    covs.reserve(covs_.size());
    Matrix eye = Matrix::Identity(dim_, dim_);
    for (int i = 0; i < components(); ++i) {
        means.push_back(a * means_[i]);
        covs.push_back(a * a * covs_[i] + sig * sig * eye);
    }
    return GaussianMixture(weights_, std::move(means), std::move(covs));
}

double GaussianMixture::max_condition_number() const {
    double worst = 1.0;
    for (const auto& c : covs_) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(c);
        double lo = es.eigenvalues().minCoeff();
        double hi = es.eigenvalues().maxCoeff();
        worst = std::max(worst, hi / std::max(lo, std::numeric_limits<double>::min()));
    }
    return worst;
}

double gmm_log_density(const GaussianMixture& g, const Vector& x) { return g.log_density(x); }

Vector gmm_sample(const GaussianMixture& g, Rng& rng) { return g.sample(rng); }

GaussianMixture diffuse_gmm(const GaussianMixture& g, const VpSchedule& s, double t) {
    return g.diffused(s, t);
}

} // namespace ppmlab
