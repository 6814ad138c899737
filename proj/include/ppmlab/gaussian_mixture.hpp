#pragma once

#include "ppmlab/common.hpp"
#include "ppmlab/rng.hpp"
#include "ppmlab/vp_schedule.hpp"

#include <vector>

namespace ppmlab {

/// Gaussian mixture with full covariances. Serves three roles: prior,
/// diffused marginal, and analytic posterior. Immutable after construction.
class GaussianMixture {
public:
    GaussianMixture(Vector weights, std::vector<Vector> means, std::vector<Matrix> covariances);

    static GaussianMixture single(Vector mean, Matrix cov);
    static GaussianMixture from_gaussian(const Gaussian& g) {
        return single(g.mean, g.cov);
    }

    int dim() const { return dim_; }
    int components() const { return static_cast<int>(means_.size()); }

    const Vector& weights() const { return weights_; }
    const Vector& mean(int i) const { return means_[i]; }
    const Matrix& cov(int i) const { return covs_[i]; }
    Gaussian component(int i) const { return {means_[i], covs_[i]}; }

    /// log sum_i w_i N(x; m_i, S_i), computed with log-sum-exp.
    double log_density(const Vector& x) const;

    /// Per-component log w_i + log N(x; m_i, S_i).
    Vector component_log_joint(const Vector& x) const;

    /// Ancestral sample: categorical component, then Gaussian.
    Vector sample(Rng& rng) const;

    /// Exact diffused marginal under the VP schedule:
    /// weights w_i, means alpha_t m_i, covariances alpha_t^2 S_i + sigma_t^2 I.
    GaussianMixture diffused(const VpSchedule& s, double t) const;

    /// Largest condition number over component covariances.
    double max_condition_number() const;

private:
    int dim_;
    Vector weights_;
    std::vector<Vector> means_;
    std::vector<Matrix> covs_;

    // cached per component
    std::vector<Eigen::LLT<Matrix>> chol_;
    std::vector<double> log_norm_; // -d/2 log(2 pi) - 1/2 log det S_i
};

/// Free-function forms of the mixture density ops.
double gmm_log_density(const GaussianMixture& g, const Vector& x);
Vector gmm_sample(const GaussianMixture& g, Rng& rng);
GaussianMixture diffuse_gmm(const GaussianMixture& g, const VpSchedule& s, double t);

} // namespace ppmlab
