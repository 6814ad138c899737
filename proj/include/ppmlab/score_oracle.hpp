#pragma once

#include "ppmlab/gaussian_mixture.hpp"

#include <atomic>
#include <memory>
#include <vector>

namespace ppmlab {

/// Uniform interface for time-indexed scores s(x, t) = grad_x log p_t(x).
/// Implementations are immutable during evaluation and safe to share.
/// Jacobian calls are counted so tests can assert that detached-residual
/// baselines never differentiate through the oracle.
class ScoreOracle {
public:
    ScoreOracle() = default;
    ScoreOracle(const ScoreOracle& other) : jacobian_calls_(other.jacobian_calls_.load()) {}
    ScoreOracle& operator=(const ScoreOracle& other) {
        jacobian_calls_ = other.jacobian_calls_.load();
        return *this;
    }
    virtual ~ScoreOracle() = default;

    virtual int dim() const = 0;
    virtual Vector score(const Vector& x, double t) const = 0;
    virtual bool has_jacobian() const { return false; }

    Matrix score_jacobian(const Vector& x, double t) const {
        ++jacobian_calls_;
        return jacobian_impl(x, t);
    }

    long jacobian_calls() const { return jacobian_calls_.load(); }
    void reset_jacobian_calls() const { jacobian_calls_ = 0; }

protected:
    virtual Matrix jacobian_impl(const Vector&, double) const {
        throw CapabilityError("ScoreOracle: Jacobian not available for this oracle");
    }

private:
    mutable std::atomic<long> jacobian_calls_{0};
};

/// Exact score of the diffused mixture p_t = diffuse(prior, t); responsibility
/// weighting in log-space throughout.
class AnalyticMixtureScore final : public ScoreOracle {
public:
    AnalyticMixtureScore(GaussianMixture mixture, VpSchedule schedule);

    int dim() const override { return mixture_.dim(); }
    Vector score(const Vector& x, double t) const override;
    bool has_jacobian() const override { return true; }

    const GaussianMixture& mixture() const { return mixture_; }

protected:
    Matrix jacobian_impl(const Vector& x, double t) const override;

private:
    GaussianMixture mixture_;
    VpSchedule schedule_;
};

/// Score of the uniform particle marginal sum_k (1/K) N(alpha_t mu_k,
/// sigma_t^2 I). This is the exact oracle the learned auxiliary approximates.
class ParticleMarginalScore final : public ScoreOracle {
public:
    ParticleMarginalScore(std::vector<Vector> particles, VpSchedule schedule);

    int dim() const override { return static_cast<int>(particles_[0].size()); }
    Vector score(const Vector& x, double t) const override;
    bool has_jacobian() const override { return true; }

    void set_particles(std::vector<Vector> particles);
    const std::vector<Vector>& particles() const { return particles_; }

protected:
    Matrix jacobian_impl(const Vector& x, double t) const override;

private:
    // log responsibilities and centered component scores at (x, t)
    void responsibilities(const Vector& x, double t, Vector& resp,
                          std::vector<Vector>& comp_scores) const;

    std::vector<Vector> particles_;
    VpSchedule schedule_;
};

Vector mixture_score(const GaussianMixture& g, const VpSchedule& s, const Vector& x, double t);
Matrix mixture_score_jacobian(const GaussianMixture& g, const VpSchedule& s, const Vector& x,
                              double t);
Vector particle_marginal_score(const std::vector<Vector>& particles, const VpSchedule& s,
                               const Vector& x, double t);

/// Tweedie posterior-mean denoiser x0_hat = (x_t + sigma_t^2 s(x_t, t)) / alpha_t.
Vector tweedie_denoise(const ScoreOracle& sc, const VpSchedule& s, const Vector& x_t, double t);

} // namespace ppmlab
