#pragma once

#include "ppmlab/metric_fn.hpp"
#include "ppmlab/net.hpp"
#include "ppmlab/problem.hpp"
#include "ppmlab/score_oracle.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ppmlab {

/// The variational parameters of particle-based inference.
struct ParticleEnsemble {
    std::vector<Vector> particles;

    int size() const { return static_cast<int>(particles.size()); }
    int dim() const { return particles.empty() ? 0 : static_cast<int>(particles[0].size()); }
    void validate() const;

    Vector flatten() const;
    static ParticleEnsemble from_flat(const Vector& flat, int k, int d);
};

/// Minimum-norm solution F^T (F F^T)^{-1} y plus per-particle Gaussian jitter.
/// Identical particles make the particle-mixture score degenerate, hence the
/// jitter default.
ParticleEnsemble init_particles_from_measurement(const LinearGaussianProblem& prob, int k,
                                                 double jitter, Rng& rng);

enum class AuxMode { OracleAnalytic, Learned };

struct PpmConfig {
    double lambda = 1.0; // data weight; effective weight is lambda / (2 sigma_y^2)
    TimeWeight time_weight = TimeWeight::one();
    bool include_diffusion_factor = true; // multiply prior term by g(t)^2 / 2
    int iterations = 2000;
    double lr = 0.03;
    AuxMode aux_mode = AuxMode::OracleAnalytic;
    MetricFn metric = MetricFn::l2_squared();
    int num_particles = 64;
    /// Monte-Carlo draws of (t, eps) averaged per particle and iteration.
    /// Times are stratified over [t_min, t_max]; the small-t tail of the
    /// integrand makes single-draw gradients far too noisy at toy dimension.
    int draws_per_particle = 16;
    /// Stratify ln t instead of t (unbiased importance sampling of the time
    /// integral; flattens the near-t_min variance spike).
    bool log_time_sampling = true;
    std::uint64_t seed = 0;
    double init_jitter = 0.5;
    double divergence_guard = 1e6;
    // fraction of final iterations averaged into RunRecord::tail_mean
    double tail_fraction = 0.25;

    // learned auxiliary
    AdamParams aux_adam{1e-3};
    int aux_steps_per_iter = 1;
    int aux_pretrain_steps = 1500;
    int aux_batch = 64;
    std::vector<int> aux_hidden = {64, 64, 64};

    // amortized mode
    double obs_noise = 0.0; // h: variance of the noise added to y
    int batch_size = 32;
    std::vector<int> generator_hidden = {64, 64, 64};

    void validate() const;
};

struct IterationStats {
    double residual_rms = 0.0;
    double prior_loss = 0.0;
    double diversity = 0.0;
};

struct RunRecord {
    std::string config_summary;
    std::uint64_t seed = 0;
    std::vector<IterationStats> iterations;
    ParticleEnsemble final_particles;
    ParticleEnsemble tail_mean; // empty unless tail_fraction > 0
    double wall_time_sec = 0.0;

    const ParticleEnsemble& representative() const {
        return tail_mean.particles.empty() ? final_particles : tail_mean;
    }
};

/// Per-draw surrogate of the score-matching objective and its total gradient
/// with respect to x0. With x_t = alpha_t x0 + sigma_t eps,
/// u = aux(x_t) - prior(x_t) and r = aux(x_t) - cond_score(x_t, x0):
///
///   L = -d'(u)^T r + d(u)
///
/// The gradient flows through x_t into both score evaluations (their
/// Jacobians) and through the explicit x0 argument of the conditional score;
/// the score oracles' own parameters stay fixed. Returns L; writes the
/// gradient if grad_x0 is non-null. No time weighting is applied here.
double ppm_surrogate(const Vector& x0, const ScoreDraw& draw, const ScoreOracle& aux,
                     const ScoreOracle& prior, const VpSchedule& s, const MetricFn& metric,
                     Vector* grad_x0);

struct PriorGradResult {
    std::vector<Vector> grads;  // one per batch element, weighted per draw
    std::vector<double> values; // weighted d(u) per draw
    double mean_weighted_value; // average weighted d(u) (prior-loss estimate)
};

/// Batch form: gradient of the prior-matching term for each x0, each draw
/// weighted by w(t) * g(t)^2 / 2 (the diffusion factor can be disabled).
PriorGradResult ppm_prior_grad(const std::vector<Vector>& x0_batch, const ScoreOracle& aux,
                               const ScoreOracle& prior, const VpSchedule& s,
                               const std::vector<ScoreDraw>& draws, const MetricFn& metric,
                               const TimeWeight& w = TimeWeight::one(),
                               bool include_diffusion_factor = true);

/// Stratified (t, eps) draws covering [t_min, t_max] in `count` jittered
/// strata; used to tame the small-t variance of the integrand.
std::vector<ScoreDraw> stratified_draws(const VpSchedule& s, int dim, int count, Rng& rng);

/// One (t, eps) draw per stratum together with its quadrature weight, so that
/// sum_i weight_i * f(t_i, eps_i) estimates the time integral of E_eps f.
/// log_space stratifies u = ln t (importance sampling that flattens the
/// 1/t-shaped integrands near t_min); weights then carry the Jacobian t.
struct WeightedDraw {
    ScoreDraw draw;
    double integral_weight;
};
std::vector<WeightedDraw> integration_draws(const VpSchedule& s, int dim, int count,
                                            bool log_space, Rng& rng);

/// Gradient of ||y - F x0||^2: 2 F^T (F x0 - y).
Vector data_fidelity_grad(const LinearGaussianProblem& prob, const Vector& x0);

/// Particle-based variational inference (Algorithm mode: variational).
RunRecord run_ppm_vi(const PpmConfig& cfg, const LinearGaussianProblem& prob,
                     const GaussianMixture& prior_mix, const VpSchedule& s);

struct AmortizedResult {
    FeedForwardNet generator;
    RunRecord record;
};

/// Amortized inference: trains a generator y' -> x0 over a dataset of
/// problems sharing one operator (Algorithm mode: amortized).
AmortizedResult run_ppm_amortized(const PpmConfig& cfg,
                                  const std::vector<LinearGaussianProblem>& dataset,
                                  const GaussianMixture& prior_mix, const VpSchedule& s);

} // namespace ppmlab
