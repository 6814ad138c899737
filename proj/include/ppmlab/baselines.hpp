#pragma once

#include "ppmlab/ppm.hpp"

namespace ppmlab {

enum class DpsGuidance {
    ResidualNormalized, // zeta / ||y - F x0_hat|| step scaling
    Likelihood          // grad log N(y; F x0_hat, sigma_y^2 I)
};

enum class IklMode { Particle, Amortized };

/// Shared knobs for the compared method families. Method-specific fields are
/// ignored by the other solvers.
struct BaselineConfig {
    std::string method = "reddiff"; // reddiff | rlsd | dps | ikl
    int iterations = 2000;
    double lr = 0.03;
    std::uint64_t seed = 0;
    int num_particles = 1;
    double init_jitter = 0.5;
    double divergence_guard = 1e6;
    double tail_fraction = 0.25;
    /// The (t, eps) draw set shared by every particle per iteration; with an
    /// identical init this makes restarts bit-identical.
    bool shared_draws = false;
    /// (t, eps) draws averaged per particle and iteration (reddiff/rlsd/ikl).
    int draws_per_particle = 8;

    // RED-Diff / RLSD / IKL
    double lambda = 1.0;
    TimeWeight omega = TimeWeight::one();
    /// IKL only: stratify ln t when estimating the time integral.
    bool log_time_sampling = true;

    // RLSD
    double repulsion_gamma = 1.0;

    // DPS
    int dps_steps = 1000;
    int dps_samples = 64;
    double zeta = 1.0;
    DpsGuidance guidance = DpsGuidance::ResidualNormalized;

    // IKL
    IklMode ikl_mode = IklMode::Particle;
    // amortized extras (mirroring PpmConfig)
    double obs_noise = 0.0;
    int batch_size = 32;
    std::vector<int> generator_hidden = {64, 64, 64};

    void validate() const;
};

/// Point-estimate optimization of the weighted score-matching loss with a
/// detached score residual (K independent restarts).
RunRecord run_reddiff(const BaselineConfig& cfg, const LinearGaussianProblem& prob,
                      const ScoreOracle& prior, const VpSchedule& s);

/// RED-Diff particles plus an RBF repulsion with median-heuristic bandwidth.
RunRecord run_rlsd(const BaselineConfig& cfg, const LinearGaussianProblem& prob,
                   const ScoreOracle& prior, const VpSchedule& s);

/// Reverse-SDE Euler-Maruyama sampling with likelihood guidance through the
/// Tweedie denoiser. Returns the final-step samples.
std::vector<Vector> run_dps(const BaselineConfig& cfg, const LinearGaussianProblem& prob,
                            const ScoreOracle& prior, const VpSchedule& s);

/// Integral-KL particle solver: the prior-matching gradient contracts the
/// detached score residual with d x_t / d mu only (no correction terms).
RunRecord run_ikl(const BaselineConfig& cfg, const LinearGaussianProblem& prob,
                  const ScoreOracle& prior, const VpSchedule& s);

/// Amortized integral-KL: same gradient routed into a reconstruction network.
AmortizedResult run_ikl_amortized(const BaselineConfig& cfg,
                                  const std::vector<LinearGaussianProblem>& dataset,
                                  const ScoreOracle& prior, const VpSchedule& s);

} // namespace ppmlab
