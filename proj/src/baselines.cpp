#include "ppmlab/baselines.hpp"

#include "ppmlab/metrics.hpp"
#include "solver_util.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace ppmlab {

using detail::TailAverager;
using detail::check_guard;

void BaselineConfig::validate() const {
    require(iterations >= 1, "BaselineConfig: iterations must be >= 1");
    require(lr > 0.0, "BaselineConfig: lr must be > 0");
    require(num_particles >= 1, "BaselineConfig: K must be >= 1");
    require(lambda >= 0.0, "BaselineConfig: lambda must be >= 0");
    require(repulsion_gamma >= 0.0, "BaselineConfig: repulsion weight must be >= 0");
    require(zeta >= 0.0, "BaselineConfig: zeta must be >= 0");
    require(dps_steps >= 1 && dps_samples >= 1, "BaselineConfig: DPS counts must be >= 1");
    require(obs_noise >= 0.0, "BaselineConfig: obs_noise must be >= 0");
}

namespace {

std::string summarize(const BaselineConfig& cfg) {
    std::ostringstream os;
    os << "method=" << cfg.method << " K=" << cfg.num_particles << " iters=" << cfg.iterations
       << " lr=" << cfg.lr << " lambda=" << cfg.lambda << " omega=" << cfg.omega.id
       << " seed=" << cfg.seed;
    return os.str();
}

// Detached-residual score-distillation gradient shared by RED-Diff and RLSD:
// 2 F^T (F mu - y) + lambda * E_t[omega(t) * alpha_t * (eps_hat - eps)].
Vector sds_gradient(const BaselineConfig& cfg, const LinearGaussianProblem& prob,
                    const ScoreOracle& prior, const VpSchedule& s, const Vector& mu,
                    const std::vector<ScoreDraw>& draws, double* score_resid_sq) {
    Vector prior_term = Vector::Zero(mu.size());
    double resid_acc = 0.0;
    for (const auto& draw : draws) {
        auto [a, sig] = s.alpha_sigma(draw.t);
        const Vector x_t = s.perturb(mu, draw.t, draw.eps);
        const Vector eps_hat = -sig * prior.score(x_t, draw.t);
        const Vector resid = eps_hat - draw.eps;
        resid_acc += cfg.omega.value(draw.t) * resid.squaredNorm();
        prior_term += cfg.omega.value(draw.t) * a * resid;
    }
    prior_term /= static_cast<double>(draws.size());
    if (score_resid_sq != nullptr) *score_resid_sq = resid_acc / draws.size();
    return data_fidelity_grad(prob, mu) + cfg.lambda * prior_term;
}

// RBF bandwidth from the median pairwise squared distance (SVGD convention).
double median_bandwidth(const std::vector<Vector>& particles) {
    std::vector<double> sq;
    for (std::size_t i = 0; i < particles.size(); ++i)
        for (std::size_t j = i + 1; j < particles.size(); ++j)
            sq.push_back((particles[i] - particles[j]).squaredNorm());
    if (sq.empty()) return 1.0;
    std::nth_element(sq.begin(), sq.begin() + sq.size() / 2, sq.end());
    const double med = sq[sq.size() / 2];
    const double h = med / std::log(static_cast<double>(particles.size()) + 1.0);
    return std::max(h, 1e-12);
}

// One stratified draw set per particle (or a single shared set).
std::vector<std::vector<ScoreDraw>> make_draw_sets(const BaselineConfig& cfg,
                                                   const VpSchedule& s, int k, int d,
                                                   Rng& rng) {
    const int b = std::max(1, cfg.draws_per_particle);
    std::vector<std::vector<ScoreDraw>> sets(k);
    if (cfg.shared_draws) {
        sets.assign(k, stratified_draws(s, d, b, rng));
    } else {
        for (int i = 0; i < k; ++i) sets[i] = stratified_draws(s, d, b, rng);
    }
    return sets;
}

std::vector<std::vector<WeightedDraw>> make_weighted_draw_sets(const BaselineConfig& cfg,
                                                               const VpSchedule& s, int k,
                                                               int d, Rng& rng) {
    const int b = std::max(1, cfg.draws_per_particle);
    std::vector<std::vector<WeightedDraw>> sets(k);
    if (cfg.shared_draws) {
        sets.assign(k, integration_draws(s, d, b, cfg.log_time_sampling, rng));
    } else {
        for (int i = 0; i < k; ++i)
            sets[i] = integration_draws(s, d, b, cfg.log_time_sampling, rng);
    }
    return sets;
}

RunRecord run_particle_descent(const BaselineConfig& cfg, const LinearGaussianProblem& prob,
                               const ScoreOracle& prior, const VpSchedule& s, bool repulsive) {
    cfg.validate();
    const auto t_start = std::chrono::steady_clock::now();
    Rng rng(cfg.seed);
    const int d = prob.op().input_dim();
    const int k = cfg.num_particles;

    ParticleEnsemble ens = init_particles_from_measurement(prob, k, cfg.init_jitter, rng);
    Vector flat = ens.flatten();
    AdamVec adam({cfg.lr});
    TailAverager tail(cfg.iterations, cfg.tail_fraction, flat.size());

    RunRecord rec;
    rec.config_summary = summarize(cfg);
    rec.seed = cfg.seed;
    rec.iterations.reserve(cfg.iterations);

    for (long iter = 0; iter < cfg.iterations; ++iter) {
        ens = ParticleEnsemble::from_flat(flat, k, d);
        const auto draw_sets = make_draw_sets(cfg, s, k, d, rng);

        const double bw = repulsive ? median_bandwidth(ens.particles) : 1.0;
        Vector grad_flat(flat.size());
        double resid_acc = 0.0;
        for (int i = 0; i < k; ++i) {
            double rsq = 0.0;
            Vector g = sds_gradient(cfg, prob, prior, s, ens.particles[i], draw_sets[i], &rsq);
            resid_acc += rsq;
            if (repulsive) {
                Vector rep = Vector::Zero(d);
                for (int j = 0; j < k; ++j) {
                    if (j == i) continue;
                    Vector diff = ens.particles[i] - ens.particles[j];
                    rep += -(2.0 / bw) * std::exp(-diff.squaredNorm() / bw) * diff;
                }
                g += cfg.repulsion_gamma * rep;
            }
            grad_flat.segment(static_cast<long>(i) * d, d) = g;
        }
        adam.step(flat, grad_flat);

        ens = ParticleEnsemble::from_flat(flat, k, d);
        check_guard(ens.particles, cfg.divergence_guard, iter);
        tail.observe(iter, flat);

        IterationStats st;
        st.residual_rms = residual_rms(prob, ens.particles);
        st.prior_loss = resid_acc / k;
        st.diversity = diversity_or(ens.particles, 0.0);
        rec.iterations.push_back(st);
    }

    rec.final_particles = ParticleEnsemble::from_flat(flat, k, d);
    if (cfg.tail_fraction > 0.0) rec.tail_mean = ParticleEnsemble::from_flat(tail.mean(), k, d);
    rec.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return rec;
}

// Guidance contribution to the reverse-SDE score at (x, t).
Vector dps_guidance(const BaselineConfig& cfg, const LinearGaussianProblem& prob,
                    const ScoreOracle& prior, const VpSchedule& s, const Vector& x, double t) {
    auto [a, sig] = s.alpha_sigma(t);
    const Vector score = prior.score(x, t);
    const Matrix jac = prior.score_jacobian(x, t);
    const Vector x0_hat = (x + sig * sig * score) / a;
    const Matrix j_tweedie =
        (Matrix::Identity(x.size(), x.size()) + sig * sig * jac) / a;
    const Vector resid = prob.y() - prob.op().apply(x0_hat);
    const Vector pull = j_tweedie.transpose() * prob.op().apply_adjoint(resid);
    if (cfg.guidance == DpsGuidance::ResidualNormalized)
        return (2.0 * cfg.zeta / std::max(resid.norm(), 1e-12)) * pull;
    return cfg.zeta / (prob.sigma_y() * prob.sigma_y()) * pull;
}

} // namespace

RunRecord run_reddiff(const BaselineConfig& cfg, const LinearGaussianProblem& prob,
                      const ScoreOracle& prior, const VpSchedule& s) {
    return run_particle_descent(cfg, prob, prior, s, /*repulsive=*/false);
}

RunRecord run_rlsd(const BaselineConfig& cfg, const LinearGaussianProblem& prob,
                   const ScoreOracle& prior, const VpSchedule& s) {
    require(cfg.num_particles >= 2, "run_rlsd: needs K >= 2 particles");
    return run_particle_descent(cfg, prob, prior, s, /*repulsive=*/true);
}

std::vector<Vector> run_dps(const BaselineConfig& cfg, const LinearGaussianProblem& prob,
                            const ScoreOracle& prior, const VpSchedule& s) {
    cfg.validate();
    if (cfg.zeta > 0.0 && !prior.has_jacobian())
        throw CapabilityError("run_dps: guided sampling needs a score Jacobian");
    Rng rng(cfg.seed);
    const int d = prior.dim();
    const double dt = (s.t_max - s.t_min) / cfg.dps_steps;

    std::vector<Vector> samples;
    samples.reserve(cfg.dps_samples);
    for (int n = 0; n < cfg.dps_samples; ++n) {
        Vector x = rng.normal_vector(d);
        for (int i = 0; i < cfg.dps_steps; ++i) {
            const double t = s.t_max - i * dt;
            const double beta = s.beta(t);
            Vector guided = prior.score(x, t);
            if (cfg.zeta > 0.0) guided += dps_guidance(cfg, prob, prior, s, x, t);
            const Vector drift = -0.5 * beta * x - beta * guided;
            x = x - dt * drift + std::sqrt(beta * dt) * rng.normal_vector(d);
            if (!(x.norm() <= cfg.divergence_guard))
                throw DivergenceError("run_dps: sample diverged", i, x.norm());
        }
        samples.push_back(std::move(x));
    }
    return samples;
}

RunRecord run_ikl(const BaselineConfig& cfg, const LinearGaussianProblem& prob,
                  const ScoreOracle& prior, const VpSchedule& s) {
    cfg.validate();
    const auto t_start = std::chrono::steady_clock::now();
    Rng rng(cfg.seed);
    const int d = prob.op().input_dim();
    const int k = cfg.num_particles;
    const double lambda_eff = cfg.lambda / (2.0 * prob.sigma_y() * prob.sigma_y());

    ParticleEnsemble ens = init_particles_from_measurement(prob, k, cfg.init_jitter, rng);
    ParticleMarginalScore aux(ens.particles, s);
    Vector flat = ens.flatten();
    AdamVec adam({cfg.lr});
    TailAverager tail(cfg.iterations, cfg.tail_fraction, flat.size());

    RunRecord rec;
    rec.config_summary = summarize(cfg);
    rec.seed = cfg.seed;
    rec.iterations.reserve(cfg.iterations);

    for (long iter = 0; iter < cfg.iterations; ++iter) {
        ens = ParticleEnsemble::from_flat(flat, k, d);
        aux.set_particles(ens.particles);
        const auto draw_sets = make_weighted_draw_sets(cfg, s, k, d, rng);

        Vector grad_flat(flat.size());
        double resid_acc = 0.0;
        for (int i = 0; i < k; ++i) {
            Vector prior_term = Vector::Zero(d);
            for (const auto& wd : draw_sets[i]) {
                auto [a_t, sig] = s.alpha_sigma(wd.draw.t);
                const Vector x_t = s.perturb(ens.particles[i], wd.draw.t, wd.draw.eps);
                const Vector u = aux.score(x_t, wd.draw.t) - prior.score(x_t, wd.draw.t);
                resid_acc += u.squaredNorm() / draw_sets[i].size();
                prior_term += wd.integral_weight * cfg.omega.value(wd.draw.t) * a_t * u;
            }
            grad_flat.segment(static_cast<long>(i) * d, d) =
                prior_term + lambda_eff * data_fidelity_grad(prob, ens.particles[i]);
        }
        adam.step(flat, grad_flat);

        ens = ParticleEnsemble::from_flat(flat, k, d);
        check_guard(ens.particles, cfg.divergence_guard, iter);
        tail.observe(iter, flat);

        IterationStats st;
        st.residual_rms = residual_rms(prob, ens.particles);
        st.prior_loss = resid_acc / k;
        st.diversity = diversity_or(ens.particles, 0.0);
        rec.iterations.push_back(st);
    }

    rec.final_particles = ParticleEnsemble::from_flat(flat, k, d);
    if (cfg.tail_fraction > 0.0) rec.tail_mean = ParticleEnsemble::from_flat(tail.mean(), k, d);
    rec.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return rec;
}

AmortizedResult run_ikl_amortized(const BaselineConfig& cfg,
                                  const std::vector<LinearGaussianProblem>& dataset,
                                  const ScoreOracle& prior, const VpSchedule& s) {
    cfg.validate();
    require(!dataset.empty(), "run_ikl_amortized: dataset must be nonempty");
    const int m = dataset[0].op().output_dim();
    const int d = prior.dim();
    for (const auto& prob : dataset)
        require(prob.op().to_dense() == dataset[0].op().to_dense(),
                "run_ikl_amortized: dataset must share one operator");

    const auto t_start = std::chrono::steady_clock::now();
    Rng rng(cfg.seed);
    const double range = s.time_range();
    const double obs_std = std::sqrt(cfg.obs_noise);

    std::vector<int> widths;
    widths.push_back(m);
    widths.insert(widths.end(), cfg.generator_hidden.begin(), cfg.generator_hidden.end());
    widths.push_back(d);
    FeedForwardNet generator = FeedForwardNet::init(widths, rng);
    AdamState gen_adam({cfg.lr});

    RunRecord rec;
    rec.config_summary = summarize(cfg);
    rec.seed = cfg.seed;
    rec.iterations.reserve(cfg.iterations);

    const int batch = std::min<int>(cfg.batch_size, static_cast<int>(dataset.size()));
    std::vector<Vector> inputs(batch), x0(batch);
    std::vector<const LinearGaussianProblem*> probs(batch);

    for (long iter = 0; iter < cfg.iterations; ++iter) {
        for (int b = 0; b < batch; ++b) {
            const int idx = static_cast<int>(rng.uniform(0.0, 1.0) * dataset.size());
            probs[b] = &dataset[std::min<int>(idx, static_cast<int>(dataset.size()) - 1)];
            inputs[b] = probs[b]->y() + obs_std * rng.normal_vector(m);
            x0[b] = generator.forward(inputs[b]);
        }
        check_guard(x0, cfg.divergence_guard, iter);

        NetGrads total = NetGrads::zeros_like(generator);
        double resid_sq = 0.0;
        double prior_acc = 0.0;
        const int n_draws = std::max(1, cfg.draws_per_particle);
        for (int b = 0; b < batch; ++b) {
            const auto draws = integration_draws(s, d, n_draws, cfg.log_time_sampling, rng);
            Vector prior_term = Vector::Zero(d);
            for (const auto& wd : draws) {
                auto [a_t, sig] = s.alpha_sigma(wd.draw.t);
                const Vector x_t = s.perturb(x0[b], wd.draw.t, wd.draw.eps);
                // per-sample variational score of the deterministic generator:
                // the conditional (single-particle) score
                const Vector u =
                    s.conditional_score(x_t, x0[b], wd.draw.t) - prior.score(x_t, wd.draw.t);
                prior_acc += u.squaredNorm() / n_draws;
                prior_term += wd.integral_weight * cfg.omega.value(wd.draw.t) * a_t * u;
            }
            const double lambda_eff =
                cfg.lambda / (2.0 * probs[b]->sigma_y() * probs[b]->sigma_y());
            Vector upstream =
                prior_term + lambda_eff * data_fidelity_grad(*probs[b], x0[b]);
            NetGrads g = net_gradients(generator, inputs[b], upstream);
            g.scale(1.0 / batch);
            total.accumulate(g);
            resid_sq += (probs[b]->y() - probs[b]->op().apply(x0[b])).squaredNorm();
        }
        gen_adam.step(generator, total);

        IterationStats st;
        st.residual_rms = std::sqrt(resid_sq / batch);
        st.prior_loss = prior_acc / batch;
        st.diversity = diversity_or(x0, 0.0);
        rec.iterations.push_back(st);
    }

    rec.final_particles.particles = x0;
    rec.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return {std::move(generator), std::move(rec)};
}

} // namespace ppmlab
