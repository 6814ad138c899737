#include "ppmlab/ppm.hpp"

#include "ppmlab/metrics.hpp"
#include "solver_util.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace ppmlab {

void ParticleEnsemble::validate() const {
    require(!particles.empty(), "ParticleEnsemble: K must be >= 1");
    for (const auto& p : particles)
        require(p.allFinite(), "ParticleEnsemble: non-finite particle entry");
}

Vector ParticleEnsemble::flatten() const {
    const int k = size(), d = dim();
    Vector flat(static_cast<long>(k) * d);
    for (int i = 0; i < k; ++i) flat.segment(static_cast<long>(i) * d, d) = particles[i];
    return flat;
}

ParticleEnsemble ParticleEnsemble::from_flat(const Vector& flat, int k, int d) {
    require(flat.size() == static_cast<long>(k) * d, "ParticleEnsemble: flat size mismatch");
    ParticleEnsemble e;
    e.particles.resize(k);
    for (int i = 0; i < k; ++i) e.particles[i] = flat.segment(static_cast<long>(i) * d, d);
    return e;
}

ParticleEnsemble init_particles_from_measurement(const LinearGaussianProblem& prob, int k,
                                                 double jitter, Rng& rng) {
    require(k >= 1, "init_particles_from_measurement: K must be >= 1");
    const Matrix f = prob.op().to_dense();
    Vector base = f.completeOrthogonalDecomposition().solve(prob.y());
    ParticleEnsemble e;
    e.particles.reserve(k);
    for (int i = 0; i < k; ++i)
        e.particles.push_back(base + jitter * rng.normal_vector(prob.op().input_dim()));
    return e;
}

void PpmConfig::validate() const {
    require(lambda >= 0.0, "PpmConfig: lambda must be >= 0");
    require(iterations >= 1, "PpmConfig: iterations must be >= 1");
    require(num_particles >= 1, "PpmConfig: K must be >= 1");
    require(lr > 0.0, "PpmConfig: lr must be > 0");
    require(obs_noise >= 0.0, "PpmConfig: obs_noise must be >= 0");
    require(tail_fraction >= 0.0 && tail_fraction <= 1.0,
            "PpmConfig: tail_fraction must lie in [0, 1]");
}

double ppm_surrogate(const Vector& x0, const ScoreDraw& draw, const ScoreOracle& aux,
                     const ScoreOracle& prior, const VpSchedule& s, const MetricFn& metric,
                     Vector* grad_x0) {
    const double t = draw.t;
    auto [a_t, sig] = s.alpha_sigma(t);
    require(sig > 0.0, "ppm_surrogate: sigma_t must be positive");
    const double inv_var = 1.0 / (sig * sig);
    const Vector x_t = s.perturb(x0, t, draw.eps);

    const Vector a = aux.score(x_t, t);
    const Vector p = prior.score(x_t, t);
    const Vector c = s.conditional_score(x_t, x0, t);
    const Vector u = a - p;
    const Vector r = a - c;

    const Vector du = metric.grad(u);
    const double value = -du.dot(r) + metric.value(u);
    if (grad_x0 == nullptr) return value;

    if (!aux.has_jacobian() || !prior.has_jacobian())
        throw CapabilityError("ppm_surrogate: score oracle lacks Jacobian capability");
    const Matrix ja = aux.score_jacobian(x_t, t);
    const Matrix jp = prior.score_jacobian(x_t, t);
    const Matrix ju = ja - jp;
    const int d = static_cast<int>(x0.size());
    // d cond_score / d x_t = -I / sigma^2; d cond_score / d x0 = alpha/sigma^2 I
    const Matrix jr = ja + inv_var * Matrix::Identity(d, d);

    Vector grad_xt = -ju.transpose() * (metric.hessian(u) * r) - jr.transpose() * du +
                     ju.transpose() * du;
    *grad_x0 = a_t * grad_xt + (a_t * inv_var) * du;
    return value;
}

PriorGradResult ppm_prior_grad(const std::vector<Vector>& x0_batch, const ScoreOracle& aux,
                               const ScoreOracle& prior, const VpSchedule& s,
                               const std::vector<ScoreDraw>& draws, const MetricFn& metric,
                               const TimeWeight& w, bool include_diffusion_factor) {
    require(x0_batch.size() == draws.size(), "ppm_prior_grad: batch/draw count mismatch");
    PriorGradResult out;
    out.grads.resize(x0_batch.size());
    out.values.resize(x0_batch.size());
    out.mean_weighted_value = 0.0;
    for (std::size_t i = 0; i < x0_batch.size(); ++i) {
        const double t = draws[i].t;
        double weight = w.value(t);
        if (include_diffusion_factor) weight *= 0.5 * s.g2(t);
        Vector g;
        ppm_surrogate(x0_batch[i], draws[i], aux, prior, s, metric, &g);
        out.grads[i] = weight * g;
        // The logged prior-loss estimate is the weighted metric value d(u)
        // itself (the Fisher-integrand), not the surrogate.
        const Vector x_t = s.perturb(x0_batch[i], t, draws[i].eps);
        out.values[i] = weight * metric.value(aux.score(x_t, t) - prior.score(x_t, t));
        out.mean_weighted_value += out.values[i];
    }
    out.mean_weighted_value /= static_cast<double>(x0_batch.size());
    return out;
}

Vector data_fidelity_grad(const LinearGaussianProblem& prob, const Vector& x0) {
    return 2.0 * prob.op().apply_adjoint(prob.op().apply(x0) - prob.y());
}

std::vector<ScoreDraw> stratified_draws(const VpSchedule& s, int dim, int count, Rng& rng) {
    std::vector<ScoreDraw> draws;
    draws.reserve(count);
    if (count == 1) {
        draws.push_back({s.sample_time(rng), rng.normal_vector(dim)});
        return draws;
    }
    const double range = s.time_range();
    for (int j = 0; j < count; ++j) {
        const double t = s.t_min + range * (j + rng.uniform(0.0, 1.0)) / count;
        draws.push_back({t, rng.normal_vector(dim)});
    }
    return draws;
}

std::vector<WeightedDraw> integration_draws(const VpSchedule& s, int dim, int count,
                                            bool log_space, Rng& rng) {
    require(count >= 1, "integration_draws: count must be >= 1");
    std::vector<WeightedDraw> draws;
    draws.reserve(count);
    if (!log_space) {
        const double cell = s.time_range() / count;
        for (int j = 0; j < count; ++j) {
            const double t = s.t_min + cell * (j + rng.uniform(0.0, 1.0));
            draws.push_back({{t, rng.normal_vector(dim)}, cell});
        }
        return draws;
    }
    const double u_lo = std::log(s.t_min);
    const double cell = (std::log(s.t_max) - u_lo) / count;
    for (int j = 0; j < count; ++j) {
        const double t = std::exp(u_lo + cell * (j + rng.uniform(0.0, 1.0)));
        draws.push_back({{t, rng.normal_vector(dim)}, cell * t});
    }
    return draws;
}

namespace {

using detail::TailAverager;
using detail::check_guard;

std::string summarize(const PpmConfig& cfg, const char* mode) {
    std::ostringstream os;
    os << "method=ppm-" << mode << " K=" << cfg.num_particles << " iters=" << cfg.iterations
       << " lr=" << cfg.lr << " lambda=" << cfg.lambda << " aux="
       << (cfg.aux_mode == AuxMode::OracleAnalytic ? "analytic" : "learned")
       << " metric=" << cfg.metric.id << " w=" << cfg.time_weight.id << " seed=" << cfg.seed;
    return os.str();
}

} // namespace

RunRecord run_ppm_vi(const PpmConfig& cfg, const LinearGaussianProblem& prob,
                     const GaussianMixture& prior_mix, const VpSchedule& s) {
    cfg.validate();
    const auto t_start = std::chrono::steady_clock::now();
    Rng rng(cfg.seed);

    const int d = prior_mix.dim();
    const int k = cfg.num_particles;
    const double lambda_eff = cfg.lambda / (2.0 * prob.sigma_y() * prob.sigma_y());

    AnalyticMixtureScore prior_oracle(prior_mix, s);
    ParticleEnsemble ensemble = init_particles_from_measurement(prob, k, cfg.init_jitter, rng);

    ParticleMarginalScore particle_oracle(ensemble.particles, s);
    std::unique_ptr<LearnedScore> learned;
    if (cfg.aux_mode == AuxMode::Learned) {
        learned = std::make_unique<LearnedScore>(
            LearnedScore::make(d, cfg.aux_hidden, s, rng, cfg.aux_adam));
        pretrain_on_samples(*learned, prior_mix, cfg.aux_pretrain_steps, cfg.aux_batch, rng);
    }

    Vector flat = ensemble.flatten();
    AdamVec adam({cfg.lr});
    TailAverager tail(cfg.iterations, cfg.tail_fraction, flat.size());

    RunRecord rec;
    rec.config_summary = summarize(cfg, "vi");
    rec.seed = cfg.seed;
    rec.iterations.reserve(cfg.iterations);

    const int n_draws = std::max(1, cfg.draws_per_particle);
    for (long iter = 0; iter < cfg.iterations; ++iter) {
        ensemble = ParticleEnsemble::from_flat(flat, k, d);

        std::vector<std::vector<WeightedDraw>> draws(k);
        for (int i = 0; i < k; ++i)
            draws[i] = integration_draws(s, d, n_draws, cfg.log_time_sampling, rng);

        const ScoreOracle* aux = nullptr;
        if (cfg.aux_mode == AuxMode::Learned) {
            std::vector<ScoreDraw> first_draws;
            first_draws.reserve(k);
            for (int i = 0; i < k; ++i) first_draws.push_back(draws[i].front().draw);
            learned->dsm_train_step_with_draws(ensemble.particles, first_draws);
            for (int extra = 1; extra < cfg.aux_steps_per_iter; ++extra)
                learned->dsm_train_step(ensemble.particles, rng);
            aux = learned.get();
        } else {
            particle_oracle.set_particles(ensemble.particles);
            aux = &particle_oracle;
        }

        Vector grad_flat(flat.size());
        double prior_value = 0.0;
        for (int i = 0; i < k; ++i) {
            std::vector<Vector> repeated(n_draws, ensemble.particles[i]);
            std::vector<ScoreDraw> plain;
            plain.reserve(n_draws);
            for (const auto& wd : draws[i]) plain.push_back(wd.draw);
            PriorGradResult pg =
                ppm_prior_grad(repeated, *aux, prior_oracle, s, plain, cfg.metric,
                               cfg.time_weight, cfg.include_diffusion_factor);
            Vector integral_grad = Vector::Zero(d);
            for (int j = 0; j < n_draws; ++j) {
                integral_grad += draws[i][j].integral_weight * pg.grads[j];
                prior_value += draws[i][j].integral_weight * pg.values[j];
            }
            grad_flat.segment(static_cast<long>(i) * d, d) =
                integral_grad + lambda_eff * data_fidelity_grad(prob, ensemble.particles[i]);
        }
        prior_value /= static_cast<double>(k);
        adam.step(flat, grad_flat);

        ensemble = ParticleEnsemble::from_flat(flat, k, d);
        check_guard(ensemble.particles, cfg.divergence_guard, iter);
        tail.observe(iter, flat);

        IterationStats st;
        st.residual_rms = residual_rms(prob, ensemble.particles);
        st.prior_loss = prior_value;
        st.diversity = diversity_or(ensemble.particles, 0.0);
        rec.iterations.push_back(st);
    }

    rec.final_particles = ParticleEnsemble::from_flat(flat, k, d);
    if (cfg.tail_fraction > 0.0)
        rec.tail_mean = ParticleEnsemble::from_flat(tail.mean(), k, d);
    rec.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return rec;
}

AmortizedResult run_ppm_amortized(const PpmConfig& cfg,
                                  const std::vector<LinearGaussianProblem>& dataset,
                                  const GaussianMixture& prior_mix, const VpSchedule& s) {
    cfg.validate();
    require(!dataset.empty(), "run_ppm_amortized: dataset must be nonempty");
    const int m = dataset[0].op().output_dim();
    const int d = prior_mix.dim();
    for (const auto& prob : dataset)
        require(prob.op().to_dense() == dataset[0].op().to_dense(),
                "run_ppm_amortized: dataset must share one operator");

    const auto t_start = std::chrono::steady_clock::now();
    Rng rng(cfg.seed);
    const double obs_std = std::sqrt(cfg.obs_noise);

    AnalyticMixtureScore prior_oracle(prior_mix, s);

    std::vector<int> widths;
    widths.push_back(m);
    widths.insert(widths.end(), cfg.generator_hidden.begin(), cfg.generator_hidden.end());
    widths.push_back(d);
    FeedForwardNet generator = FeedForwardNet::init(widths, rng);
    AdamState gen_adam({cfg.lr});

    std::unique_ptr<LearnedScore> learned;
    if (cfg.aux_mode == AuxMode::Learned) {
        learned = std::make_unique<LearnedScore>(
            LearnedScore::make(d, cfg.aux_hidden, s, rng, cfg.aux_adam));
        pretrain_on_samples(*learned, prior_mix, cfg.aux_pretrain_steps, cfg.aux_batch, rng);
    }

    RunRecord rec;
    rec.config_summary = summarize(cfg, "ai");
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

        const int n_draws = std::max(1, cfg.draws_per_particle);
        std::vector<std::vector<WeightedDraw>> draws(batch);
        for (int b = 0; b < batch; ++b)
            draws[b] = integration_draws(s, d, n_draws, cfg.log_time_sampling, rng);

        if (cfg.aux_mode == AuxMode::Learned) {
            std::vector<ScoreDraw> first_draws;
            first_draws.reserve(batch);
            for (int b = 0; b < batch; ++b) first_draws.push_back(draws[b].front().draw);
            learned->dsm_train_step_with_draws(x0, first_draws);
            for (int extra = 1; extra < cfg.aux_steps_per_iter; ++extra)
                learned->dsm_train_step(x0, rng);
        }

        NetGrads total = NetGrads::zeros_like(generator);
        double prior_loss = 0.0;
        double residual_sq = 0.0;
        for (int b = 0; b < batch; ++b) {
            // With a deterministic generator, q(.|y) is a point mass at x0 and
            // its diffused score is the single-particle marginal; the learned
            // auxiliary replaces it when configured.
            std::unique_ptr<ParticleMarginalScore> dirac;
            const ScoreOracle* aux = learned.get();
            if (!aux) {
                dirac = std::make_unique<ParticleMarginalScore>(
                    std::vector<Vector>{x0[b]}, s);
                aux = dirac.get();
            }
            std::vector<Vector> repeated(n_draws, x0[b]);
            std::vector<ScoreDraw> plain;
            plain.reserve(n_draws);
            for (const auto& wd : draws[b]) plain.push_back(wd.draw);
            PriorGradResult pg =
                ppm_prior_grad(repeated, *aux, prior_oracle, s, plain, cfg.metric,
                               cfg.time_weight, cfg.include_diffusion_factor);
            Vector integral_grad = Vector::Zero(d);
            for (int j = 0; j < n_draws; ++j) {
                integral_grad += draws[b][j].integral_weight * pg.grads[j];
                prior_loss += draws[b][j].integral_weight * pg.values[j];
            }

            const double lambda_eff =
                cfg.lambda / (2.0 * probs[b]->sigma_y() * probs[b]->sigma_y());
            Vector upstream =
                integral_grad + lambda_eff * data_fidelity_grad(*probs[b], x0[b]);
            NetGrads g = net_gradients(generator, inputs[b], upstream);
            g.scale(1.0 / batch);
            total.accumulate(g);
            residual_sq += (probs[b]->y() - probs[b]->op().apply(x0[b])).squaredNorm();
        }
        gen_adam.step(generator, total);

        IterationStats st;
        st.residual_rms = std::sqrt(residual_sq / batch);
        st.prior_loss = prior_loss / batch;
        st.diversity = diversity_or(x0, 0.0);
        rec.iterations.push_back(st);
    }

    rec.final_particles.particles = x0;
    rec.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return {std::move(generator), std::move(rec)};
}

} // namespace ppmlab
