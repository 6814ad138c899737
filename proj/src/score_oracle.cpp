#include "ppmlab/score_oracle.hpp"

#include <cmath>

namespace ppmlab {

namespace {

void softmax_inplace(Vector& log_w) {
    double m = log_w.maxCoeff();
    double s = 0.0;
    for (int i = 0; i < log_w.size(); ++i) {
        log_w[i] = std::exp(log_w[i] - m);
        s += log_w[i];
    }
    log_w /= s;
}

} // namespace

AnalyticMixtureScore::AnalyticMixtureScore(GaussianMixture mixture, VpSchedule schedule)
    : mixture_(std::move(mixture)), schedule_(schedule) {}

Vector AnalyticMixtureScore::score(const Vector& x, double t) const {
    return mixture_score(mixture_, schedule_, x, t);
}

Matrix AnalyticMixtureScore::jacobian_impl(const Vector& x, double t) const {
    return mixture_score_jacobian(mixture_, schedule_, x, t);
}

Vector mixture_score(const GaussianMixture& g, const VpSchedule& s, const Vector& x, double t) {
    GaussianMixture gt = g.diffused(s, t);
    Vector resp = gt.component_log_joint(x);
    softmax_inplace(resp);
    Vector out = Vector::Zero(g.dim());
    for (int i = 0; i < gt.components(); ++i) {
        Eigen::LLT<Matrix> llt(gt.cov(i));
        out += resp[i] * (-llt.solve(x - gt.mean(i)));
    }
    return out;
}

Matrix mixture_score_jacobian(const GaussianMixture& g, const VpSchedule& s, const Vector& x,
                              double t) {
    // Hessian of log p_t: sum_i r_i (-C_i^{-1} + s_i s_i^T) - s s^T, with
    // responsibilities r_i and per-component scores s_i.
    GaussianMixture gt = g.diffused(s, t);
    const int d = g.dim();
    Vector resp = gt.component_log_joint(x);
    softmax_inplace(resp);
    Matrix hess = Matrix::Zero(d, d);
    Vector total = Vector::Zero(d);
    for (int i = 0; i < gt.components(); ++i) {
        Eigen::LLT<Matrix> llt(gt.cov(i));
        Matrix prec = llt.solve(Matrix::Identity(d, d));
        Vector si = -prec * (x - gt.mean(i));
        hess += resp[i] * (si * si.transpose() - prec);
        total += resp[i] * si;
    }
    hess -= total * total.transpose();
    return 0.5 * (hess + hess.transpose());
}

ParticleMarginalScore::ParticleMarginalScore(std::vector<Vector> particles, VpSchedule schedule)
    : particles_(std::move(particles)), schedule_(schedule) {
    require(!particles_.empty(), "ParticleMarginalScore: needs at least one particle");
}

void ParticleMarginalScore::set_particles(std::vector<Vector> particles) {
    require(!particles.empty(), "ParticleMarginalScore: needs at least one particle");
    particles_ = std::move(particles);
}

void ParticleMarginalScore::responsibilities(const Vector& x, double t, Vector& resp,
                                             std::vector<Vector>& comp_scores) const {
    if (t < schedule_.t_min)
        throw std::domain_error("ParticleMarginalScore: t < t_min");
    auto [a, sig] = schedule_.alpha_sigma(t);
    const double inv_var = 1.0 / (sig * sig);
    const int k = static_cast<int>(particles_.size());
    resp.resize(k);
    comp_scores.assign(k, Vector());
    for (int i = 0; i < k; ++i) {
        Vector r = x - a * particles_[i];
        resp[i] = -0.5 * inv_var * r.squaredNorm();
        comp_scores[i] = -inv_var * r;
    }
    softmax_inplace(resp);
}

Vector ParticleMarginalScore::score(const Vector& x, double t) const {
    Vector resp;
    std::vector<Vector> comp;
    responsibilities(x, t, resp, comp);
    Vector out = Vector::Zero(x.size());
    for (std::size_t i = 0; i < comp.size(); ++i) out += resp[i] * comp[i];
    return out;
}

Matrix ParticleMarginalScore::jacobian_impl(const Vector& x, double t) const {
    Vector resp;
    std::vector<Vector> comp;
    responsibilities(x, t, resp, comp);
    auto [a, sig] = schedule_.alpha_sigma(t);
    const int d = static_cast<int>(x.size());
    Matrix hess = -Matrix::Identity(d, d) / (sig * sig);
    Vector total = Vector::Zero(d);
    for (std::size_t i = 0; i < comp.size(); ++i) {
        hess += resp[i] * comp[i] * comp[i].transpose();
        total += resp[i] * comp[i];
    }
    hess -= total * total.transpose();
    return 0.5 * (hess + hess.transpose());
}

Vector particle_marginal_score(const std::vector<Vector>& particles, const VpSchedule& s,
                               const Vector& x, double t) {
    return ParticleMarginalScore(particles, s).score(x, t);
}

Vector tweedie_denoise(const ScoreOracle& sc, const VpSchedule& s, const Vector& x_t, double t) {
    if (t < s.t_min) throw std::domain_error("tweedie_denoise: t < t_min");
    auto [a, sig] = s.alpha_sigma(t);
    if (!(a > 1e-300)) throw std::domain_error("tweedie_denoise: alpha_t underflow");
    return (x_t + sig * sig * sc.score(x_t, t)) / a;
}

} // namespace ppmlab
