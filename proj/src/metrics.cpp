#include "ppmlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ppmlab {

double diversity(const std::vector<Vector>& samples) {
    const int n = static_cast<int>(samples.size());
    require(n >= 2, "diversity: needs at least two samples");
    std::vector<double> norms(n);
    for (int i = 0; i < n; ++i) {
        norms[i] = samples[i].norm();
        require(norms[i] > 0.0, "diversity: zero-norm sample");
    }
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            acc += samples[i].dot(samples[j]) / (norms[i] * norms[j]);
    return 1.0 - 2.0 * acc / (static_cast<double>(n) * (n - 1));
}

double diversity_multi(const std::vector<std::vector<Vector>>& sample_sets) {
    require(!sample_sets.empty(), "diversity_multi: no sample sets");
    double acc = 0.0;
    for (const auto& s : sample_sets) acc += diversity(s);
    return acc / static_cast<double>(sample_sets.size());
}

double diversity_or(const std::vector<Vector>& samples, double fallback) {
    if (samples.size() < 2) return fallback;
    for (const auto& s : samples)
        if (!(s.norm() > 0.0)) return fallback;
    return diversity(samples);
}

double diversity_positive_offset(const std::vector<Vector>& samples) {
    require(!samples.empty(), "diversity_positive_offset: no samples");
    const int d = static_cast<int>(samples[0].size());
    Vector lo = samples[0];
    for (const auto& s : samples) lo = lo.cwiseMin(s);
    std::vector<Vector> shifted;
    shifted.reserve(samples.size());
    for (const auto& s : samples) shifted.push_back(s - lo + Vector::Ones(d));
    return diversity(shifted);
}

ModeCoverage mode_coverage(const std::vector<Vector>& particles, const GaussianMixture& posterior,
                           double radius_multiplier) {
    require(posterior.components() >= 1, "mode_coverage: posterior has no components");
    const int m = posterior.components();
    std::vector<Eigen::LLT<Matrix>> llts;
    llts.reserve(m);
    for (int i = 0; i < m; ++i) llts.emplace_back(posterior.cov(i));

    std::vector<long> counts(m, 0);
    for (const auto& p : particles) {
        int best = -1;
        double best_dist = radius_multiplier;
        for (int i = 0; i < m; ++i) {
            Vector r = p - posterior.mean(i);
            double maha = std::sqrt(r.dot(llts[i].solve(r)));
            if (maha <= best_dist) {
                best_dist = maha;
                best = i;
            }
        }
        if (best >= 0) ++counts[best];
    }

    ModeCoverage out;
    out.assignment_fractions.resize(m);
    int covered = 0;
    for (int i = 0; i < m; ++i) {
        out.assignment_fractions[i] =
            static_cast<double>(counts[i]) / static_cast<double>(particles.size());
        if (counts[i] > 0) ++covered;
    }
    out.coverage = static_cast<double>(covered) / static_cast<double>(m);
    return out;
}

namespace {

double mean_cross_distance(const std::vector<Vector>& a, const std::vector<Vector>& b) {
    double acc = 0.0;
    for (const auto& x : a)
        for (const auto& y : b) acc += (x - y).norm();
    return acc / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

} // namespace

double energy_distance(const std::vector<Vector>& a, const std::vector<Vector>& b) {
    require(!a.empty() && !b.empty(), "energy_distance: empty sample set");
    return 2.0 * mean_cross_distance(a, b) - mean_cross_distance(a, a) -
           mean_cross_distance(b, b);
}

double energy_distance_pvalue(const std::vector<Vector>& a, const std::vector<Vector>& b,
                              int permutations, Rng& rng) {
    const double observed = energy_distance(a, b);
    std::vector<Vector> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    const std::size_t na = a.size();
    int at_least = 0;
    for (int p = 0; p < permutations; ++p) {
        std::shuffle(pooled.begin(), pooled.end(), rng.engine());
        std::vector<Vector> pa(pooled.begin(), pooled.begin() + na);
        std::vector<Vector> pb(pooled.begin() + na, pooled.end());
        if (energy_distance(pa, pb) >= observed) ++at_least;
    }
    return (1.0 + at_least) / (1.0 + permutations);
}

double gaussian_kl(const Gaussian& q, const Gaussian& p) {
    require(q.dim() == p.dim(), "gaussian_kl: dimension mismatch");
    const int d = q.dim();
    Eigen::LLT<Matrix> lp(p.cov);
    Eigen::LLT<Matrix> lq(q.cov);
    require(lp.info() == Eigen::Success && lq.info() == Eigen::Success,
            "gaussian_kl: singular covariance");
    double log_det_p = 0.0, log_det_q = 0.0;
    for (int k = 0; k < d; ++k) {
        log_det_p += 2.0 * std::log(lp.matrixL()(k, k));
        log_det_q += 2.0 * std::log(lq.matrixL()(k, k));
    }
    const double trace = lp.solve(q.cov).trace();
    Vector dm = p.mean - q.mean;
    const double maha = dm.dot(lp.solve(dm));
    return 0.5 * (trace + maha - d + log_det_p - log_det_q);
}

double residual_rms(const LinearGaussianProblem& prob, const std::vector<Vector>& particles) {
    require(!particles.empty(), "residual_rms: no particles");
    double acc = 0.0;
    for (const auto& p : particles) acc += (prob.y() - prob.op().apply(p)).squaredNorm();
    return std::sqrt(acc / static_cast<double>(particles.size()));
}

Gaussian moment_fit(const std::vector<Vector>& samples) {
    require(!samples.empty(), "moment_fit: no samples");
    const int d = static_cast<int>(samples[0].size());
    Vector mean = Vector::Zero(d);
    for (const auto& s : samples) mean += s;
    mean /= static_cast<double>(samples.size());
    Matrix cov = Matrix::Zero(d, d);
    for (const auto& s : samples) {
        Vector r = s - mean;
        cov += r * r.transpose();
    }
    cov /= static_cast<double>(samples.size());
    return {mean, cov};
}

EvalSummary evaluate_samples(const std::vector<Vector>& samples,
                             const LinearGaussianProblem& prob,
                             const GaussianMixture& posterior,
                             const std::vector<Vector>& posterior_samples,
                             double radius_multiplier) {
    EvalSummary out;
    out.diversity = diversity_or(samples, 0.0);
    out.diversity_offset = samples.size() >= 2 ? diversity_positive_offset(samples) : 0.0;
    out.residual_rms = residual_rms(prob, samples);
    ModeCoverage mc = mode_coverage(samples, posterior, radius_multiplier);
    out.mode_coverage = mc.coverage;
    out.assignment_fractions = mc.assignment_fractions;
    if (!posterior_samples.empty())
        out.energy_distance = energy_distance(samples, posterior_samples);
    if (posterior.components() == 1 && samples.size() > static_cast<std::size_t>(posterior.dim()))
        out.gaussian_kl = gaussian_kl(moment_fit(samples), posterior.component(0));
    return out;
}

} // namespace ppmlab
