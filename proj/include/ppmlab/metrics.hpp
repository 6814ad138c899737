#pragma once

#include "ppmlab/problem.hpp"

#include <optional>
#include <vector>

namespace ppmlab {

/// Quantitative evaluation of a sample/particle set against ground truth.
struct EvalSummary {
    double diversity = 0.0;        // raw pairwise-cosine diversity
    double diversity_offset = 0.0; // same, after shifting into the positive orthant
    double residual_rms = 0.0;
    double mode_coverage = 0.0;
    std::vector<double> assignment_fractions;
    double energy_distance = 0.0;
    std::optional<double> gaussian_kl; // conjugate (single-component) cases only
};

/// 1 - mean pairwise cosine similarity. Requires N >= 2 and nonzero samples.
double diversity(const std::vector<Vector>& samples);

/// Average of per-observation diversity over several sample sets.
double diversity_multi(const std::vector<std::vector<Vector>>& sample_sets);

/// diversity() with a fallback instead of throwing (solver iteration logs).
double diversity_or(const std::vector<Vector>& samples, double fallback);

/// Samples shifted so every coordinate is >= 1 before computing diversity;
/// avoids the sign cancellation of raw cosine on zero-mean 2D toys.
double diversity_positive_offset(const std::vector<Vector>& samples);

struct ModeCoverage {
    double coverage = 0.0;
    std::vector<double> assignment_fractions;
};

/// A particle is assigned to its nearest posterior component if the
/// Mahalanobis distance is within radius_multiplier.
ModeCoverage mode_coverage(const std::vector<Vector>& particles, const GaussianMixture& posterior,
                           double radius_multiplier = 3.0);

/// V-statistic energy distance 2 E|A-B| - E|A-A'| - E|B-B'|.
double energy_distance(const std::vector<Vector>& a, const std::vector<Vector>& b);

/// Permutation p-value for the two-sample energy test (null: same law).
double energy_distance_pvalue(const std::vector<Vector>& a, const std::vector<Vector>& b,
                              int permutations, Rng& rng);

double gaussian_kl(const Gaussian& q, const Gaussian& p);

double residual_rms(const LinearGaussianProblem& prob, const std::vector<Vector>& particles);

/// Sample mean and covariance (denominator N).
Gaussian moment_fit(const std::vector<Vector>& samples);

EvalSummary evaluate_samples(const std::vector<Vector>& samples,
                             const LinearGaussianProblem& prob,
                             const GaussianMixture& posterior,
                             const std::vector<Vector>& posterior_samples,
                             double radius_multiplier = 3.0);

} // namespace ppmlab
