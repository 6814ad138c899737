#pragma once

#include "ppmlab/score_oracle.hpp"

#include <vector>

namespace ppmlab {

/// Dense tanh network with identity output layer. Small enough that every
/// gradient is finite-difference checkable, expressive enough for the 2D
/// mixtures it has to fit.
struct FeedForwardNet {
    std::vector<Matrix> weights; // weights[l] is (out x in)
    std::vector<Vector> biases;

    static FeedForwardNet init(const std::vector<int>& widths, Rng& rng);

    Vector forward(const Vector& input) const;

    int input_dim() const { return static_cast<int>(weights.front().cols()); }
    int output_dim() const { return static_cast<int>(weights.back().rows()); }
    int layers() const { return static_cast<int>(weights.size()); }
    long parameter_count() const;

    std::vector<int> widths() const;
    Vector flatten() const;
    static FeedForwardNet from_flat(const std::vector<int>& widths, const Vector& flat);
};

struct NetGrads {
    std::vector<Matrix> d_weights;
    std::vector<Vector> d_biases;
    Vector d_input;

    static NetGrads zeros_like(const FeedForwardNet& net);
    void accumulate(const NetGrads& other);
    void scale(double c);
};

/// Exact reverse-mode gradients of <upstream, net(input)> with respect to all
/// parameters and the input.
NetGrads net_gradients(const FeedForwardNet& net, const Vector& input, const Vector& upstream);

/// Jacobian d net(input) / d input, one backward pass per output row.
Matrix net_input_jacobian(const FeedForwardNet& net, const Vector& input);

struct AdamParams {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam over a flat parameter vector.
struct AdamVec {
    AdamParams hyper;
    long step_count = 0;
    Vector m, v;

    explicit AdamVec(AdamParams hyper = {}) : hyper(hyper) {}
    void step(Vector& params, const Vector& grad);
};

/// Adam with moment buffers shaped like the network parameters.
struct AdamState {
    AdamParams hyper;
    long step_count = 0;
    std::vector<Matrix> m_w, v_w;
    std::vector<Vector> m_b, v_b;

    explicit AdamState(AdamParams hyper = {}) : hyper(hyper) {}
    void step(FeedForwardNet& net, const NetGrads& grads);
};

/// Network-backed score oracle in the epsilon-prediction convention:
/// the net maps [x; alpha_t; sigma_t; t] to a noise estimate and
/// score(x, t) = -net(...) / sigma_t. Training a unit-weight epsilon loss is
/// identical to the sigma_t^2-weighted score-matching loss.
class LearnedScore final : public ScoreOracle {
public:
    LearnedScore(FeedForwardNet net, VpSchedule schedule, AdamParams adam = {});

    static LearnedScore make(int dim, const std::vector<int>& hidden, const VpSchedule& schedule,
                             Rng& rng, AdamParams adam = {});

    int dim() const override { return dim_; }
    Vector score(const Vector& x, double t) const override;
    bool has_jacobian() const override { return true; }

    /// One denoising-score-matching step on a batch of clean points: draws
    /// (t, eps) per element, fits the conditional score, applies one Adam
    /// update and returns the pre-step loss.
    double dsm_train_step(const std::vector<Vector>& batch_x0, Rng& rng);

    /// Same step with the (t, eps) draws supplied by the caller, so the
    /// training loop can reuse one set of draws per iteration.
    double dsm_train_step_with_draws(const std::vector<Vector>& batch_x0,
                                     const std::vector<ScoreDraw>& draws);

    const FeedForwardNet& net() const { return net_; }
    FeedForwardNet& net() { return net_; }

    Vector features(const Vector& x, double t) const;

protected:
    Matrix jacobian_impl(const Vector& x, double t) const override;

private:
    int dim_;
    FeedForwardNet net_;
    VpSchedule schedule_;
    AdamState adam_;
};

/// DSM-pretrain a learned score on prior samples; stands in for initializing
/// the auxiliary from a pretrained prior network.
void pretrain_on_samples(LearnedScore& score, const GaussianMixture& sampler, int steps,
                         int batch, Rng& rng);

} // namespace ppmlab
