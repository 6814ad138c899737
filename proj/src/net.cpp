#include "ppmlab/net.hpp"

#include <cmath>

namespace ppmlab {

FeedForwardNet FeedForwardNet::init(const std::vector<int>& widths, Rng& rng) {
    require(widths.size() >= 2, "FeedForwardNet: need at least input and output widths");
    FeedForwardNet net;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const int fan_in = widths[l];
        const int fan_out = widths[l + 1];
        require(fan_in > 0 && fan_out > 0, "FeedForwardNet: widths must be positive");
        Matrix w(fan_out, fan_in);
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (int i = 0; i < fan_out; ++i)
            for (int j = 0; j < fan_in; ++j) w(i, j) = scale * rng.normal();
        net.weights.push_back(std::move(w));
        net.biases.push_back(Vector::Zero(fan_out));
    }
    return net;
}

Vector FeedForwardNet::forward(const Vector& input) const {
    require(input.size() == input_dim(), "FeedForwardNet: input dimension mismatch");
    Vector a = input;
    for (int l = 0; l < layers(); ++l) {
        a = weights[l] * a + biases[l];
        if (l + 1 < layers()) a = a.array().tanh();
    }
    return a;
}

long FeedForwardNet::parameter_count() const {
    long n = 0;
    for (int l = 0; l < layers(); ++l) n += weights[l].size() + biases[l].size();
    return n;
}

std::vector<int> FeedForwardNet::widths() const {
    std::vector<int> w;
    w.push_back(input_dim());
    for (const auto& m : weights) w.push_back(static_cast<int>(m.rows()));
    return w;
}

Vector FeedForwardNet::flatten() const {
    Vector flat(parameter_count());
    long at = 0;
    for (int l = 0; l < layers(); ++l) {
        for (int j = 0; j < weights[l].cols(); ++j)
            for (int i = 0; i < weights[l].rows(); ++i) flat[at++] = weights[l](i, j);
        for (int i = 0; i < biases[l].size(); ++i) flat[at++] = biases[l][i];
    }
    return flat;
}

FeedForwardNet FeedForwardNet::from_flat(const std::vector<int>& widths, const Vector& flat) {
    FeedForwardNet net;
    long at = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        Matrix w(widths[l + 1], widths[l]);
        for (int j = 0; j < w.cols(); ++j)
            for (int i = 0; i < w.rows(); ++i) w(i, j) = flat[at++];
        Vector b(widths[l + 1]);
        for (int i = 0; i < b.size(); ++i) b[i] = flat[at++];
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    require(at == flat.size(), "FeedForwardNet: flat parameter size mismatch");
    return net;
}

NetGrads NetGrads::zeros_like(const FeedForwardNet& net) {
    NetGrads g;
    for (int l = 0; l < net.layers(); ++l) {
        g.d_weights.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
        g.d_biases.push_back(Vector::Zero(net.biases[l].size()));
    }
    g.d_input = Vector::Zero(net.input_dim());
    return g;
}

void NetGrads::accumulate(const NetGrads& other) {
    for (std::size_t l = 0; l < d_weights.size(); ++l) {
        d_weights[l] += other.d_weights[l];
        d_biases[l] += other.d_biases[l];
    }
    d_input += other.d_input;
}

void NetGrads::scale(double c) {
    for (std::size_t l = 0; l < d_weights.size(); ++l) {
        d_weights[l] *= c;
        d_biases[l] *= c;
    }
    d_input *= c;
}

NetGrads net_gradients(const FeedForwardNet& net, const Vector& input, const Vector& upstream) {
    require(upstream.size() == net.output_dim(), "net_gradients: upstream dimension mismatch");
    const int n_layers = net.layers();

    // forward, keeping post-activation values per layer
    std::vector<Vector> acts(n_layers + 1);
    acts[0] = input;
    for (int l = 0; l < n_layers; ++l) {
        acts[l + 1] = net.weights[l] * acts[l] + net.biases[l];
        if (l + 1 < n_layers) acts[l + 1] = acts[l + 1].array().tanh();
    }

    NetGrads g = NetGrads::zeros_like(net);
    Vector delta = upstream;
    for (int l = n_layers - 1; l >= 0; --l) {
        g.d_weights[l] = delta * acts[l].transpose();
        g.d_biases[l] = delta;
        Vector back = net.weights[l].transpose() * delta;
        if (l > 0) back = back.array() * (1.0 - acts[l].array().square());
        delta = std::move(back);
    }
    g.d_input = delta;
    return g;
}

Matrix net_input_jacobian(const FeedForwardNet& net, const Vector& input) {
    const int out = net.output_dim();
    Matrix jac(out, net.input_dim());
    for (int i = 0; i < out; ++i) {
        Vector e = Vector::Zero(out);
        e[i] = 1.0;
        jac.row(i) = net_gradients(net, input, e).d_input.transpose();
    }
    return jac;
}

namespace {

// Shared Adam coefficient update on array-like storage.
template <typename Arr, typename GradArr>
void adam_elementwise(Arr&& p, const GradArr& g, Arr&& m, Arr&& v, long step,
                      const AdamParams& h) {
    m = h.beta1 * m + (1.0 - h.beta1) * g;
    v = h.beta2 * v + (1.0 - h.beta2) * g.square();
    const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(step));
    p -= h.lr * (m / c1) / ((v / c2).sqrt() + h.eps);
}

} // namespace

void AdamVec::step(Vector& params, const Vector& grad) {
    require(params.size() == grad.size(), "AdamVec: shape mismatch");
    if (m.size() != params.size()) {
        m = Vector::Zero(params.size());
        v = Vector::Zero(params.size());
    }
    ++step_count;
    adam_elementwise(params.array(), grad.array(), m.array(), v.array(), step_count, hyper);
}

void AdamState::step(FeedForwardNet& net, const NetGrads& grads) {
    if (m_w.size() != net.weights.size()) {
        m_w.clear();
        v_w.clear();
        m_b.clear();
        v_b.clear();
        for (int l = 0; l < net.layers(); ++l) {
            m_w.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
            v_w.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
            m_b.push_back(Vector::Zero(net.biases[l].size()));
            v_b.push_back(Vector::Zero(net.biases[l].size()));
        }
    }
    ++step_count;
    for (int l = 0; l < net.layers(); ++l) {
        adam_elementwise(net.weights[l].array(), grads.d_weights[l].array(), m_w[l].array(),
                         v_w[l].array(), step_count, hyper);
        adam_elementwise(net.biases[l].array(), grads.d_biases[l].array(), m_b[l].array(),
                         v_b[l].array(), step_count, hyper);
    }
}

LearnedScore::LearnedScore(FeedForwardNet net, VpSchedule schedule, AdamParams adam)
    : dim_(net.output_dim()), net_(std::move(net)), schedule_(schedule), adam_(adam) {
    require(net_.input_dim() == dim_ + 3,
            "LearnedScore: net input must be point dim + 3 time features");
}

LearnedScore LearnedScore::make(int dim, const std::vector<int>& hidden,
                                const VpSchedule& schedule, Rng& rng, AdamParams adam) {
    std::vector<int> widths;
    widths.push_back(dim + 3);
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(dim);
    return LearnedScore(FeedForwardNet::init(widths, rng), schedule, adam);
}

Vector LearnedScore::features(const Vector& x, double t) const {
    auto [a, s] = schedule_.alpha_sigma(t);
    Vector f(x.size() + 3);
    f.head(x.size()) = x;
    f[x.size()] = a;
    f[x.size() + 1] = s;
    f[x.size() + 2] = t;
    return f;
}

Vector LearnedScore::score(const Vector& x, double t) const {
    if (t < schedule_.t_min) throw std::domain_error("LearnedScore: t < t_min");
    const double s = schedule_.sigma(t);
    return -net_.forward(features(x, t)) / s;
}

Matrix LearnedScore::jacobian_impl(const Vector& x, double t) const {
    if (t < schedule_.t_min) throw std::domain_error("LearnedScore: t < t_min");
    const double s = schedule_.sigma(t);
    Matrix jac = net_input_jacobian(net_, features(x, t));
    return -jac.leftCols(dim_) / s;
}

double LearnedScore::dsm_train_step(const std::vector<Vector>& batch_x0, Rng& rng) {
    std::vector<ScoreDraw> draws;
    draws.reserve(batch_x0.size());
    for (std::size_t i = 0; i < batch_x0.size(); ++i)
        draws.push_back({schedule_.sample_time(rng), rng.normal_vector(dim_)});
    return dsm_train_step_with_draws(batch_x0, draws);
}

double LearnedScore::dsm_train_step_with_draws(const std::vector<Vector>& batch_x0,
                                               const std::vector<ScoreDraw>& draws) {
    require(!batch_x0.empty(), "dsm_train_step: empty batch");
    require(batch_x0.size() == draws.size(), "dsm_train_step: batch/draw count mismatch");
    const double inv_b = 1.0 / static_cast<double>(batch_x0.size());
    NetGrads total = NetGrads::zeros_like(net_);
    double loss = 0.0;
    for (std::size_t i = 0; i < batch_x0.size(); ++i) {
        const Vector x_t = schedule_.perturb(batch_x0[i], draws[i].t, draws[i].eps);
        const Vector feat = features(x_t, draws[i].t);
        const Vector pred = net_.forward(feat);
        const Vector resid = pred - draws[i].eps;
        loss += resid.squaredNorm() * inv_b;
        total.accumulate(net_gradients(net_, feat, 2.0 * inv_b * resid));
    }
    adam_.step(net_, total);
    return loss;
}

void pretrain_on_samples(LearnedScore& score, const GaussianMixture& sampler, int steps,
                         int batch, Rng& rng) {
    std::vector<Vector> x0(batch);
    for (int s = 0; s < steps; ++s) {
        for (int b = 0; b < batch; ++b) x0[b] = sampler.sample(rng);
        score.dsm_train_step(x0, rng);
    }
}

} // namespace ppmlab
