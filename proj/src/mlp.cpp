#include "nids/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nids {

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {
constexpr double kProbEps = 1e-7;

double clamp_prob(double p) {
    return std::clamp(p, kProbEps, 1.0 - kProbEps);
}

double activate(double z, Activation a) {
    switch (a) {
        case Activation::ReLU: return z > 0.0 ? z : 0.0;
        case Activation::Sigmoid: return sigmoid(z);
        case Activation::Identity: return z;
    }
    return z;
}

double activate_deriv(double z, Activation a) {
    switch (a) {
        case Activation::ReLU: return z > 0.0 ? 1.0 : 0.0;
        case Activation::Sigmoid: {
            const double s = sigmoid(z);
            return s * (1.0 - s);
        }
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}
} // namespace

double bce_loss(double y, double p) {
    p = clamp_prob(p);
    return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

double bce_loss_batch(std::span<const double> y, std::span<const double> p) {
    if (y.size() != p.size() || y.empty()) {
        throw std::invalid_argument("bce_loss_batch: length mismatch or empty");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) sum += bce_loss(y[i], p[i]);
    return sum / static_cast<double>(y.size());
}

MlpNetwork MlpNetwork::create(const std::vector<std::size_t>& dims, Activation hidden,
                              Activation output, RngStream& rng) {
    if (dims.size() < 2) throw std::invalid_argument("MlpNetwork: need at least 2 dims");
    MlpNetwork net;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        MlpLayer layer;
        layer.weights = Matrix(dims[l + 1], dims[l]);
        layer.bias.assign(dims[l + 1], 0.0);
        layer.act = (l + 2 == dims.size()) ? output : hidden;
        const double limit = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
        for (double& w : layer.weights.values()) w = rng.uniform(-limit, limit);
        net.layers_.push_back(std::move(layer));
    }
    return net;
}

std::vector<double> MlpNetwork::forward(std::span<const double> x) const {
    Trace trace;
    return forward(x, trace);
}

std::vector<double> MlpNetwork::forward(std::span<const double> x, Trace& trace) const {
    if (x.size() != input_dim()) {
        throw std::invalid_argument("MlpNetwork::forward: input dimension mismatch");
    }
    trace.inputs.clear();
    trace.pre.clear();
    std::vector<double> cur(x.begin(), x.end());
    for (const auto& layer : layers_) {
        trace.inputs.push_back(cur);
        std::vector<double> z(layer.out_dim());
        for (std::size_t o = 0; o < layer.out_dim(); ++o) {
            double acc = layer.bias[o];
            const auto w = layer.weights.row(o);
            for (std::size_t i = 0; i < layer.in_dim(); ++i) acc += w[i] * cur[i];
            z[o] = acc;
        }
        trace.pre.push_back(z);
        cur.resize(z.size());
        for (std::size_t o = 0; o < z.size(); ++o) cur[o] = activate(z[o], layer.act);
    }
    return cur;
}

MlpGradients MlpNetwork::backward(const Trace& trace, std::span<const double> delta_out) const {
    MlpGradients g = zero_gradients();
    std::vector<double> delta(delta_out.begin(), delta_out.end());
    for (std::size_t li = layers_.size(); li-- > 0;) {
        const auto& layer = layers_[li];
        const auto& in = trace.inputs[li];
        for (std::size_t o = 0; o < layer.out_dim(); ++o) {
            g.db[li][o] += delta[o];
            auto dw = g.dw[li].row(o);
            for (std::size_t i = 0; i < layer.in_dim(); ++i) dw[i] += delta[o] * in[i];
        }
        std::vector<double> prev(layer.in_dim(), 0.0);
        for (std::size_t o = 0; o < layer.out_dim(); ++o) {
            const auto w = layer.weights.row(o);
            for (std::size_t i = 0; i < layer.in_dim(); ++i) prev[i] += delta[o] * w[i];
        }
        if (li > 0) {
            const auto& pre_prev = trace.pre[li - 1];
            for (std::size_t i = 0; i < prev.size(); ++i) {
                prev[i] *= activate_deriv(pre_prev[i], layers_[li - 1].act);
            }
        }
        delta = std::move(prev);
    }
    g.dx = std::move(delta);
    return g;
}

std::vector<double> MlpNetwork::input_gradient(std::span<const double> x, double y) const {
    if (output_dim() != 1) {
        throw std::invalid_argument("input_gradient: scalar-output network required");
    }
    Trace trace;
    const double p = forward(x, trace)[0];
    // BCE through sigmoid: dL/dz = p - y, with the clamp flattening the loss
    // at saturated probabilities.
    double delta = clamp_prob(p) == p ? p - y : 0.0;
    const std::vector<double> delta_out{delta};
    return backward(trace, delta_out).dx;
}

void MlpNetwork::apply_update(const MlpGradients& g, double lr) {
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        auto& layer = layers_[li];
        for (std::size_t k = 0; k < layer.weights.size(); ++k) {
            layer.weights.values()[k] -= lr * g.dw[li].values()[k];
        }
        for (std::size_t o = 0; o < layer.bias.size(); ++o) {
            layer.bias[o] -= lr * g.db[li][o];
        }
    }
}

void MlpNetwork::accumulate(MlpGradients& acc, const MlpGradients& g) const {
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        for (std::size_t k = 0; k < acc.dw[li].size(); ++k) {
            acc.dw[li].values()[k] += g.dw[li].values()[k];
        }
        for (std::size_t o = 0; o < acc.db[li].size(); ++o) acc.db[li][o] += g.db[li][o];
    }
}

MlpGradients MlpNetwork::zero_gradients() const {
    MlpGradients g;
    for (const auto& layer : layers_) {
        g.dw.emplace_back(layer.out_dim(), layer.in_dim());
        g.db.emplace_back(layer.out_dim(), 0.0);
    }
    return g;
}

} // namespace nids
