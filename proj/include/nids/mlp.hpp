#pragma once

#include "nids/matrix.hpp"
#include "nids/rng.hpp"

#include <span>
#include <vector>

namespace nids {

enum class Activation { ReLU, Sigmoid, Identity };

double sigmoid(double z);

// Binary cross-entropy with p epsilon-clamped into [1e-7, 1-1e-7].
double bce_loss(double y, double p);
double bce_loss_batch(std::span<const double> y, std::span<const double> p);

struct MlpLayer {
    Matrix weights; // out_dim x in_dim
    std::vector<double> bias;
    Activation act = Activation::ReLU;

    std::size_t in_dim() const { return weights.cols(); }
    std::size_t out_dim() const { return weights.rows(); }
};

struct MlpGradients {
    std::vector<Matrix> dw;
    std::vector<std::vector<double>> db;
    std::vector<double> dx; // gradient w.r.t. the network input
};

// Dense feedforward net with explicit weight storage. One implementation
// backs the MLP classifier, the autoencoder, and both GAN networks; they
// differ only in layer dimensions and output activation.
class MlpNetwork {
public:
    struct Trace {
        std::vector<std::vector<double>> inputs; // inputs[l] = activation entering layer l
        std::vector<std::vector<double>> pre;    // pre-activation per layer
    };

    MlpNetwork() = default;

    // Xavier-uniform init; hidden layers get `hidden`, last layer `output`.
    static MlpNetwork create(const std::vector<std::size_t>& dims, Activation hidden,
                             Activation output, RngStream& rng);

    std::size_t input_dim() const { return layers_.front().in_dim(); }
    std::size_t output_dim() const { return layers_.back().out_dim(); }
    std::size_t layer_count() const { return layers_.size(); }
    const std::vector<MlpLayer>& layers() const { return layers_; }
    std::vector<MlpLayer>& layers() { return layers_; }

    std::vector<double> forward(std::span<const double> x) const;
    std::vector<double> forward(std::span<const double> x, Trace& trace) const;

    // Backpropagation from delta_out = dL/d(pre-activation of the final
    // layer). The caller supplies the loss-specific output delta:
    //   BCE + sigmoid output:  p - y
    //   MSE + identity output: (2/n) * (xhat - x)
    MlpGradients backward(const Trace& trace, std::span<const double> delta_out) const;

    // Gradient of BCE(y, sigmoid output) w.r.t. the input. Scalar-output nets.
    std::vector<double> input_gradient(std::span<const double> x, double y) const;

    void apply_update(const MlpGradients& g, double lr);
    void accumulate(MlpGradients& acc, const MlpGradients& g) const;
    MlpGradients zero_gradients() const;

private:
    std::vector<MlpLayer> layers_;
};

} // namespace nids
