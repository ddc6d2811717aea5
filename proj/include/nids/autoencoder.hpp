#pragma once

#include "nids/dataio.hpp"
#include "nids/mlp.hpp"

#include <string>
#include <vector>

namespace nids {

// Benign-trained reconstruction network: encoder d -> 64 -> 32, symmetric
// decoder back to d. threshold is the calibrated reconstruction-error gate
// (0 until calibration).
struct Autoencoder {
    MlpNetwork net;
    double threshold = 0.0;
    std::vector<double> loss_history;

    std::size_t dim() const { return net.input_dim(); }
};

struct AutoencoderConfig {
    std::size_t bottleneck_outer = 64;
    std::size_t bottleneck_inner = 32;
    std::size_t epochs = 30;
    std::size_t batch = 64;
    double learning_rate = 1e-3;
};

// Trains on benign rows only; throws if a malicious row is present.
Autoencoder train_autoencoder(const LabeledDataset& benign, const AutoencoderConfig& cfg,
                              RngStream& rng);

// Mean squared reconstruction error over features.
double reconstruction_error(const Autoencoder& ae, std::span<const double> x);

std::vector<double> reconstruction_errors(const Autoencoder& ae, const Matrix& X);

void save_autoencoder(const Autoencoder& ae, const std::string& path);
Autoencoder load_autoencoder(const std::string& path);

} // namespace nids
