#include "nids/autoencoder.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace nids {

Autoencoder train_autoencoder(const LabeledDataset& benign, const AutoencoderConfig& cfg,
                              RngStream& rng) {
    if (benign.size() == 0) throw std::invalid_argument("train_autoencoder: empty dataset");
    for (int y : benign.labels) {
        if (y != 0) {
            throw std::invalid_argument("train_autoencoder: malicious row in benign-only input");
        }
    }
    const std::size_t d = benign.dim();
    Autoencoder ae;
    ae.net = MlpNetwork::create({d, cfg.bottleneck_outer, cfg.bottleneck_inner,
                                 cfg.bottleneck_outer, d},
                                Activation::ReLU, Activation::Identity, rng);

    std::vector<std::size_t> order(benign.size());
    std::iota(order.begin(), order.end(), 0);
    MlpNetwork::Trace trace;
    std::vector<double> delta(d);

    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
            const std::size_t end = std::min(order.size(), start + cfg.batch);
            MlpGradients acc = ae.net.zero_gradients();
            for (std::size_t k = start; k < end; ++k) {
                const auto x = benign.features.row(order[k]);
                const auto xhat = ae.net.forward(x, trace);
                double loss = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    const double diff = xhat[j] - x[j];
                    loss += diff * diff;
                    delta[j] = 2.0 * diff / static_cast<double>(d);
                }
                epoch_loss += loss / static_cast<double>(d);
                ae.net.accumulate(acc, ae.net.backward(trace, delta));
            }
            const double scale = 1.0 / static_cast<double>(end - start);
            for (auto& m : acc.dw)
                for (double& v : m.values()) v *= scale;
            for (auto& b : acc.db)
                for (double& v : b) v *= scale;
            ae.net.apply_update(acc, cfg.learning_rate);
        }
        ae.loss_history.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    return ae;
}

double reconstruction_error(const Autoencoder& ae, std::span<const double> x) {
    if (x.size() != ae.dim()) {
        throw std::invalid_argument("reconstruction_error: dimension mismatch");
    }
    const auto xhat = ae.net.forward(x);
    double sum = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double diff = x[j] - xhat[j];
        sum += diff * diff;
    }
    return sum / static_cast<double>(x.size());
}

std::vector<double> reconstruction_errors(const Autoencoder& ae, const Matrix& X) {
    std::vector<double> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) out[i] = reconstruction_error(ae, X.row(i));
    return out;
}

void save_autoencoder(const Autoencoder& ae, const std::string& path) {
    nlohmann::json jl = nlohmann::json::array();
    for (const auto& layer : ae.net.layers()) {
        jl.push_back({{"in", layer.in_dim()},
                      {"out", layer.out_dim()},
                      {"act", layer.act == Activation::ReLU ? "relu" : "identity"},
                      {"weights", layer.weights.values()},
                      {"bias", layer.bias}});
    }
    nlohmann::json j = {{"format", "nids-autoencoder"},
                        {"version", 1},
                        {"threshold", ae.threshold},
                        {"layers", jl}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_autoencoder: cannot write " + path);
    out << j.dump() << "\n";
}

Autoencoder load_autoencoder(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_autoencoder: cannot open " + path);
    nlohmann::json j;
    in >> j;
    if (j.value("format", "") != "nids-autoencoder") {
        throw std::runtime_error("load_autoencoder: bad format tag in " + path);
    }
    Autoencoder ae;
    ae.threshold = j.at("threshold").get<double>();
    for (const auto& e : j.at("layers")) {
        MlpLayer layer;
        layer.weights = Matrix(e.at("out").get<std::size_t>(), e.at("in").get<std::size_t>(),
                               e.at("weights").get<std::vector<double>>());
        layer.bias = e.at("bias").get<std::vector<double>>();
        layer.act = e.at("act").get<std::string>() == "relu" ? Activation::ReLU
                                                             : Activation::Identity;
        ae.net.layers().push_back(std::move(layer));
    }
    return ae;
}

} // namespace nids
