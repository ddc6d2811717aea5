#include "nids/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace nids {

namespace {

double sign_of(double v) {
    if (v > 0.0) return 1.0;
    if (v < 0.0) return -1.0;
    return 0.0;
}

void require_all_labels(const LabeledDataset& data, int label, const char* what) {
    for (int y : data.labels) {
        if (y != label) {
            throw std::invalid_argument(std::string(what) + ": mixed labels in input");
        }
    }
}

} // namespace

int majority_vote(int c1, int c2, int c3, int d) {
    for (int v : {c1, c2, c3, d}) {
        if (v != 0 && v != 1) throw std::invalid_argument("majority_vote: votes must be 0/1");
    }
    return (c1 + c2 + c3 + d) >= 2 ? 1 : 0;
}

int VotingEnsemble::vote(std::span<const double> x, int discriminator_label) const {
    return majority_vote(knn->predict(x), lda->predict(x), lr->predict(x), discriminator_label);
}

VotingEnsemble train_voting_ensemble(const LabeledDataset& data, RngStream& rng) {
    VotingEnsemble e;
    RngStream r0 = rng.child(0), r1 = rng.child(1), r2 = rng.child(2);
    e.knn = train_classifier(ClassifierSpec::defaults(Algorithm::KNN), data, r0);
    e.lda = train_classifier(ClassifierSpec::defaults(Algorithm::LDA), data, r1);
    e.lr = train_classifier(ClassifierSpec::defaults(Algorithm::LR), data, r2);
    return e;
}

std::string attack_name(AttackKind k) {
    return k == AttackKind::GAN ? "GAN" : "FGSM";
}

std::vector<bool> mutable_mask_from_schema(const FeatureSchema& schema) {
    std::vector<bool> mask(schema.feature_count(), false);
    for (std::size_t f : schema.mutable_feature_indices()) mask[f] = true;
    return mask;
}

std::vector<double> fgsm_generate(const MlpNetwork& net, std::span<const double> x, int y,
                                  double eps, const std::vector<bool>& mutable_mask,
                                  const FittedPipeline* pipe) {
    if (eps < 0.0) throw std::invalid_argument("fgsm_generate: eps must be non-negative");
    if (x.size() != net.input_dim() || x.size() != mutable_mask.size()) {
        throw std::invalid_argument("fgsm_generate: dimension mismatch");
    }
    const std::vector<double> grad = net.input_gradient(x, y);
    std::vector<double> out(x.begin(), x.end());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (mutable_mask[i]) out[i] += eps * sign_of(grad[i]);
    }
    if (pipe) out = pipe->clip_to_domain(std::move(out));
    return out;
}

AdversarialBatch fgsm_batch(const MlpNetwork& net, const LabeledDataset& malicious, double eps,
                            const std::vector<bool>& mutable_mask, const FittedPipeline* pipe) {
    require_all_labels(malicious, 1, "fgsm_batch");
    AdversarialBatch batch;
    batch.provenance = AttackKind::FGSM;
    batch.features = Matrix(malicious.size(), malicious.dim());
    batch.labels.assign(malicious.size(), 1);
    std::ostringstream note;
    note << "eps=" << eps;
    batch.config_note = note.str();
    for (std::size_t i = 0; i < malicious.size(); ++i) {
        const auto adv = fgsm_generate(net, malicious.features.row(i), 1, eps, mutable_mask, pipe);
        std::copy(adv.begin(), adv.end(), batch.features.row(i).begin());
    }
    return batch;
}

namespace {

struct GeneratedRow {
    std::vector<double> full;      // source row with M replaced by clipped M*
    std::vector<double> gen_input; // concat(M', z)
    std::vector<bool> clipped;     // per mutable coordinate
    MlpNetwork::Trace trace;       // generator trace for the backward pass
};

GeneratedRow generate_row(const MlpNetwork& generator, std::span<const double> source,
                          const std::vector<std::size_t>& mutable_idx, const GanConfig& cfg,
                          std::size_t noise_dims, const std::vector<double>& clip_lo,
                          const std::vector<double>& clip_hi, RngStream& rng) {
    GeneratedRow row;
    row.gen_input.reserve(mutable_idx.size() + noise_dims);
    for (std::size_t m : mutable_idx) {
        row.gen_input.push_back(source[m] + cfg.input_noise_scale * rng.uniform(-1.0, 1.0));
    }
    for (std::size_t z = 0; z < noise_dims; ++z) row.gen_input.push_back(rng.uniform(-1.0, 1.0));

    const auto m_star = generator.forward(row.gen_input, row.trace);
    row.full.assign(source.begin(), source.end());
    row.clipped.assign(mutable_idx.size(), false);
    for (std::size_t k = 0; k < mutable_idx.size(); ++k) {
        double v = m_star[k];
        if (!clip_lo.empty()) {
            const std::size_t f = mutable_idx[k];
            const double c = std::clamp(v, clip_lo[f], clip_hi[f]);
            row.clipped[k] = (c != v);
            v = c;
        }
        row.full[mutable_idx[k]] = v;
    }
    return row;
}

} // namespace

GanState train_gan(const LabeledDataset& malicious, const LabeledDataset& benign,
                   const VotingEnsemble& ensemble, const GanConfig& config, RngStream& rng,
                   const FittedPipeline* pipe) {
    require_all_labels(malicious, 1, "train_gan malicious");
    require_all_labels(benign, 0, "train_gan benign");
    if (malicious.dim() != benign.dim()) {
        throw std::invalid_argument("train_gan: feature dimension mismatch");
    }

    GanState gan;
    gan.config = config;
    gan.mutable_idx = malicious.schema.mutable_feature_indices();
    gan.immutable_idx = malicious.schema.immutable_feature_indices();
    if (gan.mutable_idx.empty()) throw std::invalid_argument("train_gan: no mutable features");
    const std::size_t n_mut = gan.mutable_idx.size();
    const std::size_t noise_dims = config.noise_dims == 0 ? n_mut : config.noise_dims;
    gan.config.noise_dims = noise_dims;
    const std::size_t d = malicious.dim();

    if (pipe) {
        for (const auto& st : pipe->columns()) {
            gan.clip_lo.push_back(st.clip_lo());
            gan.clip_hi.push_back(st.clip_hi());
        }
    }

    gan.generator = MlpNetwork::create({n_mut + noise_dims, config.hidden_generator, n_mut},
                                       Activation::ReLU, Activation::Identity, rng);
    gan.discriminator = MlpNetwork::create({d, config.hidden_discriminator, 1}, Activation::ReLU,
                                           Activation::Sigmoid, rng);

    std::vector<std::size_t> mal_order(malicious.size()), ben_order(benign.size());
    std::iota(mal_order.begin(), mal_order.end(), 0);
    std::iota(ben_order.begin(), ben_order.end(), 0);

    auto epoch_stats = [&](RngStream eval_rng) {
        GanEpochLog log;
        const std::size_t n_eval = std::min<std::size_t>(128, malicious.size());
        std::size_t evaded = 0;
        for (std::size_t i = 0; i < n_eval; ++i) {
            auto row = generate_row(gan.generator, malicious.features.row(i % malicious.size()),
                                    gan.mutable_idx, gan.config, noise_dims, gan.clip_lo,
                                    gan.clip_hi, eval_rng);
            const double p = gan.discriminator.forward(row.full)[0];
            const int d_label = p >= 0.5 ? 1 : 0;
            if (ensemble.vote(row.full, d_label) == 0) ++evaded;
            log.generator_loss += bce_loss(0.0, p);
            log.discriminator_loss += bce_loss(1.0, p);
        }
        for (std::size_t i = 0; i < std::min<std::size_t>(n_eval, benign.size()); ++i) {
            log.discriminator_loss += bce_loss(0.0, gan.discriminator.forward(benign.features.row(i))[0]);
        }
        log.evasion_rate = static_cast<double>(evaded) / static_cast<double>(n_eval);
        log.generator_loss /= static_cast<double>(n_eval);
        log.discriminator_loss /= static_cast<double>(2 * n_eval);
        return log;
    };

    gan.log.push_back(epoch_stats(rng.child(0xe0)));

    MlpNetwork::Trace d_trace;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(mal_order);
        rng.shuffle(ben_order);
        std::size_t ben_cursor = 0;
        for (std::size_t start = 0; start < mal_order.size(); start += config.batch) {
            const std::size_t end = std::min(mal_order.size(), start + config.batch);

            // Generate the adversarial half of the batch.
            std::vector<GeneratedRow> generated;
            generated.reserve(end - start);
            for (std::size_t k = start; k < end; ++k) {
                generated.push_back(generate_row(gan.generator,
                                                 malicious.features.row(mal_order[k]),
                                                 gan.mutable_idx, gan.config, noise_dims,
                                                 gan.clip_lo, gan.clip_hi, rng));
            }

            // Discriminator step: real benign target 0, generated target 1.
            // Rows the offline ensemble flags malicious get double weight.
            MlpGradients d_acc = gan.discriminator.zero_gradients();
            double weight_sum = 0.0;
            for (const auto& row : generated) {
                const double p = gan.discriminator.forward(row.full, d_trace)[0];
                const int d_label = p >= 0.5 ? 1 : 0;
                const double w = ensemble.vote(row.full, d_label) == 1 ? 2.0 : 1.0;
                const std::vector<double> delta{w * (p - 1.0)};
                gan.discriminator.accumulate(d_acc, gan.discriminator.backward(d_trace, delta));
                weight_sum += w;
            }
            for (std::size_t k = start; k < end; ++k) {
                const auto x = benign.features.row(ben_order[ben_cursor++ % ben_order.size()]);
                const double p = gan.discriminator.forward(x, d_trace)[0];
                const std::vector<double> delta{p - 0.0};
                gan.discriminator.accumulate(d_acc, gan.discriminator.backward(d_trace, delta));
                weight_sum += 1.0;
            }
            if (config.discriminator_sees_real_malicious) {
                for (std::size_t k = start; k < end; ++k) {
                    const auto x = malicious.features.row(mal_order[k]);
                    const double p = gan.discriminator.forward(x, d_trace)[0];
                    const std::vector<double> delta{p - 1.0};
                    gan.discriminator.accumulate(d_acc, gan.discriminator.backward(d_trace, delta));
                    weight_sum += 1.0;
                }
            }
            const double d_scale = 1.0 / weight_sum;
            for (auto& m : d_acc.dw)
                for (double& v : m.values()) v *= d_scale;
            for (auto& b : d_acc.db)
                for (double& v : b) v *= d_scale;
            gan.discriminator.apply_update(d_acc, config.lr_discriminator);

            // Generator step: push generated samples to be scored benign.
            MlpGradients g_acc = gan.generator.zero_gradients();
            for (auto& row : generated) {
                const double p = gan.discriminator.forward(row.full, d_trace)[0];
                const std::vector<double> delta{p - 0.0};
                const auto d_grads = gan.discriminator.backward(d_trace, delta);
                std::vector<double> dm(gan.mutable_idx.size());
                for (std::size_t k = 0; k < gan.mutable_idx.size(); ++k) {
                    dm[k] = row.clipped[k] ? 0.0 : d_grads.dx[gan.mutable_idx[k]];
                }
                gan.generator.accumulate(g_acc, gan.generator.backward(row.trace, dm));
            }
            const double g_scale = 1.0 / static_cast<double>(generated.size());
            for (auto& m : g_acc.dw)
                for (double& v : m.values()) v *= g_scale;
            for (auto& b : g_acc.db)
                for (double& v : b) v *= g_scale;
            gan.generator.apply_update(g_acc, config.lr_generator);
        }
        gan.log.push_back(epoch_stats(rng.child(0xe1 + epoch)));
    }
    return gan;
}

AdversarialBatch generate_adversarial(const GanState& gan, const LabeledDataset& malicious,
                                      RngStream& rng) {
    require_all_labels(malicious, 1, "generate_adversarial");
    AdversarialBatch batch;
    batch.provenance = AttackKind::GAN;
    batch.generator_seed = rng.seed();
    batch.features = Matrix(malicious.size(), malicious.dim());
    batch.labels.assign(malicious.size(), 1);
    std::ostringstream note;
    note << "noise_dims=" << gan.config.noise_dims << " epochs=" << gan.config.epochs;
    batch.config_note = note.str();
    for (std::size_t i = 0; i < malicious.size(); ++i) {
        auto row = generate_row(gan.generator, malicious.features.row(i), gan.mutable_idx,
                                gan.config, gan.config.noise_dims, gan.clip_lo, gan.clip_hi, rng);
        std::copy(row.full.begin(), row.full.end(), batch.features.row(i).begin());
    }
    return batch;
}

void save_batch(const AdversarialBatch& batch, const std::string& path,
                const std::string& source_checksum) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_batch: cannot write " + path);
    out << "# attack=" << attack_name(batch.provenance) << "\n";
    out << "# config=" << batch.config_note << "\n";
    out << "# seed=" << batch.generator_seed << "\n";
    out << "# source_checksum=" << source_checksum << "\n";
    out.precision(17);
    for (std::size_t i = 0; i < batch.features.rows(); ++i) {
        const auto row = batch.features.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j) out << ",";
            out << row[j];
        }
        out << "," << batch.labels[i] << "\n";
    }
}

AdversarialBatch load_batch(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_batch: cannot open " + path);
    AdversarialBatch batch;
    std::string line;
    std::vector<double> values;
    std::size_t cols = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = line.substr(2, eq - 2);
            const std::string val = line.substr(eq + 1);
            if (key == "attack") batch.provenance = val == "GAN" ? AttackKind::GAN : AttackKind::FGSM;
            if (key == "config") batch.config_note = val;
            if (key == "seed") batch.generator_seed = std::stoull(val);
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() < 2) throw std::runtime_error("load_batch: malformed row in " + path);
        batch.labels.push_back(static_cast<int>(row.back()));
        row.pop_back();
        if (cols == 0) cols = row.size();
        if (row.size() != cols) throw std::runtime_error("load_batch: ragged rows in " + path);
        values.insert(values.end(), row.begin(), row.end());
    }
    batch.features = Matrix(batch.labels.size(), cols, std::move(values));
    return batch;
}

} // namespace nids
