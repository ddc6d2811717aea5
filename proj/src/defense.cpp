#include "nids/defense.hpp"

#include "nids/numerics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace nids {

namespace fs = std::filesystem;

std::vector<double> StackingModel::base_features(std::span<const double> x) const {
    std::vector<double> out(bases.size());
    for (std::size_t b = 0; b < bases.size(); ++b) {
        out[b] = hard_label_meta_features ? static_cast<double>(bases[b]->predict(x))
                                          : bases[b]->predict_proba(x);
    }
    return out;
}

double StackingModel::predict_proba(std::span<const double> x) const {
    return meta->predict_proba(base_features(x));
}

namespace {

// Stratified fold assignment: shuffles each class then deals round-robin.
std::vector<std::size_t> assign_folds(const std::vector<int>& labels, std::size_t folds,
                                      RngStream& rng) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(i);
    rng.shuffle(pos);
    rng.shuffle(neg);
    std::vector<std::size_t> fold(labels.size(), 0);
    for (std::size_t k = 0; k < pos.size(); ++k) fold[pos[k]] = k % folds;
    for (std::size_t k = 0; k < neg.size(); ++k) fold[neg[k]] = k % folds;
    return fold;
}

} // namespace

StackingModel train_stacking(const LabeledDataset& data, const StackingConfig& cfg,
                             RngStream& rng) {
    if (cfg.folds < 2) throw std::invalid_argument("train_stacking: folds must be >= 2");
    std::vector<ClassifierSpec> specs = cfg.base_specs;
    if (specs.empty()) {
        for (Algorithm a : kStackingBases) specs.push_back(ClassifierSpec::defaults(a));
    }
    if (specs.size() != kStackingBases.size()) {
        throw std::invalid_argument("train_stacking: expected 7 base specs");
    }

    StackingModel model;
    model.hard_label_meta_features = cfg.hard_label_meta_features;
    model.fold_of_row = assign_folds(data.labels, cfg.folds, rng);

    // Every fold must keep both classes for the base learners.
    for (std::size_t f = 0; f < cfg.folds; ++f) {
        std::size_t pos = 0, neg = 0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (model.fold_of_row[i] == f) continue; // training side of fold f
            (data.labels[i] == 1 ? pos : neg)++;
        }
        if (pos == 0 || neg == 0) {
            throw std::invalid_argument("train_stacking: fold " + std::to_string(f) +
                                        " lacks both classes");
        }
    }

    // Out-of-fold meta features.
    Matrix meta_X(data.size(), specs.size());
    for (std::size_t f = 0; f < cfg.folds; ++f) {
        std::vector<std::size_t> train_idx, held_idx;
        for (std::size_t i = 0; i < data.size(); ++i) {
            (model.fold_of_row[i] == f ? held_idx : train_idx).push_back(i);
        }
        const LabeledDataset fold_train = select_rows(data, train_idx);
        for (std::size_t b = 0; b < specs.size(); ++b) {
            RngStream fold_rng = rng.child(1000 + f * 100 + b);
            const ModelPtr m = train_classifier(specs[b], fold_train, fold_rng);
            for (std::size_t i : held_idx) {
                const auto x = data.features.row(i);
                meta_X.at(i, b) = cfg.hard_label_meta_features
                                      ? static_cast<double>(m->predict(x))
                                      : m->predict_proba(x);
            }
        }
    }

    // Full-data bases for inference.
    for (std::size_t b = 0; b < specs.size(); ++b) {
        RngStream base_rng = rng.child(2000 + b);
        model.bases.push_back(train_classifier(specs[b], data, base_rng));
    }

    LabeledDataset meta_data;
    meta_data.features = std::move(meta_X);
    meta_data.labels = data.labels;
    RngStream meta_rng = rng.child(3000);
    model.meta = train_classifier(ClassifierSpec::defaults(Algorithm::LR), meta_data, meta_rng);
    return model;
}

double calibrate_threshold(const Autoencoder& ae, const LabeledDataset& benign_validation) {
    if (benign_validation.size() == 0) {
        throw std::invalid_argument("calibrate_threshold: empty validation set");
    }
    for (int y : benign_validation.labels) {
        if (y != 0) throw std::invalid_argument("calibrate_threshold: malicious row present");
    }
    const auto errors = reconstruction_errors(ae, benign_validation.features);
    return percentile(errors, 0.95);
}

Detection two_layer_classify(const TwoLayerDetector& det, std::span<const double> x) {
    if (det.stacking.predict(x) == 1) {
        return {1, DetectorStage::Layer1};
    }
    const double err = reconstruction_error(det.ae, x);
    return {err > det.ae.threshold ? 1 : 0, DetectorStage::Layer2};
}

std::vector<int> two_layer_classify_batch(const TwoLayerDetector& det, const Matrix& X) {
    std::vector<int> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) out[i] = two_layer_classify(det, X.row(i)).label;
    return out;
}

AugmentedTrainSet adversarial_augment(const LabeledDataset& train,
                                      const std::vector<AdversarialBatch>& batches,
                                      double fraction, RngStream& rng) {
    if (fraction < 0.0 || fraction > 1.0) {
        throw std::invalid_argument("adversarial_augment: fraction outside [0,1]");
    }
    std::size_t malicious_count = 0;
    for (int y : train.labels) malicious_count += (y == 1);
    const std::size_t per_batch =
        static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(malicious_count)));

    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::vector<std::string> provenance;
    for (std::size_t i = 0; i < train.size(); ++i) {
        const auto r = train.features.row(i);
        rows.emplace_back(r.begin(), r.end());
        labels.push_back(train.labels[i]);
        provenance.emplace_back("original");
    }
    for (const auto& batch : batches) {
        if (batch.features.cols() != train.dim()) {
            throw std::invalid_argument("adversarial_augment: batch dimension mismatch");
        }
        std::vector<std::size_t> idx(batch.size());
        std::iota(idx.begin(), idx.end(), 0);
        rng.shuffle(idx);
        const std::size_t take = std::min(per_batch, idx.size());
        for (std::size_t k = 0; k < take; ++k) {
            const auto r = batch.features.row(idx[k]);
            rows.emplace_back(r.begin(), r.end());
            labels.push_back(1);
            provenance.emplace_back(attack_name(batch.provenance));
        }
    }

    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    AugmentedTrainSet out;
    out.fraction = fraction;
    out.data.schema = train.schema;
    out.data.features = Matrix(rows.size(), train.dim());
    for (std::size_t i = 0; i < order.size(); ++i) {
        std::copy(rows[order[i]].begin(), rows[order[i]].end(), out.data.features.row(i).begin());
        out.data.labels.push_back(labels[order[i]]);
        out.provenance.push_back(provenance[order[i]]);
    }
    return out;
}

void save_detector(const TwoLayerDetector& det, const std::string& dir, std::uint64_t seed) {
    fs::create_directories(dir);
    for (std::size_t b = 0; b < det.stacking.bases.size(); ++b) {
        save_model(*det.stacking.bases[b],
                   (fs::path(dir) / ("base_" + std::to_string(b) + "_" +
                                     algorithm_name(kStackingBases[b]) + ".json")).string(),
                   det.pipeline_checksum);
    }
    save_model(*det.stacking.meta, (fs::path(dir) / "meta_LR.json").string(),
               det.pipeline_checksum);
    save_autoencoder(det.ae, (fs::path(dir) / "autoencoder.json").string());

    nlohmann::json manifest = {{"format", "nids-detector"},
                               {"version", 1},
                               {"seed", seed},
                               {"beta", det.ae.threshold},
                               {"pipeline_checksum", det.pipeline_checksum},
                               {"hard_label_meta_features", det.stacking.hard_label_meta_features},
                               {"fold_of_row", det.stacking.fold_of_row}};
    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) throw std::runtime_error("save_detector: cannot write manifest in " + dir);
    out << manifest.dump(2) << "\n";
}

TwoLayerDetector load_detector(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "manifest.json");
    if (!in) throw std::runtime_error("load_detector: cannot open manifest in " + dir);
    nlohmann::json manifest;
    in >> manifest;
    if (manifest.value("format", "") != "nids-detector") {
        throw std::runtime_error("load_detector: bad manifest format in " + dir);
    }
    TwoLayerDetector det;
    det.pipeline_checksum = manifest.value("pipeline_checksum", "");
    det.stacking.hard_label_meta_features = manifest.value("hard_label_meta_features", false);
    det.stacking.fold_of_row = manifest.at("fold_of_row").get<std::vector<std::size_t>>();
    for (std::size_t b = 0; b < kStackingBases.size(); ++b) {
        det.stacking.bases.push_back(
            load_model((fs::path(dir) / ("base_" + std::to_string(b) + "_" +
                                         algorithm_name(kStackingBases[b]) + ".json")).string()));
    }
    det.stacking.meta = load_model((fs::path(dir) / "meta_LR.json").string());
    det.ae = load_autoencoder((fs::path(dir) / "autoencoder.json").string());
    det.ae.threshold = manifest.at("beta").get<double>();
    return det;
}

} // namespace nids
