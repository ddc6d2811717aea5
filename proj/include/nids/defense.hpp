#pragma once

#include "nids/attacks.hpp"
#include "nids/autoencoder.hpp"
#include "nids/classifiers.hpp"
#include "nids/dataio.hpp"

#include <array>
#include <string>
#include <vector>

namespace nids {

// Fixed base-learner order, serialized with the model.
inline constexpr std::array<Algorithm, 7> kStackingBases = {
    Algorithm::RF, Algorithm::DT, Algorithm::Bagging, Algorithm::KNN,
    Algorithm::LDA, Algorithm::GB, Algorithm::MLP};

struct StackingConfig {
    std::size_t folds = 5;
    bool hard_label_meta_features = false; // ablation option
    std::vector<ClassifierSpec> base_specs; // empty => defaults per kStackingBases
};

struct StackingModel {
    std::vector<ModelPtr> bases; // kStackingBases order
    ModelPtr meta;               // LR over 7 base probabilities
    std::vector<std::size_t> fold_of_row; // out-of-fold assignment record
    bool hard_label_meta_features = false;

    std::vector<double> base_features(std::span<const double> x) const;
    double predict_proba(std::span<const double> x) const;
    int predict(std::span<const double> x) const { return predict_proba(x) >= 0.5 ? 1 : 0; }
};

StackingModel train_stacking(const LabeledDataset& data, const StackingConfig& cfg,
                             RngStream& rng);

// beta = 95th percentile of reconstruction errors on benign validation rows.
double calibrate_threshold(const Autoencoder& ae, const LabeledDataset& benign_validation);

enum class DetectorStage { Layer1, Layer2 };

struct Detection {
    int label = 0;
    DetectorStage stage = DetectorStage::Layer1;
};

struct TwoLayerDetector {
    StackingModel stacking;
    Autoencoder ae; // threshold calibrated
    std::string pipeline_checksum;
};

// Stacking first; a benign verdict is re-checked by the reconstruction gate
// (strict > beta).
Detection two_layer_classify(const TwoLayerDetector& det, std::span<const double> x);
std::vector<int> two_layer_classify_batch(const TwoLayerDetector& det, const Matrix& X);

struct AugmentedTrainSet {
    LabeledDataset data;
    std::vector<std::string> provenance; // per row: "original", "GAN", "FGSM"
    double fraction = 0.0;
};

// Appends ceil(fraction * original malicious count) adversarial rows per
// attack batch, then shuffles deterministically.
AugmentedTrainSet adversarial_augment(const LabeledDataset& train,
                                      const std::vector<AdversarialBatch>& batches,
                                      double fraction, RngStream& rng);

// Detector bundle directory: base/meta model files, autoencoder, fold record,
// manifest with seeds and the pipeline checksum.
void save_detector(const TwoLayerDetector& det, const std::string& dir, std::uint64_t seed);
TwoLayerDetector load_detector(const std::string& dir);

} // namespace nids
