#pragma once

#include "nids/classifiers.hpp"
#include "nids/dataio.hpp"
#include "nids/mlp.hpp"
#include "nids/preprocess.hpp"
#include "nids/rng.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nids {

// Majority over three offline classifier votes plus the discriminator's;
// a 2-2 tie resolves malicious.
int majority_vote(int c1, int c2, int c3, int d);

// Offline KNN/LDA/LR ensemble reinforcing the GAN discriminator.
struct VotingEnsemble {
    ModelPtr knn;
    ModelPtr lda;
    ModelPtr lr;

    std::size_t input_dim() const { return knn->input_dim(); }
    int vote(std::span<const double> x, int discriminator_label) const;
};

VotingEnsemble train_voting_ensemble(const LabeledDataset& data, RngStream& rng);

enum class AttackKind { GAN, FGSM };
std::string attack_name(AttackKind k);

struct AdversarialBatch {
    Matrix features;
    std::vector<int> labels; // all 1
    AttackKind provenance = AttackKind::FGSM;
    std::uint64_t generator_seed = 0;
    std::string config_note; // eps or GAN config summary

    std::size_t size() const { return labels.size(); }
};

void save_batch(const AdversarialBatch& batch, const std::string& path,
                const std::string& source_checksum);
AdversarialBatch load_batch(const std::string& path);

// Single-step gradient-sign perturbation restricted to mutable coordinates.
// sign(0) = 0; immutable coordinates pass through untouched. When a pipeline
// is given the result is clamped to the training domain.
std::vector<double> fgsm_generate(const MlpNetwork& net, std::span<const double> x, int y,
                                  double eps, const std::vector<bool>& mutable_mask,
                                  const FittedPipeline* pipe = nullptr);

AdversarialBatch fgsm_batch(const MlpNetwork& net, const LabeledDataset& malicious, double eps,
                            const std::vector<bool>& mutable_mask, const FittedPipeline* pipe);

std::vector<bool> mutable_mask_from_schema(const FeatureSchema& schema);

struct GanConfig {
    std::size_t noise_dims = 0; // 0 => |M|
    std::size_t epochs = 200;
    std::size_t batch = 64;
    double lr_generator = 0.01;
    double lr_discriminator = 0.01;
    std::size_t hidden_generator = 32;
    std::size_t hidden_discriminator = 32;
    double input_noise_scale = 0.1; // additive corruption on M before G
    bool discriminator_sees_real_malicious = false;
};

struct GanEpochLog {
    double discriminator_loss = 0.0;
    double generator_loss = 0.0;
    double evasion_rate = 0.0; // fraction of generated samples voted benign
};

struct GanState {
    MlpNetwork generator;     // |M| + noise -> |M|
    MlpNetwork discriminator; // d -> probability
    VotingEnsemble ensemble;
    std::vector<std::size_t> mutable_idx;
    std::vector<std::size_t> immutable_idx;
    GanConfig config;
    std::vector<double> clip_lo; // empty => unclipped
    std::vector<double> clip_hi;
    std::vector<GanEpochLog> log; // log[0] is pre-update state
};

GanState train_gan(const LabeledDataset& malicious, const LabeledDataset& benign,
                   const VotingEnsemble& ensemble, const GanConfig& config, RngStream& rng,
                   const FittedPipeline* pipe = nullptr);

AdversarialBatch generate_adversarial(const GanState& gan, const LabeledDataset& malicious,
                                      RngStream& rng);

} // namespace nids
