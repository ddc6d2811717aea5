#pragma once

#include "nids/attacks.hpp"
#include "nids/autoencoder.hpp"
#include "nids/dataio.hpp"
#include "nids/defense.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <string>
#include <vector>

namespace nids {

struct ConfusionMatrix {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::size_t total() const { return tp + fp + tn + fn; }
};

ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& labels);

// All values are percentages in [0, 100]. Malicious is the positive class;
// macro values average the per-class numbers.
struct MetricSet {
    ConfusionMatrix cm;
    double precision_malicious = 0.0, recall_malicious = 0.0, f1_malicious = 0.0;
    double precision_benign = 0.0, recall_benign = 0.0, f1_benign = 0.0;
    double precision_macro = 0.0, recall_macro = 0.0, f1_macro = 0.0;
    double accuracy = 0.0;
    double detection_rate = 0.0; // == recall_malicious
    bool zero_denominator = false;
};

MetricSet compute_metrics(const std::vector<int>& preds, const std::vector<int>& labels);

// Two-sided paired sign-flip permutation test on the mean difference.
// Exact enumeration up to 16 pairs, 1e5 deterministic resamples beyond.
double significance_test(std::span<const double> metric_a, std::span<const double> metric_b);

struct EvalReport {
    std::string kind; // "experiment" or "ablation"
    std::vector<std::string> models;     // row order
    std::vector<std::string> conditions; // column-group order
    std::map<std::string, MetricSet> cells; // key = model + "|" + condition
    nlohmann::json metadata;

    const MetricSet& cell(const std::string& model, const std::string& condition) const;
    void set_cell(const std::string& model, const std::string& condition, MetricSet m);

    nlohmann::json to_json() const;
    static EvalReport from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    static EvalReport load(const std::string& path);
};

inline constexpr const char* kConditionUnmodified = "unmodified";
inline constexpr const char* kConditionGan = "GAN";
inline constexpr const char* kConditionFgsm = "FGSM";
inline constexpr const char* kConditionAll = "all";

struct HarnessInputs {
    LabeledDataset train;
    LabeledDataset test;
    const FittedPipeline* pipe = nullptr; // optional; enables domain clipping
    std::string split_note = "random";    // recorded in the report header
};

struct HarnessConfig {
    std::vector<Algorithm> baseline_models = {Algorithm::DT,  Algorithm::GB, Algorithm::Bagging,
                                              Algorithm::KNN, Algorithm::LR, Algorithm::MLP,
                                              Algorithm::LDA};
    double fgsm_eps = 0.1;
    std::vector<double> fgsm_eps_sweep = {0.01, 0.05, 0.1, 0.2};
    GanConfig gan;
    StackingConfig stacking;
    AutoencoderConfig ae;
    ClassifierSpec target_mlp = fgsm_target_spec();
    double augment_fraction = 0.5;
    std::uint64_t seed = 1;

    // Three fully connected layers for the gradient-sign target.
    static ClassifierSpec fgsm_target_spec();
};

// Trained attack artifacts shared between the experiment and the ablation.
struct AttackArtifacts {
    ModelPtr target_mlp;
    VotingEnsemble ensemble;
    GanState gan;
    AdversarialBatch gan_train, gan_test;
    AdversarialBatch fgsm_train, fgsm_test;
};

AttackArtifacts build_attacks(const HarnessInputs& in, const HarnessConfig& cfg);

// Stacking trained on stack_train (possibly augmented); the autoencoder fits
// 80% of the original benign rows and calibrates beta on the held-out 20%.
TwoLayerDetector train_detector(const LabeledDataset& stack_train,
                                const LabeledDataset& original_train, const HarnessConfig& cfg,
                                RngStream& rng);

// Four-condition evaluation of every baseline plus the two-layer detector.
EvalReport run_experiment(const HarnessInputs& in, const HarnessConfig& cfg);
EvalReport run_experiment(const HarnessInputs& in, const HarnessConfig& cfg,
                          const AttackArtifacts& attacks);

// Component ablation: stacking alone, plus the reconstruction gate, plus
// adversarial training, and the full detector, all on the mixed condition.
EvalReport run_ablation(const HarnessInputs& in, const HarnessConfig& cfg);
EvalReport run_ablation(const HarnessInputs& in, const HarnessConfig& cfg,
                        const AttackArtifacts& attacks);

// Condition test sets: adversarial conditions replace the malicious test rows
// and keep the benign rows fixed.
LabeledDataset condition_test_set(const LabeledDataset& test, const std::string& condition,
                                  const AdversarialBatch* gan, const AdversarialBatch* fgsm);

// Emits tables/*.csv, tables/*.md, figures/*.svg and a manifest; byte
// deterministic for a fixed report.
void render_report(const EvalReport& report, const std::string& outdir);

} // namespace nids
