#pragma once

#include "nids/dataio.hpp"
#include "nids/mlp.hpp"
#include "nids/rng.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace nids {

enum class Algorithm { DT, RF, Bagging, GB, KNN, LDA, LR, MLP };

std::string algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);

struct ClassifierSpec {
    Algorithm algorithm = Algorithm::DT;
    std::map<std::string, double> params;

    static ClassifierSpec defaults(Algorithm a);
    double get(const std::string& name, double fallback) const;
    ClassifierSpec with(const std::string& name, double value) const;
};

// Uniform inference surface over all fitted learners. predict thresholds
// predict_proba at 0.5 with ties resolved malicious.
class Model {
public:
    virtual ~Model() = default;
    virtual Algorithm algorithm() const = 0;
    virtual std::size_t input_dim() const = 0;
    virtual double predict_proba(std::span<const double> x) const = 0;
    virtual nlohmann::json to_json() const = 0;
    virtual const std::vector<double>* loss_history() const { return nullptr; }

    int predict(std::span<const double> x) const { return predict_proba(x) >= 0.5 ? 1 : 0; }
    void check_dim(std::span<const double> x) const;
};

using ModelPtr = std::shared_ptr<const Model>;

ModelPtr train_classifier(const ClassifierSpec& spec, const LabeledDataset& data, RngStream& rng);

ModelPtr model_from_json(const nlohmann::json& j);
void save_model(const Model& model, const std::string& path, const std::string& pipeline_checksum);
ModelPtr load_model(const std::string& path, std::string* pipeline_checksum = nullptr);

// Batch helpers.
std::vector<double> predict_proba_batch(const Model& m, const Matrix& X);
std::vector<int> predict_batch(const Model& m, const Matrix& X);

// Direct access to the fitted network of an MLP model (FGSM target surface).
const MlpNetwork& mlp_network_of(const Model& m);

} // namespace nids
