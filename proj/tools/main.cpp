// Batch front end: prepare -> train -> attack -> defend -> eval/ablate ->
// report. Each stage persists artifacts under a config-hash directory so runs
// are reproducible and stages can be re-entered cheaply.

#include "CLI11.hpp"

#include "nids/checksum.hpp"
#include "nids/dataio.hpp"
#include "nids/defense.hpp"
#include "nids/eval.hpp"
#include "nids/preprocess.hpp"
#include "nids/synth.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nids;

namespace {

// exit 2: bad input or config
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// exit 3: upstream stage missing or its artifacts changed
struct StaleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// config handling

json default_config() {
    return json{
        {"dataset",
         {{"name", "synth"},
          {"train_csv", ""},
          {"test_csv", ""},
          {"schema", ""},
          {"synth",
           {{"train_rows", 1200},
            {"test_rows", 400},
            {"malicious_fraction", 0.4},
            {"separation", 2.0},
            {"missing_rate", 0.02}}}}},
        {"seed", 1},
        {"out", "runs"},
        {"subsample", {{"train", 0}, {"test", 0}}},
        {"attack",
         {{"fgsm_eps", 0.1},
          {"eps_sweep", {0.01, 0.05, 0.1, 0.2}},
          {"gan",
           {{"epochs", 40},
            {"batch", 64},
            {"lr_generator", 0.01},
            {"lr_discriminator", 0.01},
            {"hidden", 32},
            {"input_noise_scale", 0.1}}}}},
        {"defense",
         {{"folds", 5},
          {"fraction", 0.5},
          {"rf_trees", 25},
          {"mlp_epochs", 15},
          {"ae", {{"outer", 32}, {"inner", 16}, {"epochs", 30}, {"batch", 64},
                  {"learning_rate", 0.001}}}}},
    };
}

void deep_merge(json& base, const json& over) {
    if (!over.is_object() || !base.is_object()) {
        base = over;
        return;
    }
    for (auto it = over.begin(); it != over.end(); ++it) {
        if (base.contains(it.key())) {
            deep_merge(base[it.key()], it.value());
        } else {
            base[it.key()] = it.value();
        }
    }
}

json parse_override_value(const std::string& raw) {
    // numbers, booleans, arrays and objects parse as JSON; anything else is a string
    const json parsed = json::parse(raw, nullptr, false);
    if (!parsed.is_discarded()) return parsed;
    return json(raw);
}

json load_config(const std::string& config_path, const std::vector<std::string>& sets,
                 long long seed_flag, const std::string& out_flag, long long subsample_flag) {
    json cfg = default_config();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw ConfigError("cannot open config file: " + config_path);
        json file_cfg = json::parse(in, nullptr, false);
        if (file_cfg.is_discarded()) throw ConfigError("config is not valid JSON: " + config_path);
        deep_merge(cfg, file_cfg);
    }
    for (const std::string& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        }
        std::string key = kv.substr(0, eq);
        for (char& c : key) {
            if (c == '.') c = '/';
        }
        cfg[json::json_pointer("/" + key)] = parse_override_value(kv.substr(eq + 1));
    }
    // flags win over both the file and --set
    if (seed_flag >= 0) cfg["seed"] = seed_flag;
    if (!out_flag.empty()) cfg["out"] = out_flag;
    if (subsample_flag > 0) {
        cfg["subsample"]["train"] = subsample_flag;
        cfg["subsample"]["test"] = std::max<long long>(subsample_flag / 5, 50);
    }

    if (!cfg["seed"].is_number()) throw ConfigError("config: seed must be a number");
    const std::string name = cfg["dataset"]["name"].get<std::string>();
    if (name != "synth" && name != "csv") {
        throw ConfigError("config: dataset.name must be 'synth' or 'csv', got '" + name + "'");
    }
    if (name == "csv") {
        for (const char* key : {"train_csv", "test_csv", "schema"}) {
            if (cfg["dataset"][key].get<std::string>().empty()) {
                throw ConfigError(std::string("config: dataset.") + key +
                                  " is required for csv datasets");
            }
        }
    }
    return cfg;
}

// hash over everything that affects artifacts (the output root itself does not)
std::string config_hash(const json& cfg) {
    json keyed = cfg;
    keyed.erase("out");
    return fnv1a64_hex(keyed.dump());
}

HarnessConfig harness_config(const json& cfg) {
    HarnessConfig h;
    h.seed = cfg["seed"].get<std::uint64_t>();
    const json& atk = cfg["attack"];
    h.fgsm_eps = atk["fgsm_eps"].get<double>();
    h.fgsm_eps_sweep = atk["eps_sweep"].get<std::vector<double>>();
    const json& gan = atk["gan"];
    h.gan.epochs = gan["epochs"].get<std::size_t>();
    h.gan.batch = gan["batch"].get<std::size_t>();
    h.gan.lr_generator = gan["lr_generator"].get<double>();
    h.gan.lr_discriminator = gan["lr_discriminator"].get<double>();
    h.gan.hidden_generator = gan["hidden"].get<std::size_t>();
    h.gan.hidden_discriminator = gan["hidden"].get<std::size_t>();
    h.gan.input_noise_scale = gan["input_noise_scale"].get<double>();
    const json& def = cfg["defense"];
    h.stacking.folds = def["folds"].get<std::size_t>();
    h.augment_fraction = def["fraction"].get<double>();
    for (Algorithm a : kStackingBases) {
        ClassifierSpec s = ClassifierSpec::defaults(a);
        if (a == Algorithm::RF) s = s.with("trees", def["rf_trees"].get<double>());
        if (a == Algorithm::MLP) s = s.with("epochs", def["mlp_epochs"].get<double>());
        h.stacking.base_specs.push_back(s);
    }
    const json& ae = def["ae"];
    h.ae.bottleneck_outer = ae["outer"].get<std::size_t>();
    h.ae.bottleneck_inner = ae["inner"].get<std::size_t>();
    h.ae.epochs = ae["epochs"].get<std::size_t>();
    h.ae.batch = ae["batch"].get<std::size_t>();
    h.ae.learning_rate = ae["learning_rate"].get<double>();
    return h;
}

// ---------------------------------------------------------------------------
// stage manifests and staleness

void write_stage_manifest(const fs::path& stage_dir, const std::string& stage,
                          const json& inputs, const std::vector<std::string>& output_files,
                          const json& extra) {
    json outputs = json::object();
    for (const std::string& rel : output_files) {
        outputs[rel] = file_checksum((stage_dir / rel).string());
    }
    json manifest = {{"stage", stage}, {"inputs", inputs}, {"outputs", outputs}};
    for (auto it = extra.begin(); it != extra.end(); ++it) manifest[it.key()] = it.value();
    std::ofstream out(stage_dir / "manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest for stage " + stage);
    out << manifest.dump(2) << "\n";
}

json stage_manifest(const fs::path& run_dir, const std::string& stage) {
    const fs::path path = run_dir / stage / "manifest.json";
    std::ifstream in(path);
    if (!in) {
        throw StaleError("stage '" + stage + "' has not been run; run the '" + stage +
                         "' command first");
    }
    json m = json::parse(in, nullptr, false);
    if (m.is_discarded()) {
        throw StaleError("stage '" + stage + "' manifest is unreadable; rerun '" + stage + "'");
    }
    return m;
}

// true when the stage's manifest exists and every recorded output still matches
bool stage_fresh(const fs::path& run_dir, const std::string& stage) {
    const fs::path path = run_dir / stage / "manifest.json";
    std::ifstream in(path);
    if (!in) return false;
    json m = json::parse(in, nullptr, false);
    if (m.is_discarded()) return false;
    for (auto it = m["outputs"].begin(); it != m["outputs"].end(); ++it) {
        const fs::path f = run_dir / stage / it.key();
        if (!fs::exists(f) || file_checksum(f.string()) != it.value().get<std::string>()) {
            return false;
        }
    }
    return true;
}

void require_stage(const fs::path& run_dir, const std::string& stage) {
    const json m = stage_manifest(run_dir, stage);
    for (auto it = m.at("outputs").begin(); it != m.at("outputs").end(); ++it) {
        const fs::path f = run_dir / stage / it.key();
        if (!fs::exists(f)) {
            throw StaleError("stage '" + stage + "' artifact missing: " + f.string() +
                             "; rerun '" + stage + "'");
        }
        if (file_checksum(f.string()) != it.value().get<std::string>()) {
            throw StaleError("stage '" + stage + "' artifact changed on disk: " + f.string() +
                             "; rerun '" + stage + "'");
        }
    }
}

// recorded upstream checksums feeding a stage manifest
json input_record(const fs::path& run_dir, const std::vector<std::string>& stages) {
    json inputs = json::object();
    for (const std::string& s : stages) {
        const json m = stage_manifest(run_dir, s);
        for (auto it = m.at("outputs").begin(); it != m.at("outputs").end(); ++it) {
            inputs[s + "/" + it.key()] = it.value();
        }
    }
    return inputs;
}

// stages write into a temp directory that is renamed into place on success
class StageWriter {
public:
    StageWriter(const fs::path& run_dir, std::string stage)
        : final_(run_dir / stage), tmp_(run_dir / (stage + ".tmp")), stage_(std::move(stage)) {
        fs::remove_all(tmp_);
        fs::create_directories(tmp_);
    }

    const fs::path& dir() const { return tmp_; }

    void commit(const json& inputs, const std::vector<std::string>& outputs,
                const json& extra = json::object()) {
        write_stage_manifest(tmp_, stage_, inputs, outputs, extra);
        fs::remove_all(final_);
        fs::rename(tmp_, final_);
    }

    ~StageWriter() { fs::remove_all(tmp_); }

private:
    fs::path final_;
    fs::path tmp_;
    std::string stage_;
};

// ---------------------------------------------------------------------------
// prepared data io

void save_prepared(const LabeledDataset& data, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << std::setprecision(17);
    const auto feature_cols = data.schema.feature_column_indices();
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
        out << data.schema.columns[feature_cols[j]].name << ",";
    }
    out << "label\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t j = 0; j < data.dim(); ++j) out << data.features.at(i, j) << ",";
        out << data.labels[i] << "\n";
    }
}

LabeledDataset load_prepared(const fs::path& path, const FeatureSchema& schema) {
    std::ifstream in(path);
    if (!in) throw StaleError("prepared file missing: " + path.string() + "; rerun 'prepare'");
    std::string line;
    std::getline(in, line); // header
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        labels.push_back(static_cast<int>(row.back()));
        row.pop_back();
        rows.push_back(std::move(row));
    }
    LabeledDataset d;
    d.schema = schema;
    d.labels = std::move(labels);
    d.features = Matrix(rows.size(), rows.empty() ? schema.feature_count() : rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) d.features.at(i, j) = rows[i][j];
    }
    return d;
}

RawDataset load_raw_split(const json& cfg, bool train) {
    const json& ds = cfg["dataset"];
    if (ds["name"] == "synth") {
        const json& sy = ds["synth"];
        SynthConfig sc;
        sc.rows = sy[train ? "train_rows" : "test_rows"].get<std::size_t>();
        sc.malicious_fraction = sy["malicious_fraction"].get<double>();
        sc.separation = sy["separation"].get<double>();
        sc.missing_rate = sy["missing_rate"].get<double>();
        sc.seed = cfg["seed"].get<std::uint64_t>() + (train ? 0 : 0x7e57u);
        return synth_raw(sc);
    }
    const std::string schema_path = ds["schema"].get<std::string>();
    const std::string csv = ds[train ? "train_csv" : "test_csv"].get<std::string>();
    if (!fs::exists(schema_path)) throw ConfigError("schema file not found: " + schema_path);
    if (!fs::exists(csv)) throw ConfigError("dataset file not found: " + csv);
    return load_dataset(csv, FeatureSchema::load(schema_path));
}

// ---------------------------------------------------------------------------
// commands

int cmd_prepare(const json& cfg, const fs::path& run_dir) {
    if (stage_fresh(run_dir, "prepared")) {
        std::cout << "prepare: artifacts up to date, skipping\n";
        return 0;
    }
    const RawDataset raw_train = load_raw_split(cfg, true);
    const RawDataset raw_test = load_raw_split(cfg, false);

    const FittedPipeline pipe = FittedPipeline::fit(raw_train);
    LabeledDataset train = pipe.transform(raw_train);
    LabeledDataset test = pipe.transform(raw_test);

    const std::uint64_t seed = cfg["seed"].get<std::uint64_t>();
    const std::size_t sub_train = cfg["subsample"]["train"].get<std::size_t>();
    const std::size_t sub_test = cfg["subsample"]["test"].get<std::size_t>();
    if (sub_train > 0 && sub_train < train.size()) {
        RngStream rng = RngStream(seed).child(0x5b5);
        train = stratified_subsample(train, sub_train, rng);
    }
    if (sub_test > 0 && sub_test < test.size()) {
        RngStream rng = RngStream(seed).child(0x5b6);
        test = stratified_subsample(test, sub_test, rng);
    }

    json inputs = json::object();
    if (cfg["dataset"]["name"] == "csv") {
        for (const char* key : {"train_csv", "test_csv", "schema"}) {
            const std::string p = cfg["dataset"][key].get<std::string>();
            inputs[p] = file_checksum(p);
        }
    }

    StageWriter stage(run_dir, "prepared");
    pipe.save((stage.dir() / "pipeline.json").string());
    save_prepared(train, stage.dir() / "train.csv");
    save_prepared(test, stage.dir() / "test.csv");
    stage.commit(inputs, {"pipeline.json", "train.csv", "test.csv"},
                 {{"train_rows", train.size()},
                  {"test_rows", test.size()},
                  {"pipeline_checksum", pipe.checksum()}});
    std::cout << "prepare: " << train.size() << " train rows, " << test.size()
              << " test rows, " << pipe.feature_count() << " features\n";
    return 0;
}

struct LoadedData {
    FittedPipeline pipe;
    LabeledDataset train;
    LabeledDataset test;
};

LoadedData load_prepared_stage(const fs::path& run_dir) {
    require_stage(run_dir, "prepared");
    LoadedData d{FittedPipeline::load((run_dir / "prepared" / "pipeline.json").string()), {}, {}};
    d.train = load_prepared(run_dir / "prepared" / "train.csv", d.pipe.schema());
    d.test = load_prepared(run_dir / "prepared" / "test.csv", d.pipe.schema());
    return d;
}

int cmd_train(const json& cfg, const fs::path& run_dir) {
    if (stage_fresh(run_dir, "models")) {
        std::cout << "train: artifacts up to date, skipping\n";
        return 0;
    }
    const LoadedData data = load_prepared_stage(run_dir);
    const HarnessConfig h = harness_config(cfg);
    RngStream rng(h.seed);

    StageWriter stage(run_dir, "models");
    std::vector<std::string> outputs;
    for (std::size_t i = 0; i < h.baseline_models.size(); ++i) {
        RngStream m_rng = rng.child(100 + i);
        const ClassifierSpec spec = ClassifierSpec::defaults(h.baseline_models[i]);
        const ModelPtr m = train_classifier(spec, data.train, m_rng);
        const std::string name = algorithm_name(h.baseline_models[i]) + ".json";
        save_model(*m, (stage.dir() / name).string(), data.pipe.checksum());
        outputs.push_back(name);
        std::cout << "train: " << algorithm_name(h.baseline_models[i]) << " fitted\n";
    }
    RngStream t_rng = rng.child(500);
    const ModelPtr target = train_classifier(h.target_mlp, data.train, t_rng);
    save_model(*target, (stage.dir() / "target_mlp.json").string(), data.pipe.checksum());
    outputs.push_back("target_mlp.json");

    stage.commit(input_record(run_dir, {"prepared"}), outputs,
                 {{"seed", h.seed}, {"pipeline_checksum", data.pipe.checksum()}});
    std::cout << "train: " << outputs.size() << " models saved\n";
    return 0;
}

int cmd_attack(const json& cfg, const fs::path& run_dir) {
    if (stage_fresh(run_dir, "attacks")) {
        std::cout << "attack: artifacts up to date, skipping\n";
        return 0;
    }
    const LoadedData data = load_prepared_stage(run_dir);
    require_stage(run_dir, "models");

    std::string model_checksum;
    const ModelPtr target =
        load_model((run_dir / "models" / "target_mlp.json").string(), &model_checksum);
    if (model_checksum != data.pipe.checksum()) {
        throw StaleError("target model was trained against a different pipeline; rerun 'train'");
    }

    const HarnessConfig h = harness_config(cfg);
    RngStream rng(h.seed ^ 0xa77acc);

    std::vector<std::size_t> mal_train, mal_test;
    for (std::size_t i = 0; i < data.train.size(); ++i) {
        if (data.train.labels[i] == 1) mal_train.push_back(i);
    }
    for (std::size_t i = 0; i < data.test.size(); ++i) {
        if (data.test.labels[i] == 1) mal_test.push_back(i);
    }
    std::vector<std::size_t> ben_train;
    for (std::size_t i = 0; i < data.train.size(); ++i) {
        if (data.train.labels[i] == 0) ben_train.push_back(i);
    }
    const LabeledDataset train_mal = select_rows(data.train, mal_train);
    const LabeledDataset train_ben = select_rows(data.train, ben_train);
    const LabeledDataset test_mal = select_rows(data.test, mal_test);

    RngStream ens_rng = rng.child(1);
    const VotingEnsemble ensemble = train_voting_ensemble(data.train, ens_rng);
    RngStream gan_rng = rng.child(2);
    const GanState gan = train_gan(train_mal, train_ben, ensemble, h.gan, gan_rng, &data.pipe);

    RngStream g1 = rng.child(3), g2 = rng.child(4);
    const AdversarialBatch gan_train = generate_adversarial(gan, train_mal, g1);
    const AdversarialBatch gan_test = generate_adversarial(gan, test_mal, g2);

    const auto mask = mutable_mask_from_schema(data.train.schema);
    const MlpNetwork& net = mlp_network_of(*target);
    const AdversarialBatch fgsm_train = fgsm_batch(net, train_mal, h.fgsm_eps, mask, &data.pipe);
    const AdversarialBatch fgsm_test = fgsm_batch(net, test_mal, h.fgsm_eps, mask, &data.pipe);

    StageWriter stage(run_dir, "attacks");
    const std::string source = data.pipe.checksum();
    save_batch(gan_train, (stage.dir() / "gan_train.csv").string(), source);
    save_batch(gan_test, (stage.dir() / "gan_test.csv").string(), source);
    save_batch(fgsm_train, (stage.dir() / "fgsm_train.csv").string(), source);
    save_batch(fgsm_test, (stage.dir() / "fgsm_test.csv").string(), source);
    stage.commit(input_record(run_dir, {"prepared", "models"}),
                 {"gan_train.csv", "gan_test.csv", "fgsm_train.csv", "fgsm_test.csv"},
                 {{"fgsm_eps", h.fgsm_eps},
                  {"gan_epochs", h.gan.epochs},
                  {"final_evasion_rate", gan.log.back().evasion_rate}});
    std::cout << "attack: GAN " << gan_train.size() << "+" << gan_test.size() << " rows, FGSM "
              << fgsm_train.size() << "+" << fgsm_test.size() << " rows (eps " << h.fgsm_eps
              << ")\n";
    return 0;
}

int cmd_defend(const json& cfg, const fs::path& run_dir) {
    if (stage_fresh(run_dir, "detector")) {
        std::cout << "defend: artifacts up to date, skipping\n";
        return 0;
    }
    const LoadedData data = load_prepared_stage(run_dir);
    require_stage(run_dir, "attacks");

    const AdversarialBatch gan_train =
        load_batch((run_dir / "attacks" / "gan_train.csv").string());
    const AdversarialBatch fgsm_train =
        load_batch((run_dir / "attacks" / "fgsm_train.csv").string());

    const HarnessConfig h = harness_config(cfg);
    RngStream rng(h.seed ^ 0xdefe4d);
    RngStream aug_rng = rng.child(1);
    const AugmentedTrainSet augmented =
        adversarial_augment(data.train, {gan_train, fgsm_train}, h.augment_fraction, aug_rng);
    RngStream det_rng = rng.child(2);
    TwoLayerDetector det = train_detector(augmented.data, data.train, h, det_rng);
    det.pipeline_checksum = data.pipe.checksum();

    StageWriter stage(run_dir, "detector");
    save_detector(det, (stage.dir() / "bundle").string(), h.seed);
    std::vector<std::string> outputs;
    for (const auto& entry : fs::directory_iterator(stage.dir() / "bundle")) {
        outputs.push_back("bundle/" + entry.path().filename().string());
    }
    std::sort(outputs.begin(), outputs.end());
    stage.commit(input_record(run_dir, {"prepared", "attacks"}), outputs,
                 {{"augment_fraction", h.augment_fraction},
                  {"augmented_rows", augmented.data.size()},
                  {"threshold", det.ae.threshold}});
    std::cout << "defend: detector trained on " << augmented.data.size()
              << " rows (threshold " << det.ae.threshold << ")\n";
    return 0;
}

int cmd_eval(const json& cfg, const fs::path& run_dir) {
    const LoadedData data = load_prepared_stage(run_dir);
    require_stage(run_dir, "models");
    require_stage(run_dir, "attacks");
    require_stage(run_dir, "detector");

    const HarnessConfig h = harness_config(cfg);
    std::vector<std::pair<std::string, ModelPtr>> models;
    for (Algorithm a : h.baseline_models) {
        std::string checksum;
        const ModelPtr m =
            load_model((run_dir / "models" / (algorithm_name(a) + ".json")).string(), &checksum);
        if (checksum != data.pipe.checksum()) {
            throw StaleError("model " + algorithm_name(a) +
                             " was trained against a different pipeline; rerun 'train'");
        }
        models.emplace_back(algorithm_name(a), m);
    }
    TwoLayerDetector det = load_detector((run_dir / "detector" / "bundle").string());
    if (det.pipeline_checksum != data.pipe.checksum()) {
        throw StaleError("detector was trained against a different pipeline; rerun 'defend'");
    }
    const AdversarialBatch gan_test = load_batch((run_dir / "attacks" / "gan_test.csv").string());
    const AdversarialBatch fgsm_test =
        load_batch((run_dir / "attacks" / "fgsm_test.csv").string());

    EvalReport report;
    report.kind = "experiment";
    report.conditions = {kConditionUnmodified, kConditionGan, kConditionFgsm, kConditionAll};
    for (const auto& [name, m] : models) report.models.push_back(name);
    report.models.push_back("Ours");

    for (const auto& condition : report.conditions) {
        const LabeledDataset eval_set =
            condition_test_set(data.test, condition, &gan_test, &fgsm_test);
        for (const auto& [name, m] : models) {
            report.set_cell(name, condition,
                            compute_metrics(predict_batch(*m, eval_set.features),
                                            eval_set.labels));
        }
        report.set_cell("Ours", condition,
                        compute_metrics(two_layer_classify_batch(det, eval_set.features),
                                        eval_set.labels));
    }
    report.metadata = {{"seed", h.seed},
                       {"config_hash", config_hash(cfg)},
                       {"train_rows", data.train.size()},
                       {"test_rows", data.test.size()},
                       {"fgsm_eps", h.fgsm_eps},
                       {"augment_fraction", h.augment_fraction},
                       {"pipeline_checksum", data.pipe.checksum()}};

    StageWriter stage(run_dir, "reports");
    // keep an already-rendered ablation report when only eval reran
    if (fs::exists(run_dir / "reports" / "ablation.json")) {
        fs::copy_file(run_dir / "reports" / "ablation.json", stage.dir() / "ablation.json");
    }
    report.save((stage.dir() / "experiment.json").string());
    std::vector<std::string> outputs{"experiment.json"};
    if (fs::exists(stage.dir() / "ablation.json")) outputs.push_back("ablation.json");
    stage.commit(input_record(run_dir, {"prepared", "models", "attacks", "detector"}), outputs);

    for (const auto& condition : report.conditions) {
        std::cout << "eval: Ours DR[" << condition << "] = "
                  << report.cell("Ours", condition).detection_rate << "\n";
    }
    return 0;
}

int cmd_ablate(const json& cfg, const fs::path& run_dir) {
    const LoadedData data = load_prepared_stage(run_dir);
    require_stage(run_dir, "attacks");

    AttackArtifacts art;
    art.gan_train = load_batch((run_dir / "attacks" / "gan_train.csv").string());
    art.gan_test = load_batch((run_dir / "attacks" / "gan_test.csv").string());
    art.fgsm_train = load_batch((run_dir / "attacks" / "fgsm_train.csv").string());
    art.fgsm_test = load_batch((run_dir / "attacks" / "fgsm_test.csv").string());

    const HarnessConfig h = harness_config(cfg);
    HarnessInputs in;
    in.train = data.train;
    in.test = data.test;
    in.pipe = &data.pipe;
    EvalReport report = run_ablation(in, h, art);
    report.metadata["config_hash"] = config_hash(cfg);

    StageWriter stage(run_dir, "reports");
    if (fs::exists(run_dir / "reports" / "experiment.json")) {
        fs::copy_file(run_dir / "reports" / "experiment.json", stage.dir() / "experiment.json");
    }
    report.save((stage.dir() / "ablation.json").string());
    std::vector<std::string> outputs{"ablation.json"};
    if (fs::exists(stage.dir() / "experiment.json")) outputs.push_back("experiment.json");
    std::sort(outputs.begin(), outputs.end());
    stage.commit(input_record(run_dir, {"prepared", "attacks"}), outputs);

    for (const auto& variant : report.models) {
        std::cout << "ablate: " << variant << " DR = "
                  << report.cell(variant, kConditionAll).detection_rate << "\n";
    }
    return 0;
}

int cmd_report(const json& cfg, const fs::path& run_dir) {
    (void)cfg;
    require_stage(run_dir, "reports");

    StageWriter stage(run_dir, "report");
    std::vector<std::string> outputs;
    bool rendered = false;
    for (const char* kind : {"experiment", "ablation"}) {
        const fs::path src = run_dir / "reports" / (std::string(kind) + ".json");
        if (!fs::exists(src)) continue;
        const EvalReport rep = EvalReport::load(src.string());
        render_report(rep, (stage.dir() / kind).string());
        for (const auto& entry : fs::recursive_directory_iterator(stage.dir() / kind)) {
            if (entry.is_regular_file()) {
                outputs.push_back(fs::relative(entry.path(), stage.dir()).generic_string());
            }
        }
        rendered = true;
        std::cout << "report: rendered " << kind << "\n";
    }
    if (!rendered) {
        throw StaleError("no evaluation reports found; run 'eval' or 'ablate' first");
    }
    std::sort(outputs.begin(), outputs.end());
    stage.commit(input_record(run_dir, {"reports"}), outputs);
    std::cout << "report: output at " << (run_dir / "report").string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"adversarial robustness toolkit for flow-based intrusion detection"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_flag;
    long long seed_flag = -1;
    long long subsample_flag = 0;
    std::vector<std::string> sets;
    app.add_option("--config", config_path, "JSON run configuration")->configurable(false);
    app.add_option("--seed", seed_flag, "override the run seed");
    app.add_option("--out", out_flag, "output root directory");
    app.add_option("--subsample", subsample_flag, "stratified subsample size for training");
    app.add_option("--set", sets, "override a config key, e.g. attack.fgsm_eps=0.2");

    for (const char* name : {"prepare", "train", "attack", "defend", "eval", "ablate", "report"}) {
        app.add_subcommand(name);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        const json cfg = load_config(config_path, sets, seed_flag, out_flag, subsample_flag);
        const fs::path run_dir = fs::path(cfg["out"].get<std::string>()) / config_hash(cfg);
        fs::create_directories(run_dir);
        {
            std::ofstream out(run_dir / "config.json");
            out << cfg.dump(2) << "\n";
        }

        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "prepare") return cmd_prepare(cfg, run_dir);
        if (cmd == "train") return cmd_train(cfg, run_dir);
        if (cmd == "attack") return cmd_attack(cfg, run_dir);
        if (cmd == "defend") return cmd_defend(cfg, run_dir);
        if (cmd == "eval") return cmd_eval(cfg, run_dir);
        if (cmd == "ablate") return cmd_ablate(cfg, run_dir);
        if (cmd == "report") return cmd_report(cfg, run_dir);
        std::cerr << "unknown command: " << cmd << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const StaleError& e) {
        std::cerr << "stale pipeline: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
}
