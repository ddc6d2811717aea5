#include "nids/eval.hpp"

#include "nids/checksum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace nids {

namespace fs = std::filesystem;

namespace {

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

} // namespace

ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& labels) {
    if (preds.size() != labels.size() || preds.empty()) {
        throw std::invalid_argument("confusion: length mismatch or empty");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (labels[i] == 1) {
            (preds[i] == 1 ? cm.tp : cm.fn)++;
        } else {
            (preds[i] == 1 ? cm.fp : cm.tn)++;
        }
    }
    return cm;
}

MetricSet compute_metrics(const std::vector<int>& preds, const std::vector<int>& labels) {
    MetricSet m;
    m.cm = confusion(preds, labels);
    const auto& c = m.cm;

    auto ratio = [&m](double num, double den) {
        if (den == 0.0) {
            m.zero_denominator = true;
            return 0.0;
        }
        return 100.0 * num / den;
    };
    auto f1 = [&m](double p, double r) {
        if (p + r == 0.0) {
            m.zero_denominator = true;
            return 0.0;
        }
        return 2.0 * p * r / (p + r);
    };

    const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
    const double tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
    m.precision_malicious = ratio(tp, tp + fp);
    m.recall_malicious = ratio(tp, tp + fn);
    m.f1_malicious = f1(m.precision_malicious, m.recall_malicious);
    m.precision_benign = ratio(tn, tn + fn);
    m.recall_benign = ratio(tn, tn + fp);
    m.f1_benign = f1(m.precision_benign, m.recall_benign);
    m.precision_macro = 0.5 * (m.precision_malicious + m.precision_benign);
    m.recall_macro = 0.5 * (m.recall_malicious + m.recall_benign);
    m.f1_macro = 0.5 * (m.f1_malicious + m.f1_benign);
    m.accuracy = 100.0 * (tp + tn) / static_cast<double>(c.total());
    m.detection_rate = m.recall_malicious;
    return m;
}

double significance_test(std::span<const double> metric_a, std::span<const double> metric_b) {
    if (metric_a.size() != metric_b.size()) {
        throw std::invalid_argument("significance_test: unpaired lengths");
    }
    if (metric_a.size() < 5) {
        throw std::invalid_argument("significance_test: need at least 5 paired runs");
    }
    const std::size_t n = metric_a.size();
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = metric_a[i] - metric_b[i];
    const double observed = std::fabs(std::accumulate(diff.begin(), diff.end(), 0.0));

    std::size_t hits = 0, trials = 0;
    if (n <= 16) {
        const std::size_t combos = std::size_t{1} << n;
        for (std::size_t mask = 0; mask < combos; ++mask) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                s += (mask >> i) & 1 ? -diff[i] : diff[i];
            }
            if (std::fabs(s) >= observed - 1e-12) ++hits;
        }
        trials = combos;
    } else {
        RngStream rng(0x9e11a7u); // fixed: the test itself is deterministic
        trials = 100000;
        for (std::size_t t = 0; t < trials; ++t) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                s += (rng.next_u64() & 1) ? -diff[i] : diff[i];
            }
            if (std::fabs(s) >= observed - 1e-12) ++hits;
        }
        // count the identity assignment so a sampled p-value is never 0,
        // matching the exact path where mask 0 always hits
        ++hits;
        ++trials;
    }
    return static_cast<double>(hits) / static_cast<double>(trials);
}

// ---------------------------------------------------------------------------
// EvalReport

const MetricSet& EvalReport::cell(const std::string& model, const std::string& condition) const {
    auto it = cells.find(model + "|" + condition);
    if (it == cells.end()) {
        throw std::out_of_range("EvalReport: missing cell " + model + "|" + condition);
    }
    return it->second;
}

void EvalReport::set_cell(const std::string& model, const std::string& condition, MetricSet m) {
    cells[model + "|" + condition] = m;
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json jcells = nlohmann::json::object();
    for (const auto& [key, m] : cells) {
        jcells[key] = {{"tp", m.cm.tp},
                       {"fp", m.cm.fp},
                       {"tn", m.cm.tn},
                       {"fn", m.cm.fn},
                       {"precision_malicious", m.precision_malicious},
                       {"recall_malicious", m.recall_malicious},
                       {"f1_malicious", m.f1_malicious},
                       {"precision_benign", m.precision_benign},
                       {"recall_benign", m.recall_benign},
                       {"f1_benign", m.f1_benign},
                       {"precision_macro", m.precision_macro},
                       {"recall_macro", m.recall_macro},
                       {"f1_macro", m.f1_macro},
                       {"accuracy", m.accuracy},
                       {"detection_rate", m.detection_rate},
                       {"zero_denominator", m.zero_denominator}};
    }
    return {{"format", "nids-report"}, {"version", 1},     {"kind", kind},
            {"models", models},        {"conditions", conditions}, {"cells", jcells},
            {"metadata", metadata}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "nids-report") {
        throw std::runtime_error("EvalReport: bad format tag");
    }
    EvalReport r;
    r.kind = j.at("kind").get<std::string>();
    r.models = j.at("models").get<std::vector<std::string>>();
    r.conditions = j.at("conditions").get<std::vector<std::string>>();
    r.metadata = j.value("metadata", nlohmann::json::object());
    for (const auto& [key, e] : j.at("cells").items()) {
        MetricSet m;
        m.cm.tp = e.at("tp").get<std::size_t>();
        m.cm.fp = e.at("fp").get<std::size_t>();
        m.cm.tn = e.at("tn").get<std::size_t>();
        m.cm.fn = e.at("fn").get<std::size_t>();
        m.precision_malicious = e.at("precision_malicious").get<double>();
        m.recall_malicious = e.at("recall_malicious").get<double>();
        m.f1_malicious = e.at("f1_malicious").get<double>();
        m.precision_benign = e.at("precision_benign").get<double>();
        m.recall_benign = e.at("recall_benign").get<double>();
        m.f1_benign = e.at("f1_benign").get<double>();
        m.precision_macro = e.at("precision_macro").get<double>();
        m.recall_macro = e.at("recall_macro").get<double>();
        m.f1_macro = e.at("f1_macro").get<double>();
        m.accuracy = e.at("accuracy").get<double>();
        m.detection_rate = e.at("detection_rate").get<double>();
        m.zero_denominator = e.at("zero_denominator").get<bool>();
        r.cells[key] = m;
    }
    return r;
}

void EvalReport::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("EvalReport: cannot write " + path);
    out << to_json().dump(2) << "\n";
}

EvalReport EvalReport::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("EvalReport: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

// ---------------------------------------------------------------------------
// harness

ClassifierSpec HarnessConfig::fgsm_target_spec() {
    ClassifierSpec spec = ClassifierSpec::defaults(Algorithm::MLP);
    spec.params["hidden"] = 64;
    spec.params["hidden2"] = 32;
    return spec;
}

namespace {

std::pair<LabeledDataset, LabeledDataset> split_by_label(const LabeledDataset& data) {
    std::vector<std::size_t> mal, ben;
    for (std::size_t i = 0; i < data.size(); ++i) {
        (data.labels[i] == 1 ? mal : ben).push_back(i);
    }
    return {select_rows(data, mal), select_rows(data, ben)};
}

MetricSet evaluate_preds(const std::vector<int>& preds, const std::vector<int>& labels) {
    return compute_metrics(preds, labels);
}

} // namespace

TwoLayerDetector train_detector(const LabeledDataset& stack_train,
                                const LabeledDataset& original_train, const HarnessConfig& cfg,
                                RngStream& rng) {
    TwoLayerDetector det;
    RngStream stack_rng = rng.child(10);
    det.stacking = train_stacking(stack_train, cfg.stacking, stack_rng);

    // Autoencoder stays benign-only: 80/20 split of the original benign rows,
    // the held-out fifth calibrates beta.
    auto [mal, ben] = split_by_label(original_train);
    (void)mal;
    std::vector<std::size_t> idx(ben.size());
    std::iota(idx.begin(), idx.end(), 0);
    RngStream split_rng = rng.child(11);
    split_rng.shuffle(idx);
    const std::size_t n_fit = (ben.size() * 4) / 5;
    const LabeledDataset ae_fit =
        select_rows(ben, std::vector<std::size_t>(idx.begin(),
                                                  idx.begin() + static_cast<std::ptrdiff_t>(n_fit)));
    const LabeledDataset ae_val =
        select_rows(ben, std::vector<std::size_t>(idx.begin() + static_cast<std::ptrdiff_t>(n_fit),
                                                  idx.end()));
    RngStream ae_rng = rng.child(12);
    det.ae = train_autoencoder(ae_fit, cfg.ae, ae_rng);
    det.ae.threshold = calibrate_threshold(det.ae, ae_val);
    return det;
}

LabeledDataset condition_test_set(const LabeledDataset& test, const std::string& condition,
                                  const AdversarialBatch* gan, const AdversarialBatch* fgsm) {
    if (condition == kConditionUnmodified) return test;

    std::vector<std::size_t> ben;
    for (std::size_t i = 0; i < test.size(); ++i) {
        if (test.labels[i] == 0) ben.push_back(i);
    }
    const LabeledDataset benign = select_rows(test, ben);

    std::vector<const AdversarialBatch*> batches;
    if (condition == kConditionGan) {
        batches = {gan};
    } else if (condition == kConditionFgsm) {
        batches = {fgsm};
    } else if (condition == kConditionAll) {
        batches = {gan, fgsm};
    } else {
        throw std::invalid_argument("condition_test_set: unknown condition '" + condition + "'");
    }
    std::size_t adv_rows = 0;
    for (const auto* b : batches) {
        if (!b) throw std::invalid_argument("condition_test_set: missing attack batch");
        adv_rows += b->size();
    }

    LabeledDataset out;
    out.schema = test.schema;
    out.features = Matrix(benign.size() + adv_rows, test.dim());
    out.labels.reserve(benign.size() + adv_rows);
    std::size_t r = 0;
    for (std::size_t i = 0; i < benign.size(); ++i, ++r) {
        const auto src = benign.features.row(i);
        std::copy(src.begin(), src.end(), out.features.row(r).begin());
        out.labels.push_back(0);
    }
    for (const auto* b : batches) {
        for (std::size_t i = 0; i < b->size(); ++i, ++r) {
            const auto src = b->features.row(i);
            std::copy(src.begin(), src.end(), out.features.row(r).begin());
            out.labels.push_back(1);
        }
    }
    return out;
}

AttackArtifacts build_attacks(const HarnessInputs& in, const HarnessConfig& cfg) {
    RngStream rng(cfg.seed);
    AttackArtifacts art;

    RngStream mlp_rng = rng.child(1);
    art.target_mlp = train_classifier(cfg.target_mlp, in.train, mlp_rng);

    RngStream ens_rng = rng.child(2);
    art.ensemble = train_voting_ensemble(in.train, ens_rng);

    auto [train_mal, train_ben] = split_by_label(in.train);
    auto [test_mal, test_ben] = split_by_label(in.test);
    (void)test_ben;

    RngStream gan_rng = rng.child(3);
    art.gan = train_gan(train_mal, train_ben, art.ensemble, cfg.gan, gan_rng, in.pipe);

    RngStream g1 = rng.child(4), g2 = rng.child(5);
    art.gan_train = generate_adversarial(art.gan, train_mal, g1);
    art.gan_test = generate_adversarial(art.gan, test_mal, g2);

    const auto mask = mutable_mask_from_schema(in.train.schema);
    const MlpNetwork& net = mlp_network_of(*art.target_mlp);
    art.fgsm_train = fgsm_batch(net, train_mal, cfg.fgsm_eps, mask, in.pipe);
    art.fgsm_test = fgsm_batch(net, test_mal, cfg.fgsm_eps, mask, in.pipe);
    return art;
}

EvalReport run_experiment(const HarnessInputs& in, const HarnessConfig& cfg) {
    return run_experiment(in, cfg, build_attacks(in, cfg));
}

EvalReport run_experiment(const HarnessInputs& in, const HarnessConfig& cfg,
                          const AttackArtifacts& attacks) {
    RngStream rng(cfg.seed ^ 0x5eedf00dull);

    EvalReport report;
    report.kind = "experiment";
    report.conditions = {kConditionUnmodified, kConditionGan, kConditionFgsm, kConditionAll};

    // Baselines on the clean training set.
    std::vector<std::pair<std::string, ModelPtr>> models;
    for (std::size_t i = 0; i < cfg.baseline_models.size(); ++i) {
        RngStream m_rng = rng.child(100 + i);
        const ClassifierSpec spec = ClassifierSpec::defaults(cfg.baseline_models[i]);
        models.emplace_back(algorithm_name(cfg.baseline_models[i]),
                            train_classifier(spec, in.train, m_rng));
    }

    // The proposed detector: adversarially trained stacking + AE gate.
    RngStream aug_rng = rng.child(200);
    const AugmentedTrainSet augmented = adversarial_augment(
        in.train, {attacks.gan_train, attacks.fgsm_train}, cfg.augment_fraction, aug_rng);
    RngStream det_rng = rng.child(201);
    const TwoLayerDetector detector = train_detector(augmented.data, in.train, cfg, det_rng);

    for (const auto& [name, model] : models) report.models.push_back(name);
    report.models.push_back("Ours");

    for (const auto& condition : report.conditions) {
        const LabeledDataset eval_set =
            condition_test_set(in.test, condition, &attacks.gan_test, &attacks.fgsm_test);
        for (const auto& [name, model] : models) {
            report.set_cell(name, condition,
                            evaluate_preds(predict_batch(*model, eval_set.features),
                                           eval_set.labels));
        }
        report.set_cell("Ours", condition,
                        evaluate_preds(two_layer_classify_batch(detector, eval_set.features),
                                       eval_set.labels));
    }

    report.metadata = {{"seed", cfg.seed},
                       {"train_rows", in.train.size()},
                       {"test_rows", in.test.size()},
                       {"fgsm_eps", cfg.fgsm_eps},
                       {"augment_fraction", cfg.augment_fraction},
                       {"split", in.split_note},
                       {"scaling_stats", "training-only"},
                       {"gan_epochs", cfg.gan.epochs}};
    return report;
}

EvalReport run_ablation(const HarnessInputs& in, const HarnessConfig& cfg) {
    return run_ablation(in, cfg, build_attacks(in, cfg));
}

EvalReport run_ablation(const HarnessInputs& in, const HarnessConfig& cfg,
                        const AttackArtifacts& attacks) {
    RngStream rng(cfg.seed ^ 0xab1a7e0full);

    RngStream aug_rng = rng.child(1);
    const AugmentedTrainSet augmented = adversarial_augment(
        in.train, {attacks.gan_train, attacks.fgsm_train}, cfg.augment_fraction, aug_rng);

    RngStream clean_rng = rng.child(2);
    const TwoLayerDetector det_clean = train_detector(in.train, in.train, cfg, clean_rng);
    RngStream at_rng = rng.child(3);
    const TwoLayerDetector det_at = train_detector(augmented.data, in.train, cfg, at_rng);

    const LabeledDataset eval_set =
        condition_test_set(in.test, kConditionAll, &attacks.gan_test, &attacks.fgsm_test);

    auto stacking_preds = [&](const StackingModel& sc) {
        std::vector<int> preds(eval_set.size());
        for (std::size_t i = 0; i < eval_set.size(); ++i) {
            preds[i] = sc.predict(eval_set.features.row(i));
        }
        return preds;
    };

    EvalReport report;
    report.kind = "ablation";
    report.models = {"SC", "SC+AE", "SC+AT", "SC+AT+AE"};
    report.conditions = {kConditionAll};
    report.set_cell("SC", kConditionAll,
                    evaluate_preds(stacking_preds(det_clean.stacking), eval_set.labels));
    report.set_cell("SC+AE", kConditionAll,
                    evaluate_preds(two_layer_classify_batch(det_clean, eval_set.features),
                                   eval_set.labels));
    report.set_cell("SC+AT", kConditionAll,
                    evaluate_preds(stacking_preds(det_at.stacking), eval_set.labels));
    report.set_cell("SC+AT+AE", kConditionAll,
                    evaluate_preds(two_layer_classify_batch(det_at, eval_set.features),
                                   eval_set.labels));

    report.metadata = {{"seed", cfg.seed},
                       {"train_rows", in.train.size()},
                       {"test_rows", in.test.size()},
                       {"fgsm_eps", cfg.fgsm_eps},
                       {"augment_fraction", cfg.augment_fraction},
                       {"split", in.split_note},
                       {"condition", kConditionAll}};
    return report;
}

// ---------------------------------------------------------------------------
// rendering

namespace {

void render_csv(const EvalReport& r, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("render_report: cannot write " + path.string());
    out << "model,condition,precision,recall,f1,precision_malicious,recall_malicious,"
           "f1_malicious,precision_benign,recall_benign,f1_benign,accuracy,detection_rate,"
           "zero_denominator\n";
    for (const auto& model : r.models) {
        for (const auto& condition : r.conditions) {
            const MetricSet& m = r.cell(model, condition);
            out << model << "," << condition << "," << fmt2(m.precision_macro) << ","
                << fmt2(m.recall_macro) << "," << fmt2(m.f1_macro) << ","
                << fmt2(m.precision_malicious) << "," << fmt2(m.recall_malicious) << ","
                << fmt2(m.f1_malicious) << "," << fmt2(m.precision_benign) << ","
                << fmt2(m.recall_benign) << "," << fmt2(m.f1_benign) << "," << fmt2(m.accuracy)
                << "," << fmt2(m.detection_rate) << "," << (m.zero_denominator ? 1 : 0) << "\n";
        }
    }
}

void render_markdown(const EvalReport& r, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("render_report: cannot write " + path.string());
    if (r.kind == "ablation") {
        out << "| Variant | DR |\n|---|---|\n";
        for (const auto& model : r.models) {
            out << "| " << model << " | " << fmt2(r.cell(model, r.conditions[0]).detection_rate)
                << " |\n";
        }
        return;
    }
    out << "| Model |";
    for (const auto& c : r.conditions) out << " " << c << " P | R | F1 |";
    out << "\n|---|";
    for (std::size_t i = 0; i < r.conditions.size() * 3; ++i) out << "---|";
    out << "\n";
    for (const auto& model : r.models) {
        out << "| " << model << " |";
        for (const auto& c : r.conditions) {
            const MetricSet& m = r.cell(model, c);
            out << " " << fmt2(m.precision_macro) << " | " << fmt2(m.recall_macro) << " | "
                << fmt2(m.f1_macro) << " |";
        }
        out << "\n";
    }
}

void render_svg(const EvalReport& r, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("render_report: cannot write " + path.string());
    static const char* palette[] = {"#4878cf", "#d65f5f", "#6acc65", "#b47cc7"};
    const double bar_w = 16.0, gap = 6.0, group_gap = 28.0;
    const double plot_h = 220.0, base_y = 250.0, left = 50.0;
    const double group_w =
        static_cast<double>(r.conditions.size()) * (bar_w + gap) - gap + group_gap;
    const double width = left + static_cast<double>(r.models.size()) * group_w + 40.0;

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << static_cast<int>(width)
        << "\" height=\"300\">\n";
    out << "<line x1=\"" << left - 8 << "\" y1=\"" << base_y << "\" x2=\"" << width - 20
        << "\" y2=\"" << base_y << "\" stroke=\"#333\"/>\n";
    for (std::size_t mi = 0; mi < r.models.size(); ++mi) {
        const double gx = left + static_cast<double>(mi) * group_w;
        out << "<g class=\"bargroup\" data-model=\"" << r.models[mi] << "\">\n";
        for (std::size_t ci = 0; ci < r.conditions.size(); ++ci) {
            const double dr = r.cell(r.models[mi], r.conditions[ci]).detection_rate;
            const double h = plot_h * dr / 100.0;
            out << "  <rect class=\"bar\" data-condition=\"" << r.conditions[ci] << "\" x=\""
                << fmt2(gx + static_cast<double>(ci) * (bar_w + gap)) << "\" y=\""
                << fmt2(base_y - h) << "\" width=\"" << fmt2(bar_w) << "\" height=\"" << fmt2(h)
                << "\" fill=\"" << palette[ci % 4] << "\"/>\n";
        }
        out << "  <text x=\"" << fmt2(gx) << "\" y=\"270\" font-size=\"11\">" << r.models[mi]
            << "</text>\n";
        out << "</g>\n";
    }
    out << "</svg>\n";
}

} // namespace

void render_report(const EvalReport& report, const std::string& outdir) {
    const fs::path root(outdir);
    fs::create_directories(root / "tables");
    fs::create_directories(root / "figures");
    const std::string stem = report.kind;
    render_csv(report, root / "tables" / (stem + ".csv"));
    render_markdown(report, root / "tables" / (stem + ".md"));
    render_svg(report, root / "figures" / (stem + "_detection_rate.svg"));

    nlohmann::json manifest = {{"kind", report.kind},
                               {"models", report.models},
                               {"conditions", report.conditions},
                               {"metadata", report.metadata},
                               {"report_checksum", fnv1a64_hex(report.to_json().dump())}};
    std::ofstream out(root / "manifest.json");
    if (!out) throw std::runtime_error("render_report: cannot write manifest");
    out << manifest.dump(2) << "\n";
}

} // namespace nids
