#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "nids/eval.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace nids;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

MetricSet dummy_metrics(double dr) {
    std::vector<int> labels, preds;
    // 10 malicious rows; dr percent of them detected
    const int hits = static_cast<int>(dr / 10.0);
    for (int i = 0; i < 10; ++i) {
        labels.push_back(1);
        preds.push_back(i < hits ? 1 : 0);
    }
    labels.push_back(0);
    preds.push_back(0);
    return compute_metrics(preds, labels);
}

} // namespace

TEST_CASE("confusion counting") {
    const std::vector<int> preds{1, 1, 0, 0, 1, 0};
    const std::vector<int> labels{1, 0, 1, 0, 1, 0};
    const ConfusionMatrix cm = confusion(preds, labels);
    CHECK(cm.tp == 2);
    CHECK(cm.fp == 1);
    CHECK(cm.fn == 1);
    CHECK(cm.tn == 2);
    CHECK(cm.total() == 6);
    CHECK_THROWS_AS(confusion({1}, {1, 0}), std::invalid_argument);
}

TEST_CASE("metric worked example") {
    // tp=8 fn=2 fp=1 tn=9
    std::vector<int> labels, preds;
    for (int i = 0; i < 8; ++i) { labels.push_back(1); preds.push_back(1); }
    for (int i = 0; i < 2; ++i) { labels.push_back(1); preds.push_back(0); }
    labels.push_back(0); preds.push_back(1);
    for (int i = 0; i < 9; ++i) { labels.push_back(0); preds.push_back(0); }

    const MetricSet m = compute_metrics(preds, labels);
    CHECK(m.precision_malicious == doctest::Approx(100.0 * 8.0 / 9.0).epsilon(1e-12));
    CHECK(m.recall_malicious == doctest::Approx(80.0).epsilon(1e-12));
    CHECK(m.detection_rate == doctest::Approx(80.0).epsilon(1e-12));
    CHECK(m.precision_benign == doctest::Approx(100.0 * 9.0 / 11.0).epsilon(1e-12));
    CHECK(m.recall_benign == doctest::Approx(90.0).epsilon(1e-12));
    CHECK(m.accuracy == doctest::Approx(85.0).epsilon(1e-12));
    const double f1_mal = 2 * m.precision_malicious * m.recall_malicious /
                          (m.precision_malicious + m.recall_malicious);
    CHECK(m.f1_malicious == doctest::Approx(f1_mal).epsilon(1e-12));
    CHECK(m.precision_macro ==
          doctest::Approx(0.5 * (m.precision_malicious + m.precision_benign)).epsilon(1e-12));
    CHECK(m.f1_macro == doctest::Approx(0.5 * (m.f1_malicious + m.f1_benign)).epsilon(1e-12));
    CHECK_FALSE(m.zero_denominator);
}

TEST_CASE("perfect and degenerate metric cases") {
    const MetricSet perfect = compute_metrics({1, 0, 1, 0}, {1, 0, 1, 0});
    CHECK(perfect.accuracy == 100.0);
    CHECK(perfect.f1_macro == 100.0);
    CHECK(perfect.detection_rate == 100.0);
    CHECK_FALSE(perfect.zero_denominator);

    // never predicts malicious: malicious precision denominator is zero
    const MetricSet shy = compute_metrics({0, 0, 0}, {1, 1, 0});
    CHECK(shy.precision_malicious == 0.0);
    CHECK(shy.detection_rate == 0.0);
    CHECK(shy.zero_denominator);
}

TEST_CASE("relabeling both classes swaps the per-class metrics") {
    RngStream rng(5);
    std::vector<int> preds, labels;
    for (int i = 0; i < 200; ++i) {
        preds.push_back(static_cast<int>(rng.index(2)));
        labels.push_back(static_cast<int>(rng.index(2)));
    }
    std::vector<int> preds_f = preds, labels_f = labels;
    for (int& v : preds_f) v = 1 - v;
    for (int& v : labels_f) v = 1 - v;
    const MetricSet a = compute_metrics(preds, labels);
    const MetricSet b = compute_metrics(preds_f, labels_f);
    CHECK(a.precision_malicious == doctest::Approx(b.precision_benign).epsilon(1e-12));
    CHECK(a.recall_malicious == doctest::Approx(b.recall_benign).epsilon(1e-12));
    CHECK(a.f1_benign == doctest::Approx(b.f1_malicious).epsilon(1e-12));
    CHECK(a.accuracy == doctest::Approx(b.accuracy).epsilon(1e-12));
    CHECK(a.f1_macro == doctest::Approx(b.f1_macro).epsilon(1e-12));
}

TEST_CASE("permutation test: identical samples give p = 1") {
    const std::vector<double> a{60, 61, 62, 63, 64, 65};
    CHECK(significance_test(a, a) == doctest::Approx(1.0));
}

TEST_CASE("permutation test: a consistent shift is significant") {
    // 10 pairs, every difference positive: exact p = 2 / 2^10
    std::vector<double> a, b;
    for (int i = 0; i < 10; ++i) {
        a.push_back(80.0 + i);
        b.push_back(60.0 + 0.5 * i);
    }
    const double p = significance_test(a, b);
    CHECK(p == doctest::Approx(2.0 / 1024.0).epsilon(1e-9));
    CHECK(significance_test(b, a) == doctest::Approx(p).epsilon(1e-12));
}

TEST_CASE("permutation test: sampled path is deterministic and sane") {
    std::vector<double> a, b;
    RngStream rng(3);
    for (int i = 0; i < 24; ++i) { // beyond the exact-enumeration cutoff
        const double base = rng.normal();
        a.push_back(base + 1.0 + 0.1 * rng.normal());
        b.push_back(base);
    }
    const double p1 = significance_test(a, b);
    const double p2 = significance_test(a, b);
    CHECK(p1 == p2);
    CHECK(p1 > 0.0);
    CHECK(p1 < 0.05);

    CHECK_THROWS_AS(significance_test(std::vector<double>{1, 2}, std::vector<double>{3, 4}),
                    std::invalid_argument);
    CHECK_THROWS_AS(significance_test(std::vector<double>{1, 2, 3},
                                      std::vector<double>{1, 2}),
                    std::invalid_argument);
}

TEST_CASE("report round trip and cell lookup") {
    EvalReport r;
    r.kind = "experiment";
    r.models = {"DT", "Ours"};
    r.conditions = {kConditionUnmodified, kConditionAll};
    r.set_cell("DT", kConditionUnmodified, dummy_metrics(90));
    r.set_cell("DT", kConditionAll, dummy_metrics(40));
    r.set_cell("Ours", kConditionUnmodified, dummy_metrics(100));
    r.set_cell("Ours", kConditionAll, dummy_metrics(90));
    r.metadata = {{"seed", 7}};

    const auto path = (std::filesystem::temp_directory_path() / "nids_report.json").string();
    r.save(path);
    const EvalReport back = EvalReport::load(path);
    CHECK(back.kind == r.kind);
    CHECK(back.models == r.models);
    CHECK(back.conditions == r.conditions);
    CHECK(back.cell("DT", kConditionAll).detection_rate ==
          doctest::Approx(r.cell("DT", kConditionAll).detection_rate));
    CHECK(back.cell("Ours", kConditionUnmodified).cm.tp ==
          r.cell("Ours", kConditionUnmodified).cm.tp);
    CHECK(back.metadata.at("seed").get<int>() == 7);
    CHECK_THROWS_AS(r.cell("RF", kConditionAll), std::out_of_range);
}

TEST_CASE("rendering is byte deterministic and well formed") {
    EvalReport r;
    r.kind = "experiment";
    r.models = {"DT", "KNN", "Ours"};
    r.conditions = {kConditionUnmodified, kConditionGan, kConditionFgsm, kConditionAll};
    int dr = 30;
    for (const auto& m : r.models) {
        for (const auto& c : r.conditions) {
            r.set_cell(m, c, dummy_metrics(dr));
            dr = (dr + 10) % 100;
        }
    }
    r.metadata = {{"seed", 1}};

    const auto base = std::filesystem::temp_directory_path() / "nids_render";
    std::filesystem::remove_all(base);
    render_report(r, (base / "a").string());
    render_report(r, (base / "b").string());

    for (const char* rel : {"tables/experiment.csv", "tables/experiment.md",
                            "figures/experiment_detection_rate.svg", "manifest.json"}) {
        CHECK(slurp(base / "a" / rel) == slurp(base / "b" / rel));
    }

    const std::string svg = slurp(base / "a" / "figures/experiment_detection_rate.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    for (const auto& m : r.models) {
        CHECK(svg.find("data-model=\"" + m + "\"") != std::string::npos);
    }
    for (const auto& c : r.conditions) {
        CHECK(svg.find("data-condition=\"" + c + "\"") != std::string::npos);
    }

    const std::string csv = slurp(base / "a" / "tables/experiment.csv");
    CHECK(csv.find("detection_rate") != std::string::npos);
    CHECK(csv.find("Ours") != std::string::npos);

    const std::string md = slurp(base / "a" / "tables/experiment.md");
    CHECK(md.find("| DT ") != std::string::npos);
}

TEST_CASE("condition sets keep benign rows and swap in attack batches") {
    LabeledDataset test;
    test.features = Matrix(6, 2, {0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5});
    test.labels = {0, 1, 0, 1, 0, 1}; // 3 benign, 3 malicious

    AdversarialBatch gan;
    gan.features = Matrix(3, 2, {10, 10, 11, 11, 12, 12});
    gan.labels.assign(3, 1);
    gan.provenance = AttackKind::GAN;
    AdversarialBatch fgsm;
    fgsm.features = Matrix(2, 2, {20, 20, 21, 21});
    fgsm.labels.assign(2, 1);
    fgsm.provenance = AttackKind::FGSM;

    const LabeledDataset un = condition_test_set(test, kConditionUnmodified, &gan, &fgsm);
    CHECK(un.size() == 6);
    CHECK(un.features.values() == test.features.values());

    const LabeledDataset g = condition_test_set(test, kConditionGan, &gan, &fgsm);
    CHECK(g.size() == 3 + 3);
    std::size_t mal = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.labels[i] == 1) {
            ++mal;
            CHECK(g.features.at(i, 0) >= 10.0); // replaced, not original malicious rows
        } else {
            CHECK(g.features.at(i, 0) <= 4.0); // benign rows untouched
        }
    }
    CHECK(mal == 3);

    const LabeledDataset f = condition_test_set(test, kConditionFgsm, &gan, &fgsm);
    CHECK(f.size() == 3 + 2);

    const LabeledDataset all = condition_test_set(test, kConditionAll, &gan, &fgsm);
    CHECK(all.size() == 3 + 3 + 2);
    mal = 0;
    for (int y : all.labels) mal += static_cast<std::size_t>(y);
    CHECK(mal == 5);

    CHECK_THROWS_AS(condition_test_set(test, "bogus", &gan, &fgsm), std::invalid_argument);
    CHECK_THROWS_AS(condition_test_set(test, kConditionGan, nullptr, &fgsm),
                    std::invalid_argument);
}
