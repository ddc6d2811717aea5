#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "nids/preprocess.hpp"
#include "nids/rng.hpp"
#include "nids/synth.hpp"

#include <cmath>
#include <filesystem>

using namespace nids;

namespace {

FeatureSchema mixed_schema() {
    FeatureSchema s;
    s.columns = {{"proto", ColumnKind::Categorical, Mutability::Immutable},
                 {"rate", ColumnKind::Numeric, Mutability::Mutable},
                 {"konst", ColumnKind::Numeric, Mutability::Mutable},
                 {"label", ColumnKind::Label, Mutability::NotApplicable}};
    return s;
}

RawDataset mixed_raw() {
    RawDataset raw;
    raw.schema = mixed_schema();
    raw.rows = {{"tcp", "1", "5", "normal"},
                {"udp", "", "5", "neptune"},
                {"tcp", "3", "5", "normal"}};
    return raw;
}

} // namespace

TEST_CASE("fit computes medians, modes and first-appearance ordinals") {
    const FittedPipeline pipe = FittedPipeline::fit(mixed_raw());
    const auto& cols = pipe.columns();
    REQUIRE(cols.size() == 3);

    CHECK(cols[0].categorical);
    CHECK(cols[0].mode == "tcp");
    CHECK(cols[0].ordinal_map.at("tcp") == 0);
    CHECK(cols[0].ordinal_map.at("udp") == 1);

    // median of {1, 3} ignoring the missing cell
    CHECK(cols[1].median == doctest::Approx(2.0));

    CHECK(cols[2].constant);
}

TEST_CASE("fit rejects an entirely missing column") {
    RawDataset raw;
    raw.schema = mixed_schema();
    raw.rows = {{"tcp", "", "5", "normal"}, {"udp", "", "5", "neptune"}};
    try {
        FittedPipeline::fit(raw);
        FAIL("expected error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("rate") != std::string::npos);
    }
}

TEST_CASE("transform standardizes with population std") {
    RawDataset raw;
    raw.schema = mixed_schema();
    raw.rows = {{"tcp", "1", "5", "normal"},
                {"tcp", "2", "5", "normal"},
                {"tcp", "3", "5", "neptune"}};
    const FittedPipeline pipe = FittedPipeline::fit(raw);
    const LabeledDataset out = pipe.transform(raw);
    CHECK(out.features.at(0, 1) == doctest::Approx(-1.2247).epsilon(1e-4));
    CHECK(out.features.at(1, 1) == doctest::Approx(0.0));
    CHECK(out.features.at(2, 1) == doctest::Approx(1.2247).epsilon(1e-4));
    // constant column centers to zero
    for (std::size_t i = 0; i < 3; ++i) CHECK(out.features.at(i, 2) == doctest::Approx(0.0));
    CHECK(out.labels == std::vector<int>{0, 0, 1});
}

TEST_CASE("unseen category maps to the reserved unknown ordinal") {
    const FittedPipeline pipe = FittedPipeline::fit(mixed_raw());
    RawDataset test;
    test.schema = mixed_schema();
    test.rows = {{"sctp", "2", "5", "neptune"}};
    const LabeledDataset out = pipe.transform(test);
    const auto& proto = pipe.columns()[0];
    const double expected = proto.standardize(static_cast<double>(proto.unknown_ordinal));
    CHECK(out.features.at(0, 0) == doctest::Approx(expected));
}

TEST_CASE("transform is deterministic and training columns are standardized") {
    SynthConfig cfg;
    cfg.rows = 400;
    cfg.missing_rate = 0.02;
    cfg.seed = 17;
    const RawDataset raw = synth_raw(cfg);
    const FittedPipeline pipe = FittedPipeline::fit(raw);
    const LabeledDataset a = pipe.transform(raw);
    const LabeledDataset b = pipe.transform(raw);
    CHECK(a.features.values() == b.features.values());

    for (std::size_t f = 0; f < pipe.feature_count(); ++f) {
        if (pipe.columns()[f].constant) continue;
        double mean = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) mean += a.features.at(i, f);
        mean /= static_cast<double>(a.size());
        double var = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            var += (a.features.at(i, f) - mean) * (a.features.at(i, f) - mean);
        }
        var /= static_cast<double>(a.size());
        CHECK(std::fabs(mean) < 1e-9);
        CHECK(std::fabs(std::sqrt(var) - 1.0) < 1e-9);
    }
}

TEST_CASE("imputation never alters non-missing entries") {
    RawDataset raw;
    raw.schema = mixed_schema();
    raw.rows = {{"tcp", "10", "5", "normal"},
                {"udp", "", "5", "neptune"},
                {"tcp", "30", "5", "normal"}};
    const FittedPipeline pipe = FittedPipeline::fit(raw);
    const LabeledDataset out = pipe.transform(raw);
    const auto& rate = pipe.columns()[1];
    CHECK(out.features.at(0, 1) == doctest::Approx(rate.standardize(10.0)));
    CHECK(out.features.at(2, 1) == doctest::Approx(rate.standardize(30.0)));
    CHECK(out.features.at(1, 1) == doctest::Approx(rate.standardize(rate.median)));
}

TEST_CASE("clip_to_domain clamps to the standardized training range") {
    const FittedPipeline pipe = FittedPipeline::fit(mixed_raw());
    const std::size_t d = pipe.feature_count();

    std::vector<double> inside(d, 0.0);
    const auto same = pipe.clip_to_domain(inside);
    CHECK(same == inside);

    std::vector<double> high(d, 0.0);
    high[1] = pipe.columns()[1].clip_hi() + 10.0;
    const auto clipped = pipe.clip_to_domain(high);
    CHECK(clipped[1] == doctest::Approx(pipe.columns()[1].clip_hi()));

    RngStream rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(d);
        for (double& v : x) v = rng.uniform(-50.0, 50.0);
        const auto c = pipe.clip_to_domain(x);
        for (std::size_t f = 0; f < d; ++f) {
            CHECK(c[f] >= pipe.columns()[f].clip_lo() - 1e-12);
            CHECK(c[f] <= pipe.columns()[f].clip_hi() + 1e-12);
        }
    }
}

TEST_CASE("pipeline serialization reproduces transforms exactly") {
    SynthConfig cfg;
    cfg.rows = 200;
    cfg.seed = 5;
    const RawDataset raw = synth_raw(cfg);
    const FittedPipeline pipe = FittedPipeline::fit(raw);
    const auto path = (std::filesystem::temp_directory_path() / "nids_pipe.json").string();
    pipe.save(path);
    const FittedPipeline loaded = FittedPipeline::load(path);
    CHECK(loaded.checksum() == pipe.checksum());
    CHECK(loaded.transform(raw).features.values() == pipe.transform(raw).features.values());
}
