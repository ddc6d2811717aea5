#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "nids/dataio.hpp"
#include "nids/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

using namespace nids;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const auto path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path);
    out << content;
    return path;
}

FeatureSchema toy_schema() {
    FeatureSchema s;
    s.columns = {{"proto", ColumnKind::Categorical, Mutability::Immutable},
                 {"rate", ColumnKind::Numeric, Mutability::Mutable},
                 {"label", ColumnKind::Label, Mutability::NotApplicable}};
    return s;
}

} // namespace

TEST_CASE("schema validation") {
    FeatureSchema s = toy_schema();
    CHECK_NOTHROW(s.validate());

    FeatureSchema no_label = s;
    no_label.columns.pop_back();
    CHECK_THROWS_AS(no_label.validate(), std::invalid_argument);

    FeatureSchema dup = s;
    dup.columns.push_back({"proto", ColumnKind::Numeric, Mutability::Mutable});
    CHECK_THROWS_AS(dup.validate(), std::invalid_argument);

    FeatureSchema unassigned = s;
    unassigned.columns[1].mutability = Mutability::NotApplicable;
    CHECK_THROWS_AS(unassigned.validate(), std::invalid_argument);
}

TEST_CASE("mutable/immutable partition covers all features disjointly") {
    const FeatureSchema s = synth_schema();
    const auto mut = s.mutable_feature_indices();
    const auto imm = s.immutable_feature_indices();
    std::set<std::size_t> seen;
    for (std::size_t f : mut) CHECK(seen.insert(f).second);
    for (std::size_t f : imm) CHECK(seen.insert(f).second);
    CHECK(seen.size() == s.feature_count());
}

TEST_CASE("load_dataset parses rows, header, and binary collapse") {
    const auto path = write_temp("nids_toy.csv",
                                 "proto,rate,label\n"
                                 "tcp,1.5,normal\n"
                                 "udp,2.5,neptune\n"
                                 "tcp,0.5,normal\n");
    const RawDataset raw = load_dataset(path, toy_schema());
    REQUIRE(raw.rows.size() == 3);
    CHECK(collapse_label(raw.rows[0][2]) == 0);
    CHECK(collapse_label(raw.rows[1][2]) == 1);
    CHECK(collapse_label(raw.rows[2][2]) == 0);
}

TEST_CASE("load_dataset header-only file gives zero rows") {
    const auto path = write_temp("nids_empty.csv", "proto,rate,label\n");
    CHECK(load_dataset(path, toy_schema()).rows.empty());
}

TEST_CASE("load_dataset names the offending line on arity errors") {
    const auto path = write_temp("nids_bad.csv",
                                 "tcp,1.5,normal\n"
                                 "udp,2.5\n");
    try {
        load_dataset(path, toy_schema());
        FAIL("expected parse error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("binary collapse is idempotent") {
    CHECK(collapse_label("0") == 0);
    CHECK(collapse_label("1") == 1);
    CHECK(collapse_label("normal") == 0);
    CHECK(collapse_label("neptune") == 1);
}

TEST_CASE("schema save/load round trip") {
    const auto path = (std::filesystem::temp_directory_path() / "nids_schema.json").string();
    const FeatureSchema s = synth_schema();
    s.save(path);
    const FeatureSchema loaded = FeatureSchema::load(path);
    REQUIRE(loaded.columns.size() == s.columns.size());
    for (std::size_t i = 0; i < s.columns.size(); ++i) {
        CHECK(loaded.columns[i].name == s.columns[i].name);
        CHECK(loaded.columns[i].kind == s.columns[i].kind);
        CHECK(loaded.columns[i].mutability == s.columns[i].mutability);
    }
}

namespace {

LabeledDataset toy_labeled(std::size_t n, double malicious_frac) {
    LabeledDataset d;
    d.schema = toy_schema();
    d.features = Matrix(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        d.features.at(i, 0) = static_cast<double>(i);
        d.features.at(i, 1) = static_cast<double>(i) * 0.5;
        d.labels.push_back(i < static_cast<std::size_t>(malicious_frac * n) ? 1 : 0);
    }
    return d;
}

} // namespace

TEST_CASE("stratified subsample preserves proportions") {
    LabeledDataset d = toy_labeled(100, 0.3);
    RngStream rng(3);
    const LabeledDataset sub = stratified_subsample(d, 10, rng);
    REQUIRE(sub.size() == 10);
    std::size_t mal = 0;
    for (int y : sub.labels) mal += y;
    CHECK(mal == 3);
}

TEST_CASE("stratified subsample full size is a permutation") {
    LabeledDataset d = toy_labeled(40, 0.25);
    RngStream rng(5);
    const LabeledDataset sub = stratified_subsample(d, 40, rng);
    std::multiset<double> orig, got;
    for (std::size_t i = 0; i < d.size(); ++i) orig.insert(d.features.at(i, 0));
    for (std::size_t i = 0; i < sub.size(); ++i) got.insert(sub.features.at(i, 0));
    CHECK(orig == got);
}

TEST_CASE("stratified subsample is deterministic per seed, no duplicate rows") {
    LabeledDataset d = toy_labeled(60, 0.5);
    RngStream r1(9), r2(9);
    const LabeledDataset a = stratified_subsample(d, 20, r1);
    const LabeledDataset b = stratified_subsample(d, 20, r2);
    std::multiset<double> ma, mb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma.insert(a.features.at(i, 0));
        mb.insert(b.features.at(i, 0));
    }
    CHECK(ma == mb);
    // row ids are distinct source rows
    std::set<double> uniq(ma.begin(), ma.end());
    CHECK(uniq.size() == ma.size());

    CHECK_THROWS_AS(stratified_subsample(d, 61, r1), std::invalid_argument);
}
