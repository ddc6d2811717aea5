#pragma once

#include "nids/matrix.hpp"
#include "nids/rng.hpp"

#include <string>
#include <vector>

namespace nids {

enum class ColumnKind { Numeric, Categorical, Label, Ignored };
enum class Mutability { Mutable, Immutable, NotApplicable };

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::Numeric;
    Mutability mutability = Mutability::NotApplicable;
};

// Declares the dataset contract: column order, types, and the
// mutable/immutable feature partition used by the attack generators.
struct FeatureSchema {
    std::vector<ColumnSpec> columns;

    std::size_t label_index() const;
    // Indices into the *feature* vector (label/ignored columns excluded).
    std::vector<std::size_t> feature_column_indices() const;
    std::vector<std::size_t> mutable_feature_indices() const;
    std::vector<std::size_t> immutable_feature_indices() const;
    std::size_t feature_count() const { return feature_column_indices().size(); }

    // Validates: exactly one label, unique names, mutability set on every
    // non-label non-ignored column. Throws on violation.
    void validate() const;

    static FeatureSchema load(const std::string& path);
    void save(const std::string& path) const;
};

struct RawDataset {
    FeatureSchema schema;
    std::vector<std::vector<std::string>> rows; // missing markers preserved
};

struct LabeledDataset {
    Matrix features;            // n x d, fully numeric
    std::vector<int> labels;    // 1 = malicious, 0 = benign
    FeatureSchema schema;

    std::size_t size() const { return labels.size(); }
    std::size_t dim() const { return features.cols(); }
};

// Missing-value markers recognised in raw CSVs.
bool is_missing_marker(const std::string& cell);

// Collapses a raw label string to binary: the configured benign strings map
// to 0, anything else to 1. Idempotent on {"0","1"}.
int collapse_label(const std::string& raw);

// Reads a CSV against the schema. A header row is detected by comparing the
// first line against the schema column names. Wrong-arity rows raise a parse
// error naming the 1-based line number.
RawDataset load_dataset(const std::string& path, const FeatureSchema& schema);

// Class-proportional subsample (within +-1 sample), deterministic per seed.
LabeledDataset stratified_subsample(const LabeledDataset& data, std::size_t n, RngStream& rng);

// Row subset helper shared by eval/defense code.
LabeledDataset select_rows(const LabeledDataset& data, const std::vector<std::size_t>& idx);

std::string kind_name(ColumnKind k);
std::string mutability_name(Mutability m);

} // namespace nids
