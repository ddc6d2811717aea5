#include "nids/preprocess.hpp"

#include "nids/checksum.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace nids {

namespace {

double parse_number(const std::string& cell, const std::string& col) {
    try {
        std::size_t pos = 0;
        double v = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (...) {
        throw std::runtime_error("preprocess: column '" + col + "' has non-numeric cell '" + cell +
                                 "'");
    }
}

} // namespace

double ColumnStats::standardize(double raw) const {
    if (constant) return raw - mean;
    return (raw - mean) / stddev;
}

FittedPipeline FittedPipeline::fit(const RawDataset& train) {
    if (train.rows.empty()) throw std::invalid_argument("fit: empty training data");
    train.schema.validate();

    FittedPipeline pipe;
    pipe.schema_ = train.schema;
    const auto feature_cols = train.schema.feature_column_indices();

    for (std::size_t col : feature_cols) {
        const ColumnSpec& spec = train.schema.columns[col];
        ColumnStats st;
        st.name = spec.name;
        st.categorical = (spec.kind == ColumnKind::Categorical);

        std::vector<double> encoded;
        encoded.reserve(train.rows.size());

        if (st.categorical) {
            std::map<std::string, std::size_t> freq;
            for (const auto& row : train.rows) {
                const std::string& cell = row[col];
                if (is_missing_marker(cell)) continue;
                if (!st.ordinal_map.count(cell)) {
                    st.ordinal_map[cell] = static_cast<int>(st.categories.size());
                    st.categories.push_back(cell);
                }
                ++freq[cell];
            }
            if (st.categories.empty()) {
                throw std::runtime_error("fit: column '" + spec.name + "' entirely missing");
            }
            // Mode by frequency, first-appearance order breaking ties.
            std::size_t best = 0;
            for (const auto& cat : st.categories) {
                if (freq[cat] > best) {
                    best = freq[cat];
                    st.mode = cat;
                }
            }
            st.unknown_ordinal = static_cast<int>(st.categories.size());
            const int mode_code = st.ordinal_map.at(st.mode);
            for (const auto& row : train.rows) {
                const std::string& cell = row[col];
                encoded.push_back(is_missing_marker(cell)
                                      ? static_cast<double>(mode_code)
                                      : static_cast<double>(st.ordinal_map.at(cell)));
            }
        } else {
            std::vector<double> present;
            for (const auto& row : train.rows) {
                if (!is_missing_marker(row[col])) {
                    present.push_back(parse_number(row[col], spec.name));
                }
            }
            if (present.empty()) {
                throw std::runtime_error("fit: column '" + spec.name + "' entirely missing");
            }
            std::sort(present.begin(), present.end());
            const std::size_t n = present.size();
            st.median = (n % 2 == 1) ? present[n / 2]
                                     : 0.5 * (present[n / 2 - 1] + present[n / 2]);
            for (const auto& row : train.rows) {
                const std::string& cell = row[col];
                encoded.push_back(is_missing_marker(cell) ? st.median
                                                          : parse_number(cell, spec.name));
            }
        }

        st.raw_min = *std::min_element(encoded.begin(), encoded.end());
        st.raw_max = *std::max_element(encoded.begin(), encoded.end());
        double sum = 0.0;
        for (double v : encoded) sum += v;
        st.mean = sum / static_cast<double>(encoded.size());
        double var = 0.0;
        for (double v : encoded) var += (v - st.mean) * (v - st.mean);
        var /= static_cast<double>(encoded.size()); // population convention
        st.stddev = std::sqrt(var);
        if (st.stddev <= 0.0) {
            st.constant = true;
            st.stddev = 1.0;
        }
        pipe.stats_.push_back(std::move(st));
    }
    return pipe;
}

LabeledDataset FittedPipeline::transform(const RawDataset& data) const {
    if (data.schema.columns.size() != schema_.columns.size()) {
        throw std::invalid_argument("transform: schema column count mismatch");
    }
    for (std::size_t i = 0; i < schema_.columns.size(); ++i) {
        if (data.schema.columns[i].name != schema_.columns[i].name) {
            throw std::invalid_argument("transform: schema mismatch at column '" +
                                        data.schema.columns[i].name + "'");
        }
    }
    const auto feature_cols = schema_.feature_column_indices();
    const std::size_t label_col = schema_.label_index();

    LabeledDataset out;
    out.schema = schema_;
    out.features = Matrix(data.rows.size(), feature_cols.size());
    out.labels.reserve(data.rows.size());

    for (std::size_t r = 0; r < data.rows.size(); ++r) {
        const auto& row = data.rows[r];
        for (std::size_t f = 0; f < feature_cols.size(); ++f) {
            const ColumnStats& st = stats_[f];
            const std::string& cell = row[feature_cols[f]];
            double raw;
            if (st.categorical) {
                if (is_missing_marker(cell)) {
                    raw = static_cast<double>(st.ordinal_map.at(st.mode));
                } else {
                    auto it = st.ordinal_map.find(cell);
                    raw = (it == st.ordinal_map.end()) ? static_cast<double>(st.unknown_ordinal)
                                                       : static_cast<double>(it->second);
                }
            } else {
                raw = is_missing_marker(cell) ? st.median : parse_number(cell, st.name);
            }
            out.features.at(r, f) = st.standardize(raw);
        }
        out.labels.push_back(collapse_label(row[label_col]));
    }
    out.features.require_finite("transform");
    return out;
}

std::vector<double> FittedPipeline::clip_to_domain(std::vector<double> x) const {
    if (x.size() != stats_.size()) {
        throw std::invalid_argument("clip_to_domain: dimension mismatch");
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = std::clamp(x[i], stats_[i].clip_lo(), stats_[i].clip_hi());
    }
    return x;
}

namespace {

nlohmann::json pipeline_to_json(const FeatureSchema& schema,
                                const std::vector<ColumnStats>& stats) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : schema.columns) {
        cols.push_back({{"name", c.name},
                        {"kind", kind_name(c.kind)},
                        {"mutability", mutability_name(c.mutability)}});
    }
    nlohmann::json jstats = nlohmann::json::array();
    for (const auto& st : stats) {
        jstats.push_back({{"name", st.name},
                          {"categorical", st.categorical},
                          {"median", st.median},
                          {"mode", st.mode},
                          {"categories", st.categories},
                          {"unknown_ordinal", st.unknown_ordinal},
                          {"mean", st.mean},
                          {"stddev", st.stddev},
                          {"constant", st.constant},
                          {"raw_min", st.raw_min},
                          {"raw_max", st.raw_max}});
    }
    return {{"format", "nids-pipeline"},
            {"version", 1},
            {"std_convention", "population"},
            {"schema", {{"columns", cols}}},
            {"columns", jstats}};
}

} // namespace

void FittedPipeline::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("pipeline: cannot write " + path);
    out << pipeline_to_json(schema_, stats_).dump(2) << "\n";
}

FittedPipeline FittedPipeline::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("pipeline: cannot open " + path);
    nlohmann::json j;
    in >> j;
    if (j.value("format", "") != "nids-pipeline") {
        throw std::runtime_error("pipeline: bad format tag in " + path);
    }
    FittedPipeline pipe;
    for (const auto& e : j.at("schema").at("columns")) {
        ColumnSpec c;
        c.name = e.at("name").get<std::string>();
        const std::string kind = e.at("kind").get<std::string>();
        c.kind = kind == "numeric"       ? ColumnKind::Numeric
                 : kind == "categorical" ? ColumnKind::Categorical
                 : kind == "label"       ? ColumnKind::Label
                                         : ColumnKind::Ignored;
        const std::string mut = e.at("mutability").get<std::string>();
        c.mutability = mut == "mutable"     ? Mutability::Mutable
                       : mut == "immutable" ? Mutability::Immutable
                                            : Mutability::NotApplicable;
        pipe.schema_.columns.push_back(std::move(c));
    }
    for (const auto& e : j.at("columns")) {
        ColumnStats st;
        st.name = e.at("name").get<std::string>();
        st.categorical = e.at("categorical").get<bool>();
        st.median = e.at("median").get<double>();
        st.mode = e.at("mode").get<std::string>();
        st.categories = e.at("categories").get<std::vector<std::string>>();
        st.unknown_ordinal = e.at("unknown_ordinal").get<int>();
        for (std::size_t i = 0; i < st.categories.size(); ++i) {
            st.ordinal_map[st.categories[i]] = static_cast<int>(i);
        }
        st.mean = e.at("mean").get<double>();
        st.stddev = e.at("stddev").get<double>();
        st.constant = e.at("constant").get<bool>();
        st.raw_min = e.at("raw_min").get<double>();
        st.raw_max = e.at("raw_max").get<double>();
        pipe.stats_.push_back(std::move(st));
    }
    return pipe;
}

std::string FittedPipeline::checksum() const {
    return fnv1a64_hex(pipeline_to_json(schema_, stats_).dump());
}

} // namespace nids
