#include "nids/dataio.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace nids {

namespace {

ColumnKind parse_kind(const std::string& s) {
    if (s == "numeric") return ColumnKind::Numeric;
    if (s == "categorical") return ColumnKind::Categorical;
    if (s == "label") return ColumnKind::Label;
    if (s == "ignored") return ColumnKind::Ignored;
    throw std::invalid_argument("schema: unknown column kind '" + s + "'");
}

Mutability parse_mutability(const std::string& s) {
    if (s == "mutable") return Mutability::Mutable;
    if (s == "immutable") return Mutability::Immutable;
    if (s == "n/a") return Mutability::NotApplicable;
    throw std::invalid_argument("schema: unknown mutability '" + s + "'");
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            out.push_back(cell);
            cell.clear();
        } else {
            cell.push_back(c);
        }
    }
    out.push_back(cell);
    for (auto& s : out) {
        while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
        std::size_t b = 0;
        while (b < s.size() && s[b] == ' ') ++b;
        s = s.substr(b);
    }
    return out;
}

} // namespace

std::string kind_name(ColumnKind k) {
    switch (k) {
        case ColumnKind::Numeric: return "numeric";
        case ColumnKind::Categorical: return "categorical";
        case ColumnKind::Label: return "label";
        case ColumnKind::Ignored: return "ignored";
    }
    return "?";
}

std::string mutability_name(Mutability m) {
    switch (m) {
        case Mutability::Mutable: return "mutable";
        case Mutability::Immutable: return "immutable";
        case Mutability::NotApplicable: return "n/a";
    }
    return "?";
}

std::size_t FeatureSchema::label_index() const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].kind == ColumnKind::Label) return i;
    }
    throw std::logic_error("schema: no label column");
}

std::vector<std::size_t> FeatureSchema::feature_column_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].kind == ColumnKind::Numeric || columns[i].kind == ColumnKind::Categorical) {
            out.push_back(i);
        }
    }
    return out;
}

std::vector<std::size_t> FeatureSchema::mutable_feature_indices() const {
    std::vector<std::size_t> out;
    const auto feats = feature_column_indices();
    for (std::size_t f = 0; f < feats.size(); ++f) {
        if (columns[feats[f]].mutability == Mutability::Mutable) out.push_back(f);
    }
    return out;
}

std::vector<std::size_t> FeatureSchema::immutable_feature_indices() const {
    std::vector<std::size_t> out;
    const auto feats = feature_column_indices();
    for (std::size_t f = 0; f < feats.size(); ++f) {
        if (columns[feats[f]].mutability == Mutability::Immutable) out.push_back(f);
    }
    return out;
}

void FeatureSchema::validate() const {
    std::size_t labels = 0;
    std::set<std::string> names;
    for (const auto& c : columns) {
        if (!names.insert(c.name).second) {
            throw std::invalid_argument("schema: duplicate column name '" + c.name + "'");
        }
        if (c.kind == ColumnKind::Label) ++labels;
        if ((c.kind == ColumnKind::Numeric || c.kind == ColumnKind::Categorical) &&
            c.mutability == Mutability::NotApplicable) {
            throw std::invalid_argument("schema: feature column '" + c.name +
                                        "' lacks a mutability assignment");
        }
    }
    if (labels != 1) {
        throw std::invalid_argument("schema: expected exactly one label column, found " +
                                    std::to_string(labels));
    }
}

FeatureSchema FeatureSchema::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("schema: cannot open " + path);
    nlohmann::json j;
    in >> j;
    FeatureSchema schema;
    for (const auto& e : j.at("columns")) {
        ColumnSpec c;
        c.name = e.at("name").get<std::string>();
        c.kind = parse_kind(e.at("kind").get<std::string>());
        c.mutability = e.contains("mutability")
                           ? parse_mutability(e.at("mutability").get<std::string>())
                           : Mutability::NotApplicable;
        schema.columns.push_back(std::move(c));
    }
    schema.validate();
    return schema;
}

void FeatureSchema::save(const std::string& path) const {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : columns) {
        cols.push_back({{"name", c.name},
                        {"kind", kind_name(c.kind)},
                        {"mutability", mutability_name(c.mutability)}});
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("schema: cannot write " + path);
    out << nlohmann::json{{"columns", cols}}.dump(2) << "\n";
}

bool is_missing_marker(const std::string& cell) {
    return cell.empty() || cell == "?" || cell == "NA" || cell == "nan" || cell == "NaN" ||
           cell == "-";
}

int collapse_label(const std::string& raw) {
    std::string s = raw;
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (s.empty()) throw std::invalid_argument("label: empty label string");
    if (s == "normal" || s == "benign" || s == "0") return 0;
    return 1;
}

RawDataset load_dataset(const std::string& path, const FeatureSchema& schema) {
    schema.validate();
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_dataset: cannot open " + path);

    RawDataset raw;
    raw.schema = schema;

    std::string line;
    std::size_t lineno = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        auto cells = split_csv_line(line);
        if (first) {
            first = false;
            // Header detection: first cell matches the first schema column name.
            if (!cells.empty() && !schema.columns.empty() && cells[0] == schema.columns[0].name) {
                continue;
            }
        }
        if (cells.size() != schema.columns.size()) {
            throw std::runtime_error("load_dataset: line " + std::to_string(lineno) + " has " +
                                     std::to_string(cells.size()) + " cells, schema expects " +
                                     std::to_string(schema.columns.size()));
        }
        raw.rows.push_back(std::move(cells));
    }
    return raw;
}

LabeledDataset select_rows(const LabeledDataset& data, const std::vector<std::size_t>& idx) {
    LabeledDataset out;
    out.schema = data.schema;
    out.features = Matrix(idx.size(), data.features.cols());
    out.labels.reserve(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto src = data.features.row(idx[i]);
        std::copy(src.begin(), src.end(), out.features.row(i).begin());
        out.labels.push_back(data.labels[idx[i]]);
    }
    return out;
}

LabeledDataset stratified_subsample(const LabeledDataset& data, std::size_t n, RngStream& rng) {
    if (n > data.size()) {
        throw std::invalid_argument("stratified_subsample: n=" + std::to_string(n) +
                                    " exceeds dataset size " + std::to_string(data.size()));
    }
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < data.size(); ++i) {
        (data.labels[i] == 1 ? pos : neg).push_back(i);
    }
    const double pos_frac = static_cast<double>(pos.size()) / static_cast<double>(data.size());
    std::size_t n_pos = static_cast<std::size_t>(pos_frac * static_cast<double>(n) + 0.5);
    n_pos = std::min(n_pos, pos.size());
    std::size_t n_neg = n - n_pos;
    if (n_neg > neg.size()) {
        n_neg = neg.size();
        n_pos = n - n_neg;
    }
    rng.shuffle(pos);
    rng.shuffle(neg);
    std::vector<std::size_t> keep(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(n_pos));
    keep.insert(keep.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(n_neg));
    rng.shuffle(keep);
    return select_rows(data, keep);
}

} // namespace nids
