#include "nids/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace nids {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

const char* kProtos[] = {"tcp", "udp", "icmp"};
const char* kServices[] = {"http", "dns", "smtp", "ftp"};

std::size_t pick(RngStream& rng, const double* weights, std::size_t n) {
    double u = rng.uniform();
    for (std::size_t i = 0; i < n; ++i) {
        if (u < weights[i]) return i;
        u -= weights[i];
    }
    return n - 1;
}

} // namespace

FeatureSchema synth_schema() {
    FeatureSchema s;
    auto add = [&s](const char* name, ColumnKind kind, Mutability mut) {
        s.columns.push_back({name, kind, mut});
    };
    add("proto", ColumnKind::Categorical, Mutability::Immutable);
    add("service", ColumnKind::Categorical, Mutability::Immutable);
    add("flag_frag", ColumnKind::Numeric, Mutability::Immutable);
    add("duration", ColumnKind::Numeric, Mutability::Mutable);
    add("src_bytes", ColumnKind::Numeric, Mutability::Mutable);
    add("dst_bytes", ColumnKind::Numeric, Mutability::Mutable);
    add("count", ColumnKind::Numeric, Mutability::Mutable);
    add("srv_count", ColumnKind::Numeric, Mutability::Mutable);
    add("serror_rate", ColumnKind::Numeric, Mutability::Mutable);
    add("same_srv_rate", ColumnKind::Numeric, Mutability::Mutable);
    add("difficulty", ColumnKind::Ignored, Mutability::NotApplicable);
    add("label", ColumnKind::Label, Mutability::NotApplicable);
    return s;
}

RawDataset synth_raw(const SynthConfig& cfg) {
    RawDataset raw;
    raw.schema = synth_schema();
    RngStream rng(cfg.seed);

    // Mutable feature base means (benign) and attack shifts in sigmas.
    const double shifts[7] = {1.0, 0.9, -0.8, 1.2, 1.0, 1.3, -0.9};
    const double benign_proto[3] = {0.6, 0.3, 0.1};
    const double mal_proto[3] = {0.45, 0.3, 0.25};
    const double benign_service[4] = {0.5, 0.3, 0.15, 0.05};
    const double mal_service[4] = {0.35, 0.25, 0.2, 0.2};

    for (std::size_t i = 0; i < cfg.rows; ++i) {
        const bool malicious = rng.uniform() < cfg.malicious_fraction;
        std::vector<std::string> row;
        row.push_back(kProtos[pick(rng, malicious ? mal_proto : benign_proto, 3)]);
        row.push_back(kServices[pick(rng, malicious ? mal_service : benign_service, 4)]);
        // Weak immutable numeric signal.
        row.push_back(fmt(rng.normal() + (malicious ? 0.4 : 0.0)));
        for (int f = 0; f < 7; ++f) {
            double v = rng.normal();
            if (malicious) v += cfg.separation * shifts[f] * 0.5;
            if (cfg.missing_rate > 0.0 && rng.uniform() < cfg.missing_rate) {
                row.push_back("");
            } else {
                row.push_back(fmt(v));
            }
        }
        row.push_back(std::to_string(rng.index(21))); // difficulty-style ignored column
        if (malicious) {
            row.push_back(rng.uniform() < 0.5 ? "neptune" : "smurf");
        } else {
            row.push_back("normal");
        }
        raw.rows.push_back(std::move(row));
    }
    return raw;
}

void synth_csv(const SynthConfig& cfg, const std::string& path, bool header) {
    const RawDataset raw = synth_raw(cfg);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("synth_csv: cannot write " + path);
    if (header) {
        for (std::size_t c = 0; c < raw.schema.columns.size(); ++c) {
            if (c) out << ",";
            out << raw.schema.columns[c].name;
        }
        out << "\n";
    }
    for (const auto& row : raw.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << ",";
            out << row[c];
        }
        out << "\n";
    }
}

} // namespace nids
