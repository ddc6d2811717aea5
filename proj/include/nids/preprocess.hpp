#pragma once

#include "nids/dataio.hpp"

#include <map>
#include <string>
#include <vector>

namespace nids {

// Fitted statistics for one feature column. Categorical columns are ordinal
// encoded first and then scaled like native numerics, so every column carries
// mean/std and the standardized clip bounds.
struct ColumnStats {
    std::string name;
    bool categorical = false;

    // numeric path
    double median = 0.0;

    // categorical path: ordinal codes in first-appearance order
    std::string mode;
    std::vector<std::string> categories;
    std::map<std::string, int> ordinal_map;
    int unknown_ordinal = 0;

    // scaling, computed post-imputation / post-encoding
    double mean = 0.0;
    double stddev = 1.0; // population convention
    bool constant = false;
    double raw_min = 0.0;
    double raw_max = 0.0;

    double standardize(double raw) const;
    double clip_lo() const { return standardize(raw_min); }
    double clip_hi() const { return standardize(raw_max); }
};

class FittedPipeline {
public:
    static FittedPipeline fit(const RawDataset& train);

    LabeledDataset transform(const RawDataset& data) const;

    // Clamps each coordinate of a standardized feature vector to the image of
    // the training [min, max] range.
    std::vector<double> clip_to_domain(std::vector<double> x) const;

    const FeatureSchema& schema() const { return schema_; }
    const std::vector<ColumnStats>& columns() const { return stats_; }
    std::size_t feature_count() const { return stats_.size(); }

    void save(const std::string& path) const;
    static FittedPipeline load(const std::string& path);

    // Stable content checksum used to pair models with the pipeline that
    // produced their training matrices.
    std::string checksum() const;

private:
    FeatureSchema schema_;
    std::vector<ColumnStats> stats_; // one entry per feature column, schema order
};

} // namespace nids
