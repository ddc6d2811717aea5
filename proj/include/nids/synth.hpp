#pragma once

#include "nids/dataio.hpp"
#include "nids/rng.hpp"

#include <string>

namespace nids {

// Schema-compatible synthetic flow generator. Class signal lives mostly in
// the mutable rate/volume features; the immutable protocol descriptors carry
// a weaker, distributional signal — the regime the attack generators exploit.
struct SynthConfig {
    std::size_t rows = 1000;
    double malicious_fraction = 0.4;
    double separation = 2.0;  // mean shift on mutable features, in sigmas
    double missing_rate = 0.0;
    std::uint64_t seed = 1;
};

FeatureSchema synth_schema();
RawDataset synth_raw(const SynthConfig& cfg);
void synth_csv(const SynthConfig& cfg, const std::string& path, bool header = true);

} // namespace nids
