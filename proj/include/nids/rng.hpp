#pragma once

#include <cstdint>
#include <cstddef>
#include <utility>
#include <vector>

namespace nids {

// Counter-based deterministic stream (splitmix64 core). Identical seed gives
// an identical draw sequence on every platform. Streams are single-owner;
// parallel work derives child streams instead of sharing one.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64();

    // Uniform in [0, 1), 53-bit resolution.
    double uniform();
    double uniform(double lo, double hi);

    // Standard normal via Box-Muller.
    double normal();

    // Uniform index in [0, n).
    std::size_t index(std::size_t n);

    // Independent stream derived from (seed, stream_index).
    RngStream child(std::uint64_t stream_index) const;

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

private:
    std::uint64_t seed_;
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace nids
