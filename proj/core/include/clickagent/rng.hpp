// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace clickagent {

/// Seedable splitmix64 generator. Chosen over std::mt19937_64 because the
/// output sequence is pinned by the algorithm itself, so golden sequences in
/// tests survive standard-library changes.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0,1).
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
    }

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t next_below(std::uint64_t bound) {
        return next_u64() % bound;
    }

private:
    std::uint64_t state_;
};

/// Derives an independent stream from a root seed and a stream index.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
    SplitMix64 g(root ^ (0xA0761D6478BD642FULL * (stream + 1)));
    return g.next_u64();
}

} // namespace clickagent
