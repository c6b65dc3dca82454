// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace epbr {

// SplitMix64 (Steele, Lea & Flood 2014). Every stochastic stage in the library
// draws from this generator, so baked tables and renders are bit-reproducible
// across platforms. Independent streams come from `Rng::stream(seed, index)`.
class Rng {
public:
    explicit constexpr Rng(std::uint64_t seed) : state_(seed) {}

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Stream for work item `index` under a global seed. Two rounds of mixing
    // keep nearby (seed, index) pairs decorrelated.
    static constexpr Rng stream(std::uint64_t seed, std::uint64_t index) {
        return Rng(mix(mix(seed + kGamma) ^ (index * 0xd1342543de82ef95ULL + 1)));
    }

    constexpr std::uint64_t next_u64() {
        state_ += kGamma;
        return mix(state_);
    }

    // Uniform double in [0, 1) with 53 random bits.
    constexpr double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
    std::uint64_t state_;
};

}  // namespace epbr
