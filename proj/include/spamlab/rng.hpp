#pragma once

#include <cstdint>

namespace spamlab {

// SplitMix64. Chosen over <random> distributions because their output is
// implementation-defined; splits and forests must match across platforms.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform integer in [0, bound) by rejection; bound must be > 0.
    std::uint64_t below(std::uint64_t bound) noexcept {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return x % bound;
    }

private:
    std::uint64_t state_;
};

/// Child seed for stream `index` of a seeded family (forest trees).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    SplitMix64 mix(seed ^ (index * 0xD1B54A32D192ED03ULL));
    mix.next();
    return mix.next();
}

}  // namespace spamlab
