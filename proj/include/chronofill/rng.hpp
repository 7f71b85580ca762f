#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace chronofill {

// SplitMix64: tiny, fast, and trivially reimplementable in any language.
// Every random decision in the toolkit derives from one of these streams so
// runs are a pure function of their seeds.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1); never returns an exact 0 (safe under log()).
    double next_open() {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Fisher-Yates partner: uniform integer in [0, bound).
    std::uint64_t next_below(std::uint64_t bound) {
        // Rejection sampling keeps the draw unbiased for any bound.
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

private:
    std::uint64_t state_;
};

// Derives an independent stream for (seed, index): used to split generation
// across samples, jobs, and target columns without sharing state.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 rng(seed ^ (0xA0761D6478BD642Full * (index + 1)));
    rng.next();
    return rng.next();
}

// FNV-1a over a string, for deriving streams from names (imputer ids,
// column names, mechanism tags).
inline std::uint64_t hash_name(std::string_view name) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view name) {
    return mix_seed(seed, hash_name(name));
}

// Standard normal draws via Box-Muller, spare value cached. Deterministic
// given the underlying stream.
class GaussianSampler {
public:
    explicit GaussianSampler(std::uint64_t seed) : rng_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = rng_.next_open();
        const double u2 = rng_.next_open();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    SplitMix64 rng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace chronofill
