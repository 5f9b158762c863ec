#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "vasim/core.hpp"

namespace vasim::sim {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// One named, independently seeded random stream. The draw helpers are
/// written out by hand because the standard distribution objects are free to
/// produce different sequences on different platforms; mt19937_64 itself is
/// fully pinned by the standard.
class RandomStream {
public:
    RandomStream(std::uint64_t run_seed, std::string_view name)
        : engine_(splitmix64(run_seed ^ fnv1a64(name))) {}

    std::uint64_t bits() { return engine_(); }

    /// Uniform double in [0, 1).
    double uniform01() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

    /// True with probability p. Always consumes exactly one draw.
    bool bernoulli(double p) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw SimError(ErrorCode::InvalidProbability,
                           "bernoulli probability must lie in [0,1], got " + std::to_string(p));
        }
        return uniform01() < p;
    }

    /// Uniform integer in [0, n), free of modulo bias.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) {
            throw SimError(ErrorCode::ValidationError, "below(0) is undefined");
        }
        const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
        for (;;) {
            const std::uint64_t r = bits();
            if (r >= threshold) return r % n;
        }
    }

    /// Uniform integer in [lo, hi], both ends included.
    std::int64_t between(std::int64_t lo, std::int64_t hi) {
        if (lo > hi) {
            throw SimError(ErrorCode::ValidationError, "between() needs lo <= hi");
        }
        return lo + static_cast<std::int64_t>(
                        below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    template <typename T>
    const T& pick(const std::vector<T>& options) {
        if (options.empty()) {
            throw SimError(ErrorCode::ValidationError, "pick() from empty list");
        }
        return options[below(options.size())];
    }

private:
    std::mt19937_64 engine_;
};

} // namespace vasim::sim
