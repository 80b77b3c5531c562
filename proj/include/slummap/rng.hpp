#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace slummap {

/// SplitMix64 finalizer. Used only to derive independent seeds for streams.
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seed of sub-stream `index` under `master`: the (index+1)-th SplitMix64
/// output of a generator seeded with `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return splitmix64_mix(master + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

/// Fixed sub-stream indices under the experiment master seed.
namespace streams {
inline constexpr std::uint64_t kBalance = 1;
inline constexpr std::uint64_t kSplit = 2;
inline constexpr std::uint64_t kForest = 3;
}  // namespace streams

/// PCG32 (XSH-RR 64/32), O'Neill 2014. Stream selector fixed to the
/// reference default increment; seeding follows pcg32_srandom_r.
class Pcg32 {
public:
    explicit Pcg32(std::uint64_t seed, std::uint64_t sequence = 0xDA3E39CB94B95BDBULL) noexcept {
        inc_ = (sequence << 1u) | 1u;
        state_ = 0;
        next();
        state_ += seed;
        next();
    }

    std::uint32_t next() noexcept {
        const std::uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        const auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        const auto rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    /// Unbiased draw from [0, bound) by rejection (pcg32_boundedrand_r).
    std::uint32_t below(std::uint32_t bound) noexcept {
        if (bound <= 1) return 0;
        const std::uint32_t threshold = (0u - bound) % bound;
        for (;;) {
            const std::uint32_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

    /// Index draw for containers that may exceed 2^32 elements.
    std::uint64_t below64(std::uint64_t bound) noexcept {
        if (bound <= 0xFFFFFFFFULL) return below(static_cast<std::uint32_t>(bound));
        const std::uint64_t threshold = (0ULL - bound) % bound;
        for (;;) {
            const std::uint64_t r = (static_cast<std::uint64_t>(next()) << 32) | next();
            if (r >= threshold) return r % bound;
        }
    }

private:
    std::uint64_t state_{};
    std::uint64_t inc_{};
};

/// Chooses `k` distinct positions of [0, n) by a partial Fisher-Yates
/// shuffle. The result is in draw order.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Pcg32& rng);

}  // namespace slummap
