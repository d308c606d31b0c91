#pragma once

#include <cstdint>
#include <span>

namespace sectlab {

// splitmix64. Chosen over std::mt19937 + distributions because the standard
// distributions are not bit-reproducible across library implementations;
// every random draw in the toolkit must replay identically from a seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Unbiased draw from [0, bound). bound must be >= 1.
    std::uint64_t bounded(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next_u64();
            const unsigned __int128 m =
                static_cast<unsigned __int128>(r) * static_cast<unsigned __int128>(bound);
            if (static_cast<std::uint64_t>(m) >= threshold)
                return static_cast<std::uint64_t>(m >> 64);
        }
    }

    std::uint8_t next_byte() { return static_cast<std::uint8_t>(next_u64() >> 56); }

    void fill(std::span<std::uint8_t> out) {
        std::size_t i = 0;
        while (i + 8 <= out.size()) {
            std::uint64_t v = next_u64();
            for (int b = 0; b < 8; ++b) out[i++] = static_cast<std::uint8_t>(v >> (8 * b));
        }
        if (i < out.size()) {
            std::uint64_t v = next_u64();
            for (; i < out.size(); ++i) {
                out[i] = static_cast<std::uint8_t>(v & 0xff);
                v >>= 8;
            }
        }
    }

    // Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

// Stream derivation: hashes extra words into a seed so that independent
// consumers (per sample, per cell, per repetition) get decorrelated streams.
inline std::uint64_t mix_seed(std::uint64_t seed) {
    Rng r(seed);
    return r.next_u64();
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t word) {
    Rng r(seed ^ (word * 0x9e3779b97f4a7c15ull));
    return r.next_u64();
}

template <typename... Rest>
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t word, Rest... rest) {
    return mix_seed(mix_seed(seed, word), static_cast<std::uint64_t>(rest)...);
}

}  // namespace sectlab
