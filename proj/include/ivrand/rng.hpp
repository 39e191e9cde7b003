#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace ivrand {

// SplitMix64 finalizer (Steele/Lea/Flood; Vigna's public-domain constants).
// Used both as a stream-derivation hash and to expand seeds into generator state.
inline std::uint64_t mix64(std::uint64_t z) {
    z += UINT64_C(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)) * UINT64_C(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)) * UINT64_C(0x94D049BB133111EB);
    return z ^ (z >> 31);
}

// Documented stream-splitting scheme: a root seed plus up to three path ids
// (experiment cell, replicate, purpose tag) map to one independent stream seed.
// Every component of the library derives its streams through this function, so
// results never depend on thread scheduling or evaluation order.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = mix64(root);
    s = mix64(s ^ (a + UINT64_C(0x9E3779B97F4A7C15)));
    s = mix64(s ^ (b + UINT64_C(0xD1B54A32D192ED03)));
    s = mix64(s ^ (c + UINT64_C(0x8CB92BA72F3D8DD7)));
    return s;
}

// xoshiro256++ with explicit value semantics. All distribution code is written
// out by hand (no std::*_distribution) so that draws are bit-identical across
// platforms and standard-library versions.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) {
        // Expand via splitmix64, per Vigna's seeding recommendation.
        std::uint64_t sm = seed;
        for (auto& word : state_) {
            sm += UINT64_C(0x9E3779B97F4A7C15);
            std::uint64_t z = sm;
            z = (z ^ (z >> 30)) * UINT64_C(0xBF58476D1CE4E5B9);
            z = (z ^ (z >> 27)) * UINT64_C(0x94D049BB133111EB);
            word = z ^ (z >> 31);
        }
    }

    static RngStream from_key(std::uint64_t root, std::uint64_t a,
                              std::uint64_t b = 0, std::uint64_t c = 0) {
        return RngStream(derive_seed(root, a, b, c));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1]; safe as a log() argument.
    double uniform_open01() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    // Fair coin from the top bit.
    bool bernoulli_half() { return (next_u64() >> 63) != 0; }

    // Unbiased integer in [0, bound) via Lemire's multiply-with-rejection.
    std::uint32_t uniform_below(std::uint32_t bound) {
        if (bound == 0) throw std::invalid_argument("uniform_below: bound must be > 0");
        std::uint64_t m = (next_u64() >> 32) * bound;
        auto lo = static_cast<std::uint32_t>(m);
        if (lo < bound) {
            const std::uint32_t threshold = (0u - bound) % bound;
            while (lo < threshold) {
                m = (next_u64() >> 32) * bound;
                lo = static_cast<std::uint32_t>(m);
            }
        }
        return static_cast<std::uint32_t>(m >> 32);
    }

    // Standard normal via Box-Muller; the spare draw is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * kPi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    static constexpr double kPi = 3.14159265358979323846;

    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4] = {};
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace ivrand
