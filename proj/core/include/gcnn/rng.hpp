#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace gcnn {

// SplitMix64 generator. Hand-rolled so that streams are identical across
// platforms and standard libraries (std::*_distribution makes no such
// guarantee). Every seeded path in the project goes through this type.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1), 53 random bits
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform integer in [0, n), n > 0 (Lemire multiply-shift)
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    bool next_bool() { return (next_u64() >> 63) != 0; }

    // standard normal, Box-Muller; one value per call so the draw count
    // stays predictable for seeding tests
    double next_normal() {
        double u1;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t state_;
};

// Order-sensitive seed derivation: mix(a, b) != mix(b, a).
inline std::uint64_t seed_mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 0x632be59bd9b4e019ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t seed_mix_real(std::uint64_t a, double b) {
    return seed_mix(a, std::bit_cast<std::uint64_t>(b));
}

}  // namespace gcnn
