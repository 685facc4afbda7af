#include "legalrank/rng.hpp"

#include <cmath>
#include <numbers>

namespace legalrank {

std::uint64_t fnv1a64(std::string_view data) noexcept {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char byte : data) {
        hash ^= byte;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view key) noexcept {
    return splitmix64_mix(splitmix64_mix(seed) ^ fnv1a64(key));
}

std::uint64_t SplitMix64::next() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return splitmix64_mix(state_);
}

std::uint64_t SplitMix64::below(std::uint64_t bound) noexcept {
    // 2^64 mod bound, computed without 128-bit arithmetic.
    const std::uint64_t threshold = (0 - bound) % bound;
    while (true) {
        std::uint64_t r = next();
        if (r >= threshold) {
            return r % bound;
        }
    }
}

double SplitMix64::uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double SplitMix64::normal() noexcept {
    double u1 = 0.0;
    while (u1 == 0.0) {
        u1 = uniform();
    }
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace legalrank
