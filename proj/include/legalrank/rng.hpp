#pragma once

#include <cstdint>
#include <string_view>

namespace legalrank {

/// 64-bit FNV-1a over the raw bytes of `data`.
std::uint64_t fnv1a64(std::string_view data) noexcept;

/// SplitMix64 output finalizer (Stafford variant 13).
std::uint64_t splitmix64_mix(std::uint64_t z) noexcept;

/// Stream seed for one keyed consumer (e.g. one question):
///   splitmix64_mix(splitmix64_mix(seed) ^ fnv1a64(key)).
/// Independent of the order in which keys are processed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key) noexcept;

/// SplitMix64 generator: state += 0x9E3779B97F4A7C15, output = splitmix64_mix(state).
class SplitMix64 {
  public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept;
    std::uint64_t operator()() noexcept { return next(); }

    /// Uniform integer in [0, bound) by rejection: draws below 2^64 mod bound are
    /// discarded, the rest are reduced modulo bound. bound must be > 0.
    std::uint64_t below(std::uint64_t bound) noexcept;

    /// Uniform double in [0, 1) from the top 53 bits.
    double uniform() noexcept;

    /// Standard normal via Box-Muller (one value per call, two draws).
    double normal() noexcept;

    static constexpr std::uint64_t min() { return 0; }
    static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

  private:
    std::uint64_t state_;
};

}  // namespace legalrank
