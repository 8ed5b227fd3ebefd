#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace kcm {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t hash_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept {
    std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ULL);
    h = mix64(h ^ (a + 0x632be59bd9b4e019ULL));
    h = mix64(h ^ (b + 0x85157af5ULL * 0x9e3779b97f4a7c15ULL));
    return h;
}

// 53-bit uniform in [0,1).
constexpr double to_unit(std::uint64_t x) noexcept {
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

// Counter-based uniform keyed by (seed, replica, vertex); a pure function of its arguments.
constexpr double keyed_uniform(std::uint64_t seed, std::uint64_t replica, std::uint64_t vertex) noexcept {
    return to_unit(hash_key(seed, replica, vertex));
}

// SplitMix64 stream; satisfies UniformRandomBitGenerator.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t key) noexcept : state_(key) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    double uniform() noexcept { return to_unit((*this)()); }

    // Exponential(rate) via inversion; portable across standard libraries.
    double exponential(double rate) noexcept { return -std::log1p(-uniform()) / rate; }

    // Uniform integer in [0, n) for n < 2^53.
    std::uint64_t below(std::uint64_t n) noexcept {
        const auto k = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
        return k < n ? k : n - 1;
    }

private:
    std::uint64_t state_;
};

} // namespace kcm
