#pragma once
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace gardner {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derive a stream key from a master seed and a path of indices.
constexpr std::uint64_t derive_key(std::uint64_t seed) noexcept { return mix64(seed ^ 0x6a09e667f3bcc909ULL); }

template <class... Rest>
constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t index, Rest... rest) noexcept
{
    return derive_key(mix64(derive_key(seed) + 0x9e3779b97f4a7c15ULL * (index + 1)), static_cast<std::uint64_t>(rest)...);
}

/// Counter-based 64-bit generator. Output i of a stream is mix64(key + (i+1)*gamma),
/// so a stream is fully determined by its key and position.
/// Satisfies UniformRandomBitGenerator.
class counter_rng
{
public:
    using result_type = std::uint64_t;

    explicit counter_rng(std::uint64_t key = 0) noexcept : _key(key) {}

    template <class... Indices>
    static counter_rng stream(std::uint64_t seed, Indices... indices) noexcept
    {
        return counter_rng(derive_key(seed, static_cast<std::uint64_t>(indices)...));
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept
    {
        ++_counter;
        return mix64(_key + _counter * 0x9e3779b97f4a7c15ULL);
    }

    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform() noexcept
    {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; both uniforms consumed per draw so the
    /// sequence does not depend on any cached state.
    double normal() noexcept
    {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t key() const noexcept { return _key; }
    std::uint64_t position() const noexcept { return _counter; }

private:
    std::uint64_t _key;
    std::uint64_t _counter = 0;
};

} // namespace gardner
