// Copyright 2026 The posaid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace posaid {

using Rng = std::mt19937_64;

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace detail

/// Seed of an independent random stream identified by (seed, run index, label)
/// plus up to two extra integer keys. Every stochastic draw in the simulator
/// comes from a stream derived here.
inline constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t run,
                                           std::string_view label, std::uint64_t k0 = 0,
                                           std::uint64_t k1 = 0)
{
    std::uint64_t h = detail::splitmix64(seed);
    h = detail::splitmix64(h ^ run);
    h = detail::splitmix64(h ^ detail::fnv1a(label));
    h = detail::splitmix64(h ^ k0);
    h = detail::splitmix64(h ^ k1);
    return h;
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t run, std::string_view label,
                    std::uint64_t k0 = 0, std::uint64_t k1 = 0)
{
    return Rng{stream_seed(seed, run, label, k0, k1)};
}

/// Standard normal deviate computed from a single hashed key, without any
/// generator state (Box-Muller over two 53-bit uniforms).
inline double hashed_normal(std::uint64_t key)
{
    const std::uint64_t a = detail::splitmix64(key);
    const std::uint64_t b = detail::splitmix64(a ^ 0xD1B54A32D192ED03ULL);
    const double u1 = (static_cast<double>(a >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace posaid
