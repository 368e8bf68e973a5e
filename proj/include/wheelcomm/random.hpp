#pragma once

#include <cstdint>
#include <random>

namespace wheelcomm {

/// Scheduler tick and every timestamp in the system: integer milliseconds.
using Tick = std::int64_t;

// SplitMix64 finalizer. Used as a counter-based generator so a value can be
// derived from (seed, stream, index) without replaying earlier draws.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b) noexcept { return mix64(mix64(a) ^ b); }

constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) noexcept {
    return mix64(mix64(a, b) ^ mix64(c));
}

// Uniform in [0, 1) from the top 53 bits.
constexpr double unit_interval(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

__extension__ using uint128_t = unsigned __int128;

// Uniform integer in [lo, hi]. The standard distributions are not specified
// bit-for-bit across library implementations, so draws go through these.
constexpr std::int64_t uniform_int(std::uint64_t bits, std::int64_t lo, std::int64_t hi) noexcept {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(static_cast<uint128_t>(bits) * span >> 64);
}

using Rng = std::mt19937_64;

inline double draw_unit(Rng& rng) { return unit_interval(rng()); }
inline std::int64_t draw_int(Rng& rng, std::int64_t lo, std::int64_t hi) { return uniform_int(rng(), lo, hi); }

}  // namespace wheelcomm
