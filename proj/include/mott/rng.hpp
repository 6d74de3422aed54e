#pragma once

#include <cstdint>
#include <cmath>
#include <random>

namespace mott {

// SplitMix64 finalizer. Used both as a counter-based generator (hash of a key)
// and to seed stream engines.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t hash_key(std::uint64_t seed, std::int64_t index, std::uint64_t stream) noexcept {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ static_cast<std::uint64_t>(index));
    return mix64(h ^ (stream * 0xd1b54a32d192ed03ULL));
}

/// Uniform on (0, 1], 53 bits.
constexpr double to_unit_open0(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

/// Value at (seed, index, stream) of a counter-based uniform stream.
constexpr double counter_uniform(std::uint64_t seed, std::int64_t index, std::uint64_t stream) noexcept {
    return to_unit_open0(hash_key(seed, index, stream));
}

/// Seed for a named sub-stream (e.g. walker k of run `seed`).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t k) noexcept {
    return hash_key(seed, static_cast<std::int64_t>(k), tag);
}

namespace seed_tag {
inline constexpr std::uint64_t environment = 0x656e76;
inline constexpr std::uint64_t walker = 0x77616c6b;
}  // namespace seed_tag

/// Sequential generator for walker moves. Output mapping to doubles is done
/// here rather than by <random> distributions so streams are bit-stable
/// across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

    double uniform() noexcept { return to_unit_open0(engine_()); }
    double exponential(double rate) noexcept { return -std::log(uniform()) / rate; }
    std::uint64_t bits() noexcept { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace mott
