#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace hsgcn {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed for an independent substream identified by (seed, keys...).
inline std::uint64_t substream_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = mix64(seed);
    for (auto k : keys) h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
    return h;
}

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    return Rng(substream_seed(seed, keys));
}

// Stream tags keep substreams of different subsystems disjoint.
enum class Stream : std::uint64_t {
    Walk = 1,
    Shuffle = 2,
    Init = 3,
    Batch = 4,
    Dropout = 5,
    Synth = 6,
    Split = 7,
    PairSample = 8,
};

inline std::uint64_t tag(Stream s) { return static_cast<std::uint64_t>(s); }

}  // namespace hsgcn
