#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace proxytd {

using Seed = std::uint64_t;
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Child seed for a (parent, tag...) path. Independent of evaluation order, so a
// replication sees the same stream no matter which thread runs it.
inline Seed derive_seed(Seed parent, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t h = splitmix64(parent);
    for (auto t : tags) h = splitmix64(h ^ splitmix64(t + 0x632be59bd9b4e019ULL));
    return h;
}

inline Seed derive_seed(Seed parent, std::uint64_t tag) { return derive_seed(parent, {tag}); }

inline Rng make_rng(Seed seed) { return Rng{splitmix64(seed)}; }

// Stage tags used by the pipelines when splitting a method seed.
namespace stage {
inline constexpr std::uint64_t outcome = 0;    // unweighted intermediate aggregate
inline constexpr std::uint64_t aggregate = 1;  // final weighted aggregate
inline constexpr std::uint64_t projection = 2; // Kemeny projection of non-transitive answers
}  // namespace stage

}  // namespace proxytd
