#pragma once

#include <cstdint>
#include <random>

namespace harvestsim {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Used to turn structured seeds (base ^ index) into
// well-separated generator states.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline Rng make_rng(std::uint64_t seed) { return Rng(mix_seed(seed)); }

// Derive an independent child stream; `salt` names the consumer.
inline Rng fork_rng(Rng& parent, std::uint64_t salt) {
  return Rng(mix_seed(parent() ^ mix_seed(salt)));
}

}  // namespace harvestsim
