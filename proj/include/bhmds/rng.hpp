#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace bhmds {

using Rng = std::mt19937_64;

/// Derives an independent 64-bit seed for a named stream ("chain", "pilot",
/// "simulation", ...) so that every consumer of randomness can be re-seeded
/// from one user seed regardless of scheduling order.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) {
  return Rng(derive_seed(seed, stream, index));
}

/// FNV-1a over bytes; stable across platforms (unlike std::hash).
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace bhmds
