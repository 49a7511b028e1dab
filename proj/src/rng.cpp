#include "bhmds/rng.hpp"

#include "bhmds/error.hpp"

namespace bhmds {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ fnv1a64(stream)) + index);
}

const char* to_string(DataErrorCode code) noexcept {
  switch (code) {
    case DataErrorCode::Parse: return "Parse";
    case DataErrorCode::NonSquare: return "NonSquare";
    case DataErrorCode::NegativeEntry: return "NegativeEntry";
    case DataErrorCode::NonzeroDiagonal: return "NonzeroDiagonal";
    case DataErrorCode::NotFinite: return "NotFinite";
    case DataErrorCode::Asymmetric: return "Asymmetric";
    case DataErrorCode::ZeroOffDiagonal: return "ZeroOffDiagonal";
    case DataErrorCode::Disconnected: return "Disconnected";
    case DataErrorCode::BadIndex: return "BadIndex";
  }
  return "Unknown";
}

}  // namespace bhmds
