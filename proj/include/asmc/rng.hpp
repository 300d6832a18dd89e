#pragma once

#include <cstdint>
#include <random>

namespace asmc {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for the stream identified by (base, a, b). Streams depend only on these
/// coordinates, never on the thread that consumes them.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(mix64(mix64(base) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

inline Rng make_rng(std::uint64_t base, std::uint64_t a = 0, std::uint64_t b = 0) {
  return Rng(derive_seed(base, a, b));
}

inline double std_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// Stream tags, so unrelated consumers of one seed never share a stream.
namespace stream {
inline constexpr std::uint64_t baseline = 0x62617365ULL;
inline constexpr std::uint64_t fold = 0x666f6c64ULL;
inline constexpr std::uint64_t resample = 0x72657361ULL;
inline constexpr std::uint64_t particle = 0x70617274ULL;
inline constexpr std::uint64_t refit = 0x72656669ULL;
inline constexpr std::uint64_t predictive = 0x70726564ULL;
inline constexpr std::uint64_t scheme = 0x73636865ULL;
inline constexpr std::uint64_t data = 0x64617461ULL;
}  // namespace stream

}  // namespace asmc
