#pragma once

#include <cstdint>
#include <initializer_list>

namespace ealoc {

// SplitMix64 finaliser; mixes a base seed with stream tags so that every
// (replication, purpose) pair gets an independent, reproducible seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) noexcept {
  std::uint64_t h = splitmix64(base);
  for (auto t : tags) h = splitmix64(h ^ splitmix64(t + 0x632BE59BD9B4E019ull));
  return h;
}

// Stream tags.
inline constexpr std::uint64_t kStreamWorld = 1;
inline constexpr std::uint64_t kStreamOracleMask = 2;
inline constexpr std::uint64_t kStreamCorruption = 3;
inline constexpr std::uint64_t kStreamMotion = 4;
inline constexpr std::uint64_t kStreamSensing = 5;
inline constexpr std::uint64_t kStreamPolicy = 6;
inline constexpr std::uint64_t kStreamSplit = 7;
inline constexpr std::uint64_t kStreamFixture = 8;

}  // namespace ealoc
