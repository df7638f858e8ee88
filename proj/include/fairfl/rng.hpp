#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace fairfl {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Mixes a base seed with an ordered list of tags (client id, round, ...).
/// Pure in its arguments, so serial and parallel schedules see the same
/// streams. Tag order matters: derive_seed(s, {1, 2}) != derive_seed(s, {2, 1}).
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = splitmix64(base);
  for (auto t : tags) h = splitmix64(h ^ splitmix64(t + 0x632be59bd9b4e019ULL));
  return h;
}

// Stream tags used by the pipeline.
namespace stream {
inline constexpr std::uint64_t init = 0x696e6974;
inline constexpr std::uint64_t partition = 0x70617274;
inline constexpr std::uint64_t split = 0x73706c74;
inline constexpr std::uint64_t local = 0x6c6f636c;
inline constexpr std::uint64_t epoch = 0x65706f63;
inline constexpr std::uint64_t finetune = 0x66746e65;
inline constexpr std::uint64_t flip = 0x666c6970;
inline constexpr std::uint64_t data = 0x64617461;
}  // namespace stream

}  // namespace fairfl
