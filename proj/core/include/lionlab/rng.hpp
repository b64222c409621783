#pragma once

#include <cstddef>
#include <cstdint>

namespace lionlab::rng {

// Counter-based random streams. Every draw is a pure function of
// (seed, role, counter), so any run can be replayed from its seed bundle
// alone and independent implementations can reproduce the exact values.
//
// Construction (all arithmetic mod 2^64):
//   mix(z)            : splitmix64 finalizer
//                       z ^= z >> 30; z *= 0xbf58476d1ce4e5b9
//                       z ^= z >> 27; z *= 0x94d049bb133111eb
//                       z ^= z >> 31
//   stream_key(s, r)  : mix(s * 0x9e3779b97f4a7c15 + r)
//   draw(k, t)        : mix(k + (t + 1) * 0x9e3779b97f4a7c15), t = 0,1,2,...
//   uniform01(k, t)   : (draw(k, t) >> 11) * 2^-53, value in [0, 1)
//   gauss(k, t)       : Box-Muller from draws 2t and 2t+1:
//                       sqrt(-2 ln(1 - u0)) * cos(2 pi u1)
//   index_below(k,t,n): draw(k, t) % n
//
// Role tags keep the dataset, sample-index, init, and replacement streams
// disjoint even when they share a seed.

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

enum class Role : std::uint64_t {
  dataset = 1,
  index = 2,
  init = 3,
  replacement = 4,
  test_dataset = 5,
  sweep = 6,
};

constexpr std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t stream_key(std::uint64_t seed, Role role) {
  return mix(seed * kGolden + static_cast<std::uint64_t>(role));
}

constexpr std::uint64_t draw(std::uint64_t key, std::uint64_t t) {
  return mix(key + (t + 1) * kGolden);
}

double uniform01(std::uint64_t key, std::uint64_t t);

// Standard normal; consumes the two raw draws 2t and 2t+1.
double gauss(std::uint64_t key, std::uint64_t t);

std::size_t index_below(std::uint64_t key, std::uint64_t t, std::size_t n);

}  // namespace lionlab::rng
