#include "lionlab/rng.hpp"

#include <cmath>

namespace lionlab::rng {

double uniform01(std::uint64_t key, std::uint64_t t) {
  return static_cast<double>(draw(key, t) >> 11) * 0x1.0p-53;
}

double gauss(std::uint64_t key, std::uint64_t t) {
  const double u0 = uniform01(key, 2 * t);
  const double u1 = uniform01(key, 2 * t + 1);
  const double r = std::sqrt(-2.0 * std::log1p(-u0));
  return r * std::cos(2.0 * 3.141592653589793238462643383279502884 * u1);
}

std::size_t index_below(std::uint64_t key, std::uint64_t t, std::size_t n) {
  return static_cast<std::size_t>(draw(key, t) % static_cast<std::uint64_t>(n));
}

}  // namespace lionlab::rng
