#include <cmath>
#include <limits>

#include <stdexcept>

#include "doctest.h"
#include "lionlab/rng.hpp"
#include "lionlab/vecmath.hpp"

using namespace lionlab;

namespace {

ParamVector random_vec(std::uint64_t key, std::uint64_t t, std::size_t d,
                       bool with_zeros = false) {
  ParamVector v(d);
  for (std::size_t j = 0; j < d; ++j) {
    v[j] = rng::gauss(key, t * d + j);
    if (with_zeros && rng::draw(key, (t + 1) * d + j) % 4 == 0) v[j] = 0.0;
  }
  return v;
}

}  // namespace

TEST_CASE("sign_vec definition") {
  CHECK(sign_vec({2.0, -3.0}) == ParamVector{1.0, -1.0});
  CHECK(sign_vec({0.0, 0.0}) == ParamVector{0.0, 0.0});
  // subnormal magnitudes still carry their sign
  CHECK(sign_vec({0.5, 0.0, -1e-300}) == ParamVector{1.0, 0.0, -1.0});
}

TEST_CASE("sign_vec rejects non-finite input") {
  CHECK_THROWS_WITH_AS(sign_vec({1.0, std::numeric_limits<double>::quiet_NaN()}),
                       doctest::Contains("non-finite component"), std::domain_error);
  CHECK_THROWS_AS(norm({std::numeric_limits<double>::infinity()}, NormKind::l1),
                  std::domain_error);
}

TEST_CASE("norms") {
  CHECK(norm({1.0, -2.0, 3.0}, NormKind::l1) == doctest::Approx(6.0));
  CHECK(norm({3.0, 4.0}, NormKind::l2) == doctest::Approx(5.0));
  CHECK(norm({-7.0, 2.0}, NormKind::linf) == doctest::Approx(7.0));
  CHECK(norm({0.0, 0.0}, NormKind::l2) == 0.0);
}

TEST_CASE("min_abs_nonzero") {
  CHECK(*min_abs_nonzero({0.5, -0.002}) == doctest::Approx(0.002));
  CHECK(*min_abs_nonzero({0.5, 0.0}) == doctest::Approx(0.5));
  CHECK_FALSE(min_abs_nonzero({0.0, 0.0}).has_value());
}

TEST_CASE("combine") {
  CHECK(combine(0.9, {1.0, 0.0}, 0.1, {0.0, 1.0}) == ParamVector{0.9, 0.1});
  const ParamVector x{1.5, -2.5};
  CHECK(combine(1.0, x, 0.0, {9.0, 9.0}) == x);
  CHECK(combine(0.5, {2.0, 2.0}, 0.5, {4.0, 0.0}) == ParamVector{3.0, 1.0});
  CHECK_THROWS_AS(combine(1.0, {1.0}, 1.0, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("sign_vec is idempotent") {
  const std::uint64_t key = rng::stream_key(11, rng::Role::dataset);
  for (std::uint64_t t = 0; t < 200; ++t) {
    const ParamVector v = random_vec(key, t, 8, true);
    CHECK(sign_vec(sign_vec(v)) == sign_vec(v));
  }
}

TEST_CASE("norm equivalence ||v||_2 <= ||v||_1 <= sqrt(d)||v||_2") {
  const std::uint64_t key = rng::stream_key(12, rng::Role::dataset);
  for (std::uint64_t t = 0; t < 200; ++t) {
    const std::size_t d = 1 + rng::draw(key, 1000 + t) % 16;
    const ParamVector v = random_vec(key, t, d, true);
    const double l1 = norm(v, NormKind::l1);
    const double l2 = norm(v, NormKind::l2);
    CHECK(l2 <= l1 + 1e-12);
    CHECK(l1 <= std::sqrt(static_cast<double>(d)) * l2 + 1e-12);
  }
}

TEST_CASE("min_abs_nonzero is positive when present") {
  const std::uint64_t key = rng::stream_key(13, rng::Role::dataset);
  for (std::uint64_t t = 0; t < 200; ++t) {
    const auto q = min_abs_nonzero(random_vec(key, t, 6, true));
    if (q) CHECK(*q > 0.0);
  }
}

TEST_CASE("sign direction is invariant to positive scaling") {
  const std::uint64_t key = rng::stream_key(14, rng::Role::dataset);
  for (std::uint64_t t = 0; t < 200; ++t) {
    const ParamVector v = random_vec(key, t, 6, true);
    // scales spanning ~24 binades; extreme underflow is out of scope
    const double c = std::exp2(24.0 * (rng::uniform01(key, 5000 + t) - 0.5));
    ParamVector scaled(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) scaled[j] = c * v[j];
    CHECK(sign_vec(scaled) == sign_vec(v));
  }
}
