#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "sstr/rng.hpp"

using sstr::RngStream;

TEST_CASE("identical (seed, stream) pairs reproduce the same sequence") {
  RngStream a(42, 7);
  RngStream b(42, 7);
  for (int i = 0; i < 1000; ++i) CHECK(a.uniform() == b.uniform());
  RngStream c(42, 7);
  RngStream d(42, 7);
  for (int i = 0; i < 100; ++i) {
    CHECK(c.gaussian() == d.gaussian());
    CHECK(c.cgaussian(2.5) == d.cgaussian(2.5));
    CHECK(c.uniform_int(97) == d.uniform_int(97));
  }
}

TEST_CASE("different streams of one seed are distinct sequences") {
  RngStream a(42, 1);
  RngStream b(42, 2);
  int equal = 0;
  for (int i = 0; i < 64; ++i)
    if (a.uniform() == b.uniform()) ++equal;
  CHECK(equal == 0);
}

TEST_CASE("different seeds on one stream are distinct sequences") {
  RngStream a(1, 5);
  RngStream b(2, 5);
  int equal = 0;
  for (int i = 0; i < 64; ++i)
    if (a.uniform() == b.uniform()) ++equal;
  CHECK(equal == 0);
}

TEST_CASE("uniform() stays strictly inside (0, 1)") {
  RngStream rng(3, 0);
  for (int i = 0; i < 200000; ++i) {
    const double u = rng.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("uniform_int() respects its bound and is roughly uniform") {
  RngStream rng(9, 4);
  const std::uint64_t n = 10;
  std::vector<int> counts(n, 0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const std::uint64_t v = rng.uniform_int(n);
    REQUIRE(v < n);
    ++counts[static_cast<std::size_t>(v)];
  }
  // Each bin ~ Binomial(draws, 1/n); 5 sigma around the mean.
  const double mean = static_cast<double>(draws) / static_cast<double>(n);
  const double sigma = std::sqrt(mean * (1.0 - 1.0 / static_cast<double>(n)));
  for (const int c : counts) CHECK(std::abs(c - mean) < 5.0 * sigma);
  CHECK(rng.uniform_int(1) == 0);
}

TEST_CASE("gaussian() has standard moments") {
  RngStream rng(5, 1);
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    sum += g;
    sum_sq += g * g;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 5.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(var - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("cgaussian(v) is circularly symmetric with total variance v") {
  RngStream rng(6, 2);
  const int n = 100000;
  const double v = 3.0;
  double e_abs2 = 0.0, e_re = 0.0, e_im = 0.0, e_re2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const std::complex<double> z = rng.cgaussian(v);
    e_abs2 += std::norm(z);
    e_re += z.real();
    e_im += z.imag();
    e_re2 += z.real() * z.real();
  }
  e_abs2 /= n;
  e_re2 /= n;
  CHECK(std::abs(e_abs2 - v) < 5.0 * v * std::sqrt(2.0 / n));
  CHECK(std::abs(e_re / n) < 5.0 * std::sqrt(v / 2.0 / n));
  CHECK(std::abs(e_im / n) < 5.0 * std::sqrt(v / 2.0 / n));
  // Half the energy sits in the real part.
  CHECK(std::abs(e_re2 - v / 2.0) < 5.0 * (v / 2.0) * std::sqrt(2.0 / n));
}

TEST_CASE("bernoulli() honors degenerate probabilities and the mean") {
  RngStream rng(7, 3);
  for (int i = 0; i < 1000; ++i) {
    CHECK_FALSE(rng.bernoulli(0.0));
    CHECK(rng.bernoulli(1.0));
  }
  int ones = 0;
  const int n = 100000;
  const double p = 0.3;
  for (int i = 0; i < n; ++i)
    if (rng.bernoulli(p)) ++ones;
  const double sigma = std::sqrt(n * p * (1.0 - p));
  CHECK(std::abs(ones - n * p) < 5.0 * sigma);
}
