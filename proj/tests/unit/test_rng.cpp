#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bliss/rng.hpp"

using namespace bliss;

TEST_CASE("fnv1a64 matches the reference test vectors") {
  // Published FNV-1a 64-bit vectors: offset basis for the empty input, then
  // single characters and a short string.
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("b") == 0xaf63df4c8601f1a5ULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);

  const std::string text = "foobar";
  CHECK(fnv1a64(text.data(), text.size()) == fnv1a64(text));
  CHECK(fnv1a64("ab") != fnv1a64("ba"));
}

TEST_CASE("generator streams are deterministic and seed-sensitive") {
  CHECK(std::string(Rng::kAlgorithm) == "splitmix64");
  Rng a(42);
  Rng b(42);
  Rng c(43);
  bool all_equal = true;
  bool any_diff = false;
  for (int i = 0; i < 200; ++i) {
    const std::uint64_t va = a.next_u64();
    if (va != b.next_u64()) all_equal = false;
    if (va != c.next_u64()) any_diff = true;
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("split derives independent labeled streams") {
  Rng base(7);
  Rng lhs = base.split("alpha");
  Rng base2(7);
  Rng lhs2 = base2.split("alpha");
  CHECK(lhs.next_u64() == lhs2.next_u64());

  Rng base3(7);
  Rng rhs = base3.split("beta");
  Rng lhs3 = Rng(7).split("alpha");
  CHECK(lhs3.next_u64() != rhs.next_u64());

  // Splitting advances the parent state.
  Rng p1(11);
  Rng p2(11);
  (void)p1.split("x");
  const std::uint64_t after_split = p1.next_u64();
  const std::uint64_t without_split = p2.next_u64();
  CHECK(after_split != without_split);
}

TEST_CASE("uniform01 and uniform stay in range with the right moments") {
  Rng rng(2024);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sumsq += u * u;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  // 4 standard errors of the sample mean and a loose band for the variance.
  CHECK(std::abs(mean - 0.5) < 4.0 / std::sqrt(12.0 * n));
  CHECK(std::abs(var - 1.0 / 12.0) < 5.0 * (1.0 / 12.0) / std::sqrt(n));

  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform(-3.0, 2.0);
    CHECK(u >= -3.0);
    CHECK(u < 2.0);
  }
}

TEST_CASE("uniform_below is unbiased over its range") {
  Rng rng(5);
  const std::uint64_t n = 10;
  const int draws = 200000;
  std::vector<int> counts(n, 0);
  for (int i = 0; i < draws; ++i) {
    const std::uint64_t v = rng.uniform_below(n);
    REQUIRE(v < n);
    ++counts[static_cast<std::size_t>(v)];
  }
  const double expected = static_cast<double>(draws) / static_cast<double>(n);
  const double se = std::sqrt(expected * (1.0 - 1.0 / n));
  for (const int c : counts) CHECK(std::abs(c - expected) < 5.0 * se);
  CHECK(rng.uniform_below(1) == 0);
}

TEST_CASE("normal draws match standard moments") {
  Rng rng(31337);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0, sumcube = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sumsq += z * z;
    sumcube += z * z * z;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  const double skew = sumcube / n;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(skew) < 4.0 * std::sqrt(15.0 / n));

  double shifted = 0.0;
  for (int i = 0; i < n / 4; ++i) shifted += rng.normal(3.0, 0.5);
  CHECK(std::abs(shifted / (n / 4) - 3.0) < 4.0 * 0.5 / std::sqrt(n / 4.0));
}

TEST_CASE("gamma draws match mean and variance across shapes") {
  const double rate = 2.5;
  for (const double shape : {0.3, 1.0, 4.7}) {
    Rng rng(static_cast<std::uint64_t>(shape * 1000) + 1);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double g = rng.gamma(shape, rate);
      CHECK(g > 0.0);
      sum += g;
      sumsq += g * g;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    const double true_mean = shape / rate;
    const double true_var = shape / (rate * rate);
    CHECK(std::abs(mean - true_mean) < 4.0 * std::sqrt(true_var / n));
    // Var of the sample variance for a gamma: var^2 * (2 + 6/shape) / n.
    const double se_var = true_var * std::sqrt((2.0 + 6.0 / shape) / n);
    CHECK(std::abs(var - true_var) < 5.0 * se_var);
  }
}

TEST_CASE("inverse gamma draws match the closed-form mean") {
  Rng rng(77);
  const double shape = 3.0, scale = 2.0;
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.inv_gamma(shape, scale);
    CHECK(x > 0.0);
    sum += x;
  }
  const double true_mean = scale / (shape - 1.0);
  const double true_var = scale * scale /
                          ((shape - 1.0) * (shape - 1.0) * (shape - 2.0));
  CHECK(std::abs(sum / n - true_mean) < 4.0 * std::sqrt(true_var / n));
}
