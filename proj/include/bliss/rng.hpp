#pragma once

#include <cstdint>
#include <string_view>

namespace bliss {

// 64-bit FNV-1a hash, used for seed derivation and dataset fingerprints.
std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t fnv1a64(std::string_view text);

// Deterministic random generator built on SplitMix64.
//
// All distributions are hand-rolled so that a given seed produces the same
// stream on every platform and standard library. The generator name is
// recorded in chain metadata; changing the algorithm is a format break.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "splitmix64";

  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // Raw 64-bit output.
  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01();

  // Uniform on [lo, hi).
  double uniform(double lo, double hi);

  // Unbiased uniform integer in {0, ..., n-1}; n must be positive.
  std::uint64_t uniform_below(std::uint64_t n);

  // Standard normal via Marsaglia's polar method (one spare cached).
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Gamma(shape, rate) with mean shape/rate; Marsaglia-Tsang squeeze,
  // boosted by u^(1/shape) for shape < 1. shape and rate must be positive.
  double gamma(double shape, double rate);

  // Inverse-gamma(shape, scale): scale / Gamma(shape, 1).
  double inv_gamma(double shape, double scale);

  // Child generator for an independent named stream. Advances this
  // generator by one step; result depends on the label and current state.
  Rng split(std::string_view label);

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace bliss
