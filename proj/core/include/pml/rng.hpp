#pragma once

#include <cstdint>
#include <string_view>

namespace pml {

/// SplitMix64 finalizer; used for seeding and for deriving stream keys.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derive an independent child seed from a parent seed and a key.  Children
/// with distinct keys are statistically independent streams.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t key) noexcept;
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) noexcept;

/// xoshiro256** generator with a fully specified output sequence, so results
/// are bit-identical across compilers and standard libraries (unlike the
/// <random> distributions).
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept { return next(); }
  result_type next() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;

  /// Uniform integer in [0, n).  n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;

  /// Standard normal via the polar method.
  double normal() noexcept;

  /// Poisson variate: sequential inversion for mean < 10, PTRS transformed
  /// rejection (Hoermann 1993) above.
  std::uint64_t poisson(double mean);

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace pml
