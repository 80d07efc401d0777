// SPDX-License-Identifier: MIT
/**
 * @file random.hpp
 * @brief Counter-based random numbers keyed by (seed, stream, index).
 *
 * Every variate is a pure function of its key, so parallel workers can
 * generate any slice of any stream without shared state. The bijection is
 * Philox4x32-10; one 128-bit block yields two 64-bit words, hence two
 * variates per counter value.
 *
 * Normal variates use the inverse-CDF transform z = -sqrt(2) erfc^{-1}(2u)
 * with u in the open interval (0,1) built from the top 53 bits of a word.
 */
#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace he {

struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr int kRounds = 10;

  static Counter apply(Counter ctr, Key key) noexcept;
};

/// 64 random bits for (seed, stream, index).
std::uint64_t counter_bits(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept;

/// Maps 64 random bits to a uniform in (0,1); never returns 0 or 1.
inline double uniform_open(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

/// Standard normal quantile of u in (0,1).
double normal_quantile(double u);

/// Fills `out[i]` with the standard normal variate at index `first + i`.
void fill_standard_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t first,
                          double* out, std::size_t count);

/// Sub-seed derived from a master seed and a fixed label.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view label) noexcept;

/// Sequential view of one counter stream; cheap to copy.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t stream) noexcept : seed_(seed), stream_(stream) {}

  std::uint64_t next_bits() noexcept { return counter_bits(seed_, stream_, index_++); }
  double uniform() noexcept { return uniform_open(next_bits()); }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double normal() { return normal_quantile(uniform()); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t index_ = 0;
};

}  // namespace he
