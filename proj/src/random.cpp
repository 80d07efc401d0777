// SPDX-License-Identifier: MIT
#include "he/random.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/policies/policy.hpp>

#include <cmath>

namespace he {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

using QuantilePolicy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) noexcept {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

inline Philox4x32::Counter philox_block(std::uint64_t seed, std::uint64_t stream,
                                        std::uint64_t block) noexcept {
  return Philox4x32::apply(
      {static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
       static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)},
      {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
}

inline std::uint64_t join(std::uint32_t lo, std::uint32_t hi) noexcept {
  return (static_cast<std::uint64_t>(hi) << 32) | lo;
}

}  // namespace

Philox4x32::Counter Philox4x32::apply(Counter ctr, Key key) noexcept {
  for (int round = 0; round < kRounds; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t lo0, hi0, lo1, hi1;
    mulhilo(kMul0, ctr[0], lo0, hi0);
    mulhilo(kMul1, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

std::uint64_t counter_bits(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
  const auto r = philox_block(seed, stream, index >> 1);
  return (index & 1) == 0 ? join(r[0], r[1]) : join(r[2], r[3]);
}

double normal_quantile(double u) {
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u, QuantilePolicy());
}

void fill_standard_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t first,
                          double* out, std::size_t count) {
  std::size_t i = 0;
  std::uint64_t index = first;
  if (count > 0 && (index & 1) != 0) {
    out[i++] = normal_quantile(uniform_open(counter_bits(seed, stream, index++)));
  }
  for (; i + 1 < count; i += 2, index += 2) {
    const auto r = philox_block(seed, stream, index >> 1);
    out[i] = normal_quantile(uniform_open(join(r[0], r[1])));
    out[i + 1] = normal_quantile(uniform_open(join(r[2], r[3])));
  }
  if (i < count) {
    out[i] = normal_quantile(uniform_open(counter_bits(seed, stream, index)));
  }
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view label) noexcept {
  // FNV-1a of the label selects the stream; the Philox output decorrelates it.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return counter_bits(master_seed, h, 0);
}

}  // namespace he
