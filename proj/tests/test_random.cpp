// SPDX-License-Identifier: MIT
#include <doctest.h>

#include "he/random.hpp"

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

using he::Philox4x32;

TEST_CASE("philox4x32-10 known-answer vectors") {
  struct Kat {
    Philox4x32::Counter ctr;
    Philox4x32::Key key;
    Philox4x32::Counter expected;
  };
  const std::vector<Kat> kats = {
      {{0, 0, 0, 0}, {0, 0}, {0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}},
      {{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
       {0xffffffff, 0xffffffff},
       {0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}},
      {{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
       {0xa4093822, 0x299f31d0},
       {0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}},
  };
  for (const auto& k : kats) CHECK(Philox4x32::apply(k.ctr, k.key) == k.expected);
}

TEST_CASE("uniform_open stays strictly inside (0, 1)") {
  CHECK(he::uniform_open(0) == std::ldexp(1.0, -53));
  CHECK(he::uniform_open(~std::uint64_t{0}) == 1.0 - std::ldexp(1.0, -53));
  CHECK(he::uniform_open(~std::uint64_t{0}) < 1.0);
}

TEST_CASE("normal_quantile reference values") {
  CHECK(he::normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(he::normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
  CHECK(he::normal_quantile(0.001) == doctest::Approx(-3.090232306167813).epsilon(1e-14));
  CHECK(he::normal_quantile(0.2) == doctest::Approx(-he::normal_quantile(0.8)).epsilon(1e-14));
}

TEST_CASE("counter streams are random access") {
  he::CounterStream s(7, 3);
  std::vector<std::uint64_t> seq;
  for (int i = 0; i < 10; ++i) seq.push_back(s.next_bits());
  for (std::uint64_t i = 0; i < 10; ++i) CHECK(he::counter_bits(7, 3, i) == seq[i]);
  CHECK(he::counter_bits(7, 4, 0) != seq[0]);
  CHECK(he::counter_bits(8, 3, 0) != seq[0]);

  std::vector<double> a(16), b(6);
  he::fill_standard_normal(11, 2, 0, a.data(), a.size());
  he::fill_standard_normal(11, 2, 5, b.data(), b.size());
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(a[5 + i] == b[i]);
}

TEST_CASE("derived seeds are fixed and label dependent") {
  const std::set<std::uint64_t> seeds = {he::derive_seed(42, "converge"), he::derive_seed(42, "moments"),
                                         he::derive_seed(42, "compare"), he::derive_seed(42, "timechange"),
                                         he::derive_seed(43, "converge")};
  CHECK(seeds.size() == 5);
  CHECK(he::derive_seed(42, "converge") == he::derive_seed(42, "converge"));
}
