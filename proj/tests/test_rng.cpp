// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "lapeig/rng.hpp"

using namespace lapeig;

TEST_CASE("SplitMix64 reference sequence for seed 0") {
  SplitMix64 rng(0);
  CHECK(rng.next() == 0xE220A8397B1DCDAFULL);
  CHECK(rng.next() == 0x6E789E6AA1B965F4ULL);
  CHECK(rng.next() == 0x06C45D188009454FULL);
}

TEST_CASE("derived seeds are distinct and stable") {
  CHECK(derive_seed(42, 0) == mix64(42 ^ mix64(0)));
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < 1000; ++i) seeds.push_back(derive_seed(42, i));
  std::sort(seeds.begin(), seeds.end());
  CHECK(std::adjacent_find(seeds.begin(), seeds.end()) == seeds.end());
  CHECK(derive_seed(1, 2) != derive_seed(2, 1));
}

TEST_CASE("uniform_open stays strictly inside (0, 1)") {
  SplitMix64 rng(7);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform_open();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / 100000.0 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("below is unbiased enough and in range") {
  SplitMix64 rng(9);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = rng.below(7);
    REQUIRE(v < 7);
    ++counts[v];
  }
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  CHECK(rng.below(1) == 0);
}

TEST_CASE("exponential, normal and gamma moments") {
  SplitMix64 rng(11);
  const int n = 200000;
  double e = 0.0, z = 0.0, z2 = 0.0, g = 0.0, g_small = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.exponential();
    REQUIRE(x > 0.0);
    e += x;
    const double y = rng.normal();
    z += y;
    z2 += y * y;
    g += rng.gamma(3.0);
    g_small += rng.gamma(0.5);
  }
  CHECK(e / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(std::abs(z / n) < 0.01);
  CHECK(z2 / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(g / n == doctest::Approx(3.0).epsilon(0.01));
  CHECK(g_small / n == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("gamma with shape 1 consumes the same stream as exponential") {
  SplitMix64 a(5), b(5);
  for (int i = 0; i < 10; ++i) CHECK(a.gamma(1.0) == b.exponential());
}

TEST_CASE("shuffle is a seeded permutation") {
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  auto a = v, b = v, c = v;
  SplitMix64 r1(3), r2(3), r3(4);
  shuffle(std::span<int>(a), r1);
  shuffle(std::span<int>(b), r2);
  shuffle(std::span<int>(c), r3);
  CHECK(a == b);
  CHECK(a != c);
  std::sort(a.begin(), a.end());
  CHECK(a == v);
}

TEST_CASE("round half to even") {
  CHECK(round_half_even(0.5) == 0);
  CHECK(round_half_even(1.5) == 2);
  CHECK(round_half_even(2.5) == 2);
  CHECK(round_half_even(-0.5) == 0);
  CHECK(round_half_even(-1.5) == -2);
  CHECK(round_half_even(2.4999) == 2);
  CHECK(round_half_even(2.5001) == 3);
  CHECK(round_half_even(8.0) == 8);
  CHECK(round_half_even(0.8 * 10) == 8);
}
