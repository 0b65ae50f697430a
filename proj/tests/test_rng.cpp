// Copyright 2026 The mulic Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mulic/rng.hpp"

using mulic::CounterRng;

TEST_CASE("same key gives the same stream") {
  CounterRng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("substreams differ from each other and from the parent") {
  const CounterRng root(7);
  auto s1 = root.substream("x", 0);
  auto s2 = root.substream("x", 1);
  auto s3 = root.substream("y", 0);
  CHECK(s1.key() != s2.key());
  CHECK(s1.key() != s3.key());
  CHECK(s1.key() != root.key());
  CHECK(root.substream("x", 0).next_u64() == s1.next_u64());
}

TEST_CASE("uniform stays in [0,1) and has mean near one half") {
  CounterRng r(1);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  // sd of the mean is sqrt(1/12/n) ~ 6.5e-4
  CHECK(std::abs(sum / n - 0.5) < 4 * 6.5e-4);
}

TEST_CASE("below is unbiased over a small range") {
  CounterRng r(3);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const auto v = r.below(7);
    REQUIRE(v < 7);
    ++counts[v];
  }
  // chi-square with 6 dof; 1% critical value 16.81
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - 10000.0) * (c - 10000.0) / 10000.0;
  CHECK(chi2 < 16.81);
}

TEST_CASE("normal draws have zero mean and unit variance") {
  CounterRng r(5);
  const int n = 200000;
  double s = 0.0, ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    ss += x * x;
  }
  CHECK(std::abs(s / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(ss / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("shuffle yields a permutation and is deterministic") {
  std::vector<std::size_t> a(50), b(50);
  std::iota(a.begin(), a.end(), 0);
  std::iota(b.begin(), b.end(), 0);
  CounterRng r1(9), r2(9);
  r1.shuffle(a);
  r2.shuffle(b);
  CHECK(a == b);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
  CHECK(!std::is_sorted(a.begin(), a.end()));
}
