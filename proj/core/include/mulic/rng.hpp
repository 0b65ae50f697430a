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

#pragma once

#include <complex>
#include <cstdint>
#include <string_view>
#include <vector>

namespace mulic {

/// Counter-based 64-bit generator.
///
/// Output n of a stream with key k is splitmix64_finalize(k + (n + 1) * gamma),
/// so any draw can be reproduced from (key, counter) alone and substreams are
/// obtained by hashing a label into a fresh key. Bit-exact across platforms
/// for the integer stream; the floating-point helpers use only IEEE
/// arithmetic plus std::log / std::sqrt / std::cos / std::sin.
class CounterRng {
 public:
  static constexpr std::string_view kAlgorithmId = "splitmix64-ctr/v1";

  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on (0, 1].
  double uniform_open_low() noexcept;
  double normal() noexcept;
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }
  /// Circularly symmetric CN(0, variance).
  std::complex<double> complex_normal(double variance = 1.0) noexcept;

  /// Independent stream keyed by (this key, label, index).
  CounterRng substream(std::string_view label, std::uint64_t index = 0) const noexcept;

  /// In-place Fisher-Yates shuffle of an index vector.
  void shuffle(std::vector<std::size_t>& v) noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t mix64(std::uint64_t z) noexcept;
std::uint64_t hash_label(std::string_view label) noexcept;

}  // namespace mulic
