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

// Baseband uplink link-level simulator: QPSK, block Rayleigh fading,
// superimposed interferers, AWGN and zero-forcing equalization.

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "mulic/rng.hpp"

namespace mulic::phy {

using cdouble = std::complex<double>;

struct ComplexSequence {
  std::vector<double> re;
  std::vector<double> im;

  ComplexSequence() = default;
  explicit ComplexSequence(std::size_t n) : re(n, 0.0), im(n, 0.0) {}

  std::size_t size() const noexcept { return re.size(); }
  cdouble at(std::size_t i) const { return {re[i], im[i]}; }
  void set(std::size_t i, cdouble v) {
    re[i] = v.real();
    im[i] = v.imag();
  }
  /// Throws InvalidInput if lengths differ or a value is not finite.
  void validate() const;
  bool operator==(const ComplexSequence&) const = default;
};

struct BlockConfig {
  int symbols_per_block = 392;
  double desired_snr_db = 0.0;
  // Interference power relative to the desired received power, one per interferer.
  std::vector<double> interferer_offsets_db;
  double noise_variance = 1.0;

  int user_count() const noexcept { return 1 + static_cast<int>(interferer_offsets_db.size()); }
  void validate() const;
};

struct BlockRealization {
  cdouble h_desired;
  std::vector<cdouble> h_interferers;  // already power-scaled
  std::vector<ComplexSequence> tx_symbols;  // desired user first
  ComplexSequence received;
  ComplexSequence equalized;
  double realized_sinr_db = 0.0;
  // Total received power over noise, what a receiver blind to the
  // interferers would report as the block SNR.
  double received_power_snr_db = 0.0;
};

ComplexSequence qpsk_modulate(std::span<const std::uint8_t> bits);
ComplexSequence sample_rayleigh(CounterRng& rng, std::size_t count);

BlockRealization transmit_block(CounterRng& rng, const BlockConfig& cfg);

ComplexSequence zf_equalize(const ComplexSequence& received, cdouble h_desired);

/// 10 log10(|h1|^2 / (sum |hk|^2 + noise)) in dB.
double realized_sinr(cdouble h_desired, std::span<const cdouble> h_interferers, double noise_variance);

/// 10 log10((|h1|^2 + sum |hk|^2) / noise) in dB.
double received_power_snr(cdouble h_desired, std::span<const cdouble> h_interferers, double noise_variance);

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace mulic::phy
