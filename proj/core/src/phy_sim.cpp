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

#include "mulic/phy_sim.hpp"

#include <cmath>
#include <numbers>

#include "mulic/error.hpp"

namespace mulic::phy {

namespace {
constexpr double kMinChannelMagnitude = 1e-12;
}

void ComplexSequence::validate() const {
  if (re.size() != im.size()) throw InvalidInput("complex sequence with mismatched re/im lengths");
  for (std::size_t i = 0; i < re.size(); ++i) {
    if (!std::isfinite(re[i]) || !std::isfinite(im[i])) throw InvalidInput("non-finite complex sample");
  }
}

void BlockConfig::validate() const {
  if (symbols_per_block <= 0) throw InvalidInput("symbols_per_block must be positive");
  if (!(noise_variance > 0.0) || !std::isfinite(noise_variance)) {
    throw InvalidInput("noise_variance must be positive");
  }
  if (!std::isfinite(desired_snr_db)) throw InvalidInput("desired_snr_db must be finite");
  for (double o : interferer_offsets_db) {
    if (!std::isfinite(o)) throw InvalidInput("interferer offset must be finite");
  }
}

ComplexSequence qpsk_modulate(std::span<const std::uint8_t> bits) {
  if (bits.size() % 2 != 0) throw InvalidInput("QPSK needs an even number of bits");
  const double a = std::numbers::sqrt2 / 2.0;
  ComplexSequence out(bits.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto b0 = bits[2 * i], b1 = bits[2 * i + 1];
    if (b0 > 1 || b1 > 1) throw InvalidInput("bits must be 0 or 1");
    out.re[i] = b0 == 0 ? a : -a;
    out.im[i] = b1 == 0 ? a : -a;
  }
  return out;
}

ComplexSequence sample_rayleigh(CounterRng& rng, std::size_t count) {
  if (count == 0) throw InvalidInput("sample_rayleigh needs count >= 1");
  ComplexSequence out(count);
  for (std::size_t i = 0; i < count; ++i) out.set(i, rng.complex_normal(1.0));
  return out;
}

double realized_sinr(cdouble h_desired, std::span<const cdouble> h_interferers, double noise_variance) {
  if (!(noise_variance > 0.0)) throw InvalidInput("noise_variance must be positive");
  double interference = 0.0;
  for (const auto& h : h_interferers) interference += std::norm(h);
  return 10.0 * std::log10(std::norm(h_desired) / (interference + noise_variance));
}

double received_power_snr(cdouble h_desired, std::span<const cdouble> h_interferers, double noise_variance) {
  if (!(noise_variance > 0.0)) throw InvalidInput("noise_variance must be positive");
  double power = std::norm(h_desired);
  for (const auto& h : h_interferers) power += std::norm(h);
  return 10.0 * std::log10(power / noise_variance);
}

ComplexSequence zf_equalize(const ComplexSequence& received, cdouble h_desired) {
  if (std::abs(h_desired) < kMinChannelMagnitude) {
    throw DegenerateChannel("desired channel magnitude below 1e-12, cannot zero-force");
  }
  ComplexSequence out(received.size());
  for (std::size_t i = 0; i < received.size(); ++i) out.set(i, received.at(i) / h_desired);
  return out;
}

BlockRealization transmit_block(CounterRng& rng, const BlockConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.symbols_per_block);
  BlockRealization r;

  auto random_symbols = [&] {
    std::vector<std::uint8_t> bits(2 * n);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.next_u64() >> 63);
    return qpsk_modulate(bits);
  };

  // Average desired received power is snr * noise.
  r.h_desired = rng.complex_normal(db_to_linear(cfg.desired_snr_db) * cfg.noise_variance);
  if (std::abs(r.h_desired) < kMinChannelMagnitude) {
    throw DegenerateChannel("drew a desired channel below 1e-12");
  }
  r.tx_symbols.push_back(random_symbols());

  // Each interferer fades with its own phase but lands at exactly the
  // configured offset from this block's desired received power.
  const double desired_mag = std::abs(r.h_desired);
  for (double off : cfg.interferer_offsets_db) {
    const double phase = 2.0 * std::numbers::pi * rng.uniform();
    r.h_interferers.push_back(std::polar(desired_mag * std::pow(10.0, off / 20.0), phase));
    r.tx_symbols.push_back(random_symbols());
  }

  r.received = ComplexSequence(n);
  for (std::size_t i = 0; i < n; ++i) {
    cdouble y = r.h_desired * r.tx_symbols[0].at(i);
    for (std::size_t k = 0; k < r.h_interferers.size(); ++k) y += r.h_interferers[k] * r.tx_symbols[k + 1].at(i);
    y += rng.complex_normal(cfg.noise_variance);
    r.received.set(i, y);
  }
  r.equalized = zf_equalize(r.received, r.h_desired);
  r.realized_sinr_db = realized_sinr(r.h_desired, r.h_interferers, cfg.noise_variance);
  r.received_power_snr_db = received_power_snr(r.h_desired, r.h_interferers, cfg.noise_variance);
  return r;
}

}  // namespace mulic::phy
