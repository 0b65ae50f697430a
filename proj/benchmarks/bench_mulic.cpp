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

#include <benchmark/benchmark.h>

#include <vector>

#include "mulic/cnn.hpp"
#include "mulic/cost_model.hpp"
#include "mulic/mia.hpp"
#include "mulic/phy_sim.hpp"
#include "mulic/rng.hpp"

using namespace mulic;

namespace {

nn::Tensor noise_batch(std::size_t b) {
  CounterRng r(1);
  nn::Tensor t({b, 1, nn::kInputSide, nn::kInputSide});
  for (auto& v : t.data) v = r.normal();
  return t;
}

std::vector<int> labels(std::size_t b) {
  std::vector<int> y(b);
  for (std::size_t i = 0; i < b; ++i) y[i] = static_cast<int>(i % nn::kClasses);
  return y;
}

void BM_Conv(benchmark::State& s) {
  const auto x = noise_batch(static_cast<std::size_t>(s.range(0)));
  const auto p = nn::init_params(2);
  for (auto _ : s) benchmark::DoNotOptimize(nn::conv2d_forward(x, p.conv_w, p.conv_b));
  s.SetItemsProcessed(s.iterations() * s.range(0));
}
BENCHMARK(BM_Conv)->Arg(1)->Arg(64);

void BM_Forward(benchmark::State& s) {
  const auto x = noise_batch(static_cast<std::size_t>(s.range(0)));
  const auto p = nn::init_params(2);
  for (auto _ : s) benchmark::DoNotOptimize(nn::forward(p, x, false));
  s.SetItemsProcessed(s.iterations() * s.range(0));
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(64)->Arg(256);

// One optimizer step as the trainer runs it.
void BM_TrainStep(benchmark::State& s) {
  const auto b = static_cast<std::size_t>(s.range(0));
  const auto x = noise_batch(b);
  const auto y = labels(b);
  auto p = nn::init_params(2);
  auto adam = nn::AdamState::zeros();
  for (auto _ : s) {
    auto fw = nn::forward(p, x);
    const auto g = nn::backward(p, fw.cache, y);
    nn::adam_step(p, g, adam, 1e-4);
  }
  s.SetItemsProcessed(s.iterations() * s.range(0));
}
BENCHMARK(BM_TrainStep)->Arg(64);

void BM_TransmitBlock(benchmark::State& s) {
  CounterRng r(3);
  phy::BlockConfig cfg;
  cfg.desired_snr_db = 5.0;
  cfg.interferer_offsets_db = {6.0, 6.0};
  for (auto _ : s) benchmark::DoNotOptimize(phy::transmit_block(r, cfg));
}
BENCHMARK(BM_TransmitBlock);

void BM_ExpectedFirst(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(cost::expected_unlearned_first(s.range(0), 5));
}
BENCHMARK(BM_ExpectedFirst)->Arg(100)->Arg(1000)->Arg(5000);

void BM_MonteCarlo(benchmark::State& s) {
  const cost::CostConfig cfg{{0.1, 0.1, 0.1}, 30, 3, 10, {{10, 1}}, -1};
  for (auto _ : s) benchmark::DoNotOptimize(cost::monte_carlo_oracle(cfg, 10000, 4));
}
BENCHMARK(BM_MonteCarlo)->Unit(benchmark::kMillisecond);

void BM_MiaScore(benchmark::State& s) {
  CounterRng r(5);
  std::vector<double> a(625), b(625);
  for (auto& v : a) v = std::abs(r.normal());
  for (auto& v : b) v = std::abs(r.normal()) + 0.3;
  const auto samples = mia::collect_losses(a, b);
  for (auto _ : s) benchmark::DoNotOptimize(mia::mia_score(samples, 5, 6));
}
BENCHMARK(BM_MiaScore)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
