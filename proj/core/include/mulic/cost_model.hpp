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

// Unlearning-cost analysis: how likely a submodel is to contain
// inter-user interference and how many samples must be retrained per
// unlearning request, in closed form and by direct simulation.

#include <cstdint>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace mulic::cost {

/// Samples and time frames already cleansed before user n is cancelled.
struct CleansedStage {
  std::int64_t samples = 0;  // K^(n)
  std::int64_t frames = 0;   // t0^(n)
};

struct CostConfig {
  std::vector<double> user_activity_probs;  // one per interfering user
  std::int64_t total_samples = 0;           // K
  std::int64_t frames_per_model = 0;        // t0
  int model_count = 1;                      // M
  /// Stages n = 1..nu. Stage 0 is always (0, 0) and is not listed.
  std::vector<CleansedStage> cleansed_history;
  /// Users already cancelled; defaults to cleansed_history.size().
  int nu = -1;

  int user_count() const { return static_cast<int>(user_activity_probs.size()) + 1; }
  int effective_nu() const { return nu < 0 ? static_cast<int>(cleansed_history.size()) : nu; }
  void validate() const;
};

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

struct MonteCarloEstimates {
  std::uint64_t trials = 0;
  Estimate p_event;
  std::vector<Estimate> pmf;
  Estimate expected_first;
  Estimate expected_first_floored;
  Estimate expected_after;
  Estimate expected_after_floored;
};

struct CostReport {
  double p_event = 0.0;
  std::vector<double> pmf;
  double expected_first = 0.0;          // E[A_1], literal
  double expected_first_floored = 0.0;  // per-request counts floored at zero
  double expected_after = 0.0;          // E[A_nu], literal
  double expected_after_floored = 0.0;
  MonteCarloEstimates mc;
};

/// Probability that at least one interferer is active: 1 - prod(1 - p_i).
double p_event_interference(const std::vector<double>& probs);

/// Binomial pmf of m out of M models containing interference, m = 0..M.
std::vector<double> pmf_interfered_models(int model_count, double p_event);

/// Probability that j of the i-1 earlier requests hit the same submodel
/// when each does so with probability 1/t_eff.
double retrain_count_pmf(std::int64_t request, std::int64_t j, double t_eff);

/// Expected unlearned samples for the first cancelled user.
double expected_unlearned_first(std::int64_t total_samples, std::int64_t frames);
/// Same process with each request's retrain count floored at zero.
double expected_unlearned_first_floored(std::int64_t total_samples, std::int64_t frames);

/// Expected unlearned samples after `nu` cancelled users.
double expected_unlearned_after(const CostConfig& cfg, int nu);
double expected_unlearned_after_floored(const CostConfig& cfg, int nu);

/// Simulates user activity and the request process directly.
MonteCarloEstimates monte_carlo_oracle(const CostConfig& cfg, std::uint64_t trials,
                                       std::uint64_t seed);

CostReport analyze(const CostConfig& cfg, std::uint64_t trials, std::uint64_t seed);

CostConfig cost_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CostReport& r);

}  // namespace mulic::cost
