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

#include "mulic/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mulic/error.hpp"
#include "mulic/rng.hpp"

namespace mulic::cost {

namespace {

// Rows with more than this many trials are evaluated in the log domain.
constexpr std::int64_t kDirectRowLimit = 60;

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InvalidInput(std::string(what) + " must lie in [0, 1], got " + std::to_string(p));
  }
}

// pmf of Binomial(n, p) for j = 0..n written into row.
void binomial_row(std::int64_t n, double p, std::vector<double>& row) {
  row.assign(static_cast<std::size_t>(n + 1), 0.0);
  const double q = 1.0 - p;
  if (q == 0.0) {
    row[static_cast<std::size_t>(n)] = 1.0;
    return;
  }
  if (p == 0.0) {
    row[0] = 1.0;
    return;
  }
  if (n <= kDirectRowLimit) {
    double coeff = 1.0;
    for (std::int64_t j = 0; j <= n; ++j) {
      row[static_cast<std::size_t>(j)] =
          coeff * std::pow(p, static_cast<double>(j)) * std::pow(q, static_cast<double>(n - j));
      coeff = coeff * static_cast<double>(n - j) / static_cast<double>(j + 1);
    }
    return;
  }
  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  const double log_n_fact = std::lgamma(static_cast<double>(n) + 1.0);
  for (std::int64_t j = 0; j <= n; ++j) {
    const double log_coeff = log_n_fact - std::lgamma(static_cast<double>(j) + 1.0) -
                             std::lgamma(static_cast<double>(n - j) + 1.0);
    row[static_cast<std::size_t>(j)] =
        std::exp(log_coeff + static_cast<double>(j) * log_p + static_cast<double>(n - j) * log_q);
  }
}

// sum_{i=1}^{requests} sum_{j=0}^{i-1} pmf(i, j) * (per_frame - 1 - j),
// optionally flooring each count at zero.
double request_sum(std::int64_t requests, double per_frame, double t_eff, bool floored) {
  const double p = 1.0 / t_eff;
  std::vector<double> row;
  double total = 0.0;
  for (std::int64_t i = 1; i <= requests; ++i) {
    binomial_row(i - 1, p, row);
    double inner = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      double count = per_frame - 1.0 - static_cast<double>(j);
      if (floored) count = std::max(count, 0.0);
      inner += row[j] * count;
    }
    total += inner;
  }
  return total;
}

double stage_frames(const CostConfig& cfg, int n) {
  const double frames = n == 0 ? 0.0 : static_cast<double>(cfg.cleansed_history[n - 1].frames);
  const double t_eff = static_cast<double>(cfg.frames_per_model) - frames;
  if (t_eff < 1.0) {
    throw InvalidInput("invalid history: t0 - t0^(" + std::to_string(n) + ") = " +
                       std::to_string(t_eff) + " < 1");
  }
  return t_eff;
}

double stage_samples(const CostConfig& cfg, int n) {
  return static_cast<double>(cfg.total_samples) -
         (n == 0 ? 0.0 : static_cast<double>(cfg.cleansed_history[n - 1].samples));
}

void check_nu(const CostConfig& cfg, int nu) {
  if (nu < 0 || nu > cfg.user_count() - 2) {
    throw InvalidInput("nu = " + std::to_string(nu) + " outside [0, N-2] with N = " +
                       std::to_string(cfg.user_count()));
  }
  if (static_cast<std::size_t>(nu) > cfg.cleansed_history.size()) {
    throw InvalidInput("cleansed_history has " + std::to_string(cfg.cleansed_history.size()) +
                       " stages, need " + std::to_string(nu));
  }
}

double after_sum(const CostConfig& cfg, int nu, bool floored) {
  cfg.validate();
  check_nu(cfg, nu);
  double total = 0.0;
  for (int n = 0; n <= nu; ++n) {
    const double t_eff = stage_frames(cfg, n);
    total += request_sum(cfg.total_samples, stage_samples(cfg, n) / t_eff, t_eff, floored);
  }
  return total;
}

Estimate mean_and_error(double sum, double sum_sq, std::uint64_t n) {
  const double nn = static_cast<double>(n);
  const double mean = sum / nn;
  const double var = std::max(sum_sq / nn - mean * mean, 0.0) * nn / std::max(nn - 1.0, 1.0);
  return {mean, std::sqrt(var / nn)};
}

struct RequestTrial {
  double raw = 0.0;
  double floored = 0.0;
};

// One realization of the request process: request i retrains
// per_frame - 1 - J_i samples, J_i counting earlier same-submodel hits.
RequestTrial simulate_requests(CounterRng& rng, std::int64_t requests, double per_frame,
                               double t_eff) {
  const double p_same = 1.0 / t_eff;
  RequestTrial out;
  std::int64_t hits = 0;
  for (std::int64_t i = 1; i <= requests; ++i) {
    const double count = per_frame - 1.0 - static_cast<double>(hits);
    out.raw += count;
    out.floored += std::max(count, 0.0);
    if (i < requests && rng.bernoulli(p_same)) ++hits;
  }
  return out;
}

bool any_interferer_active(CounterRng& rng, const std::vector<double>& probs) {
  bool any = false;
  // Every user is drawn so the stream layout does not depend on outcomes.
  for (double p : probs) any = rng.bernoulli(p) || any;
  return any;
}

}  // namespace

void CostConfig::validate() const {
  for (double p : user_activity_probs) check_probability(p, "user activity probability");
  if (total_samples < 1) throw InvalidInput("K must be >= 1");
  if (frames_per_model < 1) throw InvalidInput("t0 must be >= 1");
  if (model_count < 1) throw InvalidInput("M must be >= 1");
  for (const auto& stage : cleansed_history) {
    if (stage.samples < 0 || stage.samples >= total_samples) {
      throw InvalidInput("cleansed samples K^(n) must lie in [0, K)");
    }
    if (stage.frames < 0 || stage.frames >= frames_per_model) {
      throw InvalidInput("cleansed frames t0^(n) must lie in [0, t0)");
    }
  }
}

double p_event_interference(const std::vector<double>& probs) {
  // P <- P + p(1 - P) equals 1 - prod(1 - p) and keeps single-user
  // inputs exact.
  double any = 0.0;
  for (double p : probs) {
    check_probability(p, "user activity probability");
    any += p * (1.0 - any);
  }
  return any;
}

std::vector<double> pmf_interfered_models(int model_count, double p_event) {
  if (model_count < 1) throw InvalidInput("M must be >= 1");
  check_probability(p_event, "P_EI");
  std::vector<double> row;
  binomial_row(model_count, p_event, row);
  return row;
}

double retrain_count_pmf(std::int64_t request, std::int64_t j, double t_eff) {
  if (request < 1) throw InvalidInput("request index must be >= 1");
  if (!(t_eff >= 1.0)) throw InvalidInput("effective frame count must be >= 1");
  if (j < 0 || j > request - 1) {
    throw InvalidInput("j = " + std::to_string(j) + " outside [0, i-1]");
  }
  std::vector<double> row;
  binomial_row(request - 1, 1.0 / t_eff, row);
  return row[static_cast<std::size_t>(j)];
}

double expected_unlearned_first(std::int64_t total_samples, std::int64_t frames) {
  if (total_samples < 1 || frames < 1) throw InvalidInput("K and t0 must be >= 1");
  const double t = static_cast<double>(frames);
  return request_sum(total_samples, static_cast<double>(total_samples) / t, t, false);
}

double expected_unlearned_first_floored(std::int64_t total_samples, std::int64_t frames) {
  if (total_samples < 1 || frames < 1) throw InvalidInput("K and t0 must be >= 1");
  const double t = static_cast<double>(frames);
  return request_sum(total_samples, static_cast<double>(total_samples) / t, t, true);
}

double expected_unlearned_after(const CostConfig& cfg, int nu) { return after_sum(cfg, nu, false); }

double expected_unlearned_after_floored(const CostConfig& cfg, int nu) {
  return after_sum(cfg, nu, true);
}

MonteCarloEstimates monte_carlo_oracle(const CostConfig& cfg, std::uint64_t trials,
                                       std::uint64_t seed) {
  cfg.validate();
  if (trials < 10000) throw InvalidInput("Monte Carlo needs at least 1e4 trials");
  const int nu = cfg.effective_nu();
  const bool with_after = cfg.user_count() >= 2;
  if (with_after) check_nu(cfg, nu);

  const CounterRng root(seed);
  MonteCarloEstimates out;
  out.trials = trials;

  {
    CounterRng rng = root.substream("mc.p_event");
    std::uint64_t hits = 0;
    for (std::uint64_t t = 0; t < trials; ++t) hits += any_interferer_active(rng, cfg.user_activity_probs);
    const double p = static_cast<double>(hits) / static_cast<double>(trials);
    out.p_event = {p, std::sqrt(p * (1.0 - p) / static_cast<double>(trials))};
  }
  {
    CounterRng rng = root.substream("mc.pmf");
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(cfg.model_count) + 1, 0);
    for (std::uint64_t t = 0; t < trials; ++t) {
      int m = 0;
      for (int model = 0; model < cfg.model_count; ++model) {
        m += any_interferer_active(rng, cfg.user_activity_probs) ? 1 : 0;
      }
      ++counts[static_cast<std::size_t>(m)];
    }
    for (auto c : counts) {
      const double p = static_cast<double>(c) / static_cast<double>(trials);
      out.pmf.push_back({p, std::sqrt(p * (1.0 - p) / static_cast<double>(trials))});
    }
  }
  {
    CounterRng rng = root.substream("mc.first");
    const double t_eff = static_cast<double>(cfg.frames_per_model);
    const double per_frame = static_cast<double>(cfg.total_samples) / t_eff;
    double s = 0, ss = 0, sf = 0, ssf = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      const auto r = simulate_requests(rng, cfg.total_samples, per_frame, t_eff);
      s += r.raw;
      ss += r.raw * r.raw;
      sf += r.floored;
      ssf += r.floored * r.floored;
    }
    out.expected_first = mean_and_error(s, ss, trials);
    out.expected_first_floored = mean_and_error(sf, ssf, trials);
  }
  if (with_after) {
    CounterRng rng = root.substream("mc.after");
    double s = 0, ss = 0, sf = 0, ssf = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      RequestTrial total;
      for (int n = 0; n <= nu; ++n) {
        const double t_eff = stage_frames(cfg, n);
        const auto r = simulate_requests(rng, cfg.total_samples, stage_samples(cfg, n) / t_eff, t_eff);
        total.raw += r.raw;
        total.floored += r.floored;
      }
      s += total.raw;
      ss += total.raw * total.raw;
      sf += total.floored;
      ssf += total.floored * total.floored;
    }
    out.expected_after = mean_and_error(s, ss, trials);
    out.expected_after_floored = mean_and_error(sf, ssf, trials);
  }
  return out;
}

CostReport analyze(const CostConfig& cfg, std::uint64_t trials, std::uint64_t seed) {
  cfg.validate();
  CostReport r;
  r.p_event = p_event_interference(cfg.user_activity_probs);
  r.pmf = pmf_interfered_models(cfg.model_count, r.p_event);
  r.expected_first = expected_unlearned_first(cfg.total_samples, cfg.frames_per_model);
  r.expected_first_floored =
      expected_unlearned_first_floored(cfg.total_samples, cfg.frames_per_model);
  if (cfg.user_count() >= 2) {
    r.expected_after = expected_unlearned_after(cfg, cfg.effective_nu());
    r.expected_after_floored = expected_unlearned_after_floored(cfg, cfg.effective_nu());
  }
  r.mc = monte_carlo_oracle(cfg, trials, seed);
  return r;
}

CostConfig cost_config_from_json(const nlohmann::json& j) {
  CostConfig cfg;
  cfg.user_activity_probs = j.at("user_activity_probs").get<std::vector<double>>();
  cfg.total_samples = j.at("K").get<std::int64_t>();
  cfg.frames_per_model = j.at("t0").get<std::int64_t>();
  cfg.model_count = j.value("M", 1);
  if (j.contains("cleansed_history")) {
    for (const auto& stage : j.at("cleansed_history")) {
      cfg.cleansed_history.push_back({stage.at("K").get<std::int64_t>(), stage.at("t0").get<std::int64_t>()});
    }
  }
  cfg.nu = j.value("nu", -1);
  cfg.validate();
  return cfg;
}

namespace {
nlohmann::json to_json(const Estimate& e) { return {{"mean", e.mean}, {"se", e.std_error}}; }
}  // namespace

nlohmann::json to_json(const CostReport& r) {
  nlohmann::json mc_pmf = nlohmann::json::array();
  for (const auto& e : r.mc.pmf) mc_pmf.push_back(to_json(e));
  return {
      {"p_event", r.p_event},
      {"pmf", r.pmf},
      {"expected_A1", r.expected_first},
      {"expected_A1_floored", r.expected_first_floored},
      {"expected_Anu", r.expected_after},
      {"expected_Anu_floored", r.expected_after_floored},
      {"monte_carlo",
       {{"trials", r.mc.trials},
        {"p_event", to_json(r.mc.p_event)},
        {"pmf", mc_pmf},
        {"expected_A1", to_json(r.mc.expected_first)},
        {"expected_A1_floored", to_json(r.mc.expected_first_floored)},
        {"expected_Anu", to_json(r.mc.expected_after)},
        {"expected_Anu_floored", to_json(r.mc.expected_after_floored)}}},
  };
}

}  // namespace mulic::cost
