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

#include <cmath>
#include <numeric>

#include "mulic/cost_model.hpp"
#include "mulic/error.hpp"

using namespace mulic;
using namespace mulic::cost;

namespace {

// Raw first-user sum telescoped by hand: E[J_i] = (i-1)/t.
double raw_first(double k, double t) { return k * (k + 1) / (2 * t) - k; }

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("p_event hand values") {
  CHECK(p_event_interference({0.3}) == 0.3);
  CHECK(p_event_interference({0.5, 0.5}) == 0.75);
  CHECK(p_event_interference({0.1, 0.1, 0.1}) == doctest::Approx(0.271).epsilon(1e-14));
  CHECK(p_event_interference({}) == 0.0);
  CHECK_THROWS_AS(p_event_interference({1.2}), InvalidInput);
  CHECK_THROWS_AS(p_event_interference({-0.1}), InvalidInput);
}

TEST_CASE("p_event bounds and monotonicity") {
  CHECK(p_event_interference({0, 0, 0}) == 0.0);
  CHECK(p_event_interference({0.2, 1.0}) == 1.0);
  for (double a = 0; a <= 1.0; a += 0.125) {
    for (double b = 0; b <= 1.0; b += 0.125) {
      const double p = p_event_interference({a, b});
      CHECK(p >= std::max(a, b) - 1e-15);
      CHECK(p <= 1.0);
      CHECK(p_event_interference({std::min(a + 0.125, 1.0), b}) >= p);
    }
  }
}

TEST_CASE("interfered-model pmf") {
  const auto b = pmf_interfered_models(1, 0.4);
  REQUIRE(b.size() == 2);
  CHECK(b[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(b[1] == doctest::Approx(0.4).epsilon(1e-15));
  for (int m : {1, 5, 10, 64, 200}) {
    for (double p : {0.0, 0.01, 0.271, 0.5, 0.99, 1.0}) {
      const auto pmf = pmf_interfered_models(m, p);
      CHECK(pmf.size() == static_cast<std::size_t>(m + 1));
      CHECK(std::abs(sum(pmf) - 1.0) < 1e-12);
      for (double v : pmf) CHECK((v >= 0 && v <= 1));
    }
  }
  CHECK_THROWS_AS(pmf_interfered_models(0, 0.5), InvalidInput);
  CHECK_THROWS_AS(pmf_interfered_models(3, 1.5), InvalidInput);
}

TEST_CASE("pmf at M=10, P=0.271 agrees with a million Monte Carlo trials") {
  CostConfig cfg{{0.1, 0.1, 0.1}, 10, 2, 10, {}, 0};
  const auto mc = monte_carlo_oracle(cfg, 1'000'000, 17);
  const auto pmf = pmf_interfered_models(10, p_event_interference(cfg.user_activity_probs));
  for (std::size_t m = 0; m < pmf.size(); ++m) {
    CAPTURE(m);
    const double se = std::sqrt(pmf[m] * (1 - pmf[m]) / 1e6);
    CHECK(std::abs(mc.pmf[m].mean - pmf[m]) <= 3 * se + 1e-12);
  }
}

TEST_CASE("retrain_count_pmf") {
  CHECK(retrain_count_pmf(4, 2, 5) == doctest::Approx(0.096).epsilon(1e-14));
  for (double t : {1.0, 2.0, 7.5}) CHECK(retrain_count_pmf(1, 0, t) == 1.0);
  for (std::int64_t i : {1, 10, 61, 62, 500}) {
    double total = 0;
    for (std::int64_t j = 0; j < i; ++j) total += retrain_count_pmf(i, j, 3.0);
    CAPTURE(i);
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(retrain_count_pmf(3, 3, 2.0), InvalidInput);
  CHECK_THROWS_AS(retrain_count_pmf(3, -1, 2.0), InvalidInput);
  CHECK_THROWS_AS(retrain_count_pmf(3, 1, 0.5), InvalidInput);
}

TEST_CASE("expected_unlearned_first") {
  CHECK(expected_unlearned_first(1, 1) == 0.0);
  CHECK(expected_unlearned_first(2, 1) == 1.0);
  SUBCASE("matches the telescoped raw sum") {
    for (std::int64_t k : {1, 7, 50, 100, 400}) {
      for (std::int64_t t : {1, 2, 5, 13}) {
        CAPTURE(k);
        CAPTURE(t);
        const double want = raw_first(static_cast<double>(k), static_cast<double>(t));
        CHECK(expected_unlearned_first(k, t) == doctest::Approx(want).epsilon(1e-10).scale(1.0));
      }
    }
  }
  SUBCASE("floored form is non-decreasing in K") {
    for (std::int64_t t : {2, 3, 5, 10}) {
      double prev = -1.0;
      for (std::int64_t k = 1; k <= 120; ++k) {
        const double v = expected_unlearned_first_floored(k, t);
        CHECK(v >= prev - 1e-9);
        CHECK(v >= 0.0);
        prev = v;
      }
    }
  }
  SUBCASE("raw form is non-decreasing in K once K >= t0 - 1") {
    for (std::int64_t t : {2, 3, 5, 10}) {
      for (std::int64_t k = std::max<std::int64_t>(t - 1, 1); k < 120; ++k) {
        CHECK(expected_unlearned_first(k + 1, t) >= expected_unlearned_first(k, t) - 1e-9);
      }
    }
  }
  SUBCASE("floored never falls below raw") {
    for (std::int64_t k : {5, 50, 100}) {
      CHECK(expected_unlearned_first_floored(k, 5) >= expected_unlearned_first(k, 5) - 1e-9);
    }
  }
  CHECK_THROWS_AS(expected_unlearned_first(0, 2), InvalidInput);
  CHECK_THROWS_AS(expected_unlearned_first(3, 0), InvalidInput);
}

TEST_CASE("expected_unlearned_after") {
  SUBCASE("nu = 0 equals the first-user value") {
    CostConfig cfg{{0.2, 0.3}, 50, 5, 5, {}, 0};
    CHECK(expected_unlearned_after(cfg, 0) == expected_unlearned_first(50, 5));
    CHECK(expected_unlearned_after_floored(cfg, 0) == expected_unlearned_first_floored(50, 5));
  }
  SUBCASE("one cleansed stage adds the reduced-count sum") {
    CostConfig cfg{{0.1, 0.1, 0.1}, 30, 3, 10, {{10, 1}}, 1};
    // Stage 1 runs K = 30 requests with (30 - 10) / 2 samples per frame.
    const double stage1 = 30.0 * (10.0 - 1.0) - 30.0 * 29.0 / (2.0 * 2.0);
    CHECK(expected_unlearned_after(cfg, 1) ==
          doctest::Approx(raw_first(30, 3) + stage1).epsilon(1e-10));
  }
  SUBCASE("history that cleanses almost everything stays finite") {
    CostConfig cfg{{0.5, 0.5}, 20, 4, 2, {{19, 3}}, 1};
    const double v = expected_unlearned_after(cfg, 1);
    CHECK(std::isfinite(v));
    CHECK(v >= expected_unlearned_first(20, 4) - 20.0 * 20.0);
    CHECK(expected_unlearned_after_floored(cfg, 1) >= 0.0);
  }
  SUBCASE("invalid history and nu are rejected") {
    CostConfig cfg{{0.5, 0.5}, 20, 4, 2, {{5, 4}}, 1};
    CHECK_THROWS_AS(expected_unlearned_after(cfg, 1), InvalidInput);
    CostConfig short_history{{0.5, 0.5}, 20, 4, 2, {}, 1};
    CHECK_THROWS_AS(expected_unlearned_after(short_history, 1), InvalidInput);
    CostConfig too_many{{0.5}, 20, 4, 2, {{5, 1}}, 1};
    CHECK_THROWS_AS(expected_unlearned_after(too_many, 1), InvalidInput);
  }
}

TEST_CASE("closed forms agree with the Monte Carlo oracle") {
  const std::vector<CostConfig> grid{
      {{0.2, 0.3}, 50, 5, 5, {}, 0},
      {{0.1, 0.1, 0.1}, 30, 3, 10, {{10, 1}}, 1},
      {{0.05, 0.6, 0.3}, 80, 4, 3, {{20, 2}}, 1},
  };
  for (const auto& cfg : grid) {
    const auto r = analyze(cfg, 100'000, 5);
    const double se_p = std::sqrt(r.p_event * (1 - r.p_event) / 1e5);
    CHECK(std::abs(r.mc.p_event.mean - r.p_event) <= 3 * se_p + 1e-12);
    double worst = 0;
    for (std::size_t m = 0; m < r.pmf.size(); ++m) worst = std::max(worst, std::abs(r.mc.pmf[m].mean - r.pmf[m]));
    CHECK(worst < 0.01);
    CHECK(r.mc.expected_first.mean == doctest::Approx(r.expected_first).epsilon(0.01));
    CHECK(r.mc.expected_first_floored.mean == doctest::Approx(r.expected_first_floored).epsilon(0.01));
    CHECK(r.mc.expected_after.mean == doctest::Approx(r.expected_after).epsilon(0.01));
    CHECK(r.mc.expected_after_floored.mean == doctest::Approx(r.expected_after_floored).epsilon(0.01));
  }
}

TEST_CASE("Monte Carlo is deterministic given the seed") {
  CostConfig cfg{{0.2, 0.3}, 50, 5, 5, {}, 0};
  const auto a = to_json(analyze(cfg, 10'000, 3));
  CHECK(a == to_json(analyze(cfg, 10'000, 3)));
  CHECK(a != to_json(analyze(cfg, 10'000, 4)));
  CHECK_THROWS_AS(monte_carlo_oracle(cfg, 9'999, 3), InvalidInput);
}

TEST_CASE("config json") {
  const auto cfg = cost_config_from_json(nlohmann::json::parse(
      R"({"user_activity_probs":[0.1,0.1,0.1],"K":30,"t0":3,"M":10,"cleansed_history":[{"K":10,"t0":1}]})"));
  CHECK(cfg.effective_nu() == 1);
  CHECK(cfg.user_count() == 4);
  CHECK(cfg.cleansed_history[0].samples == 10);
  CHECK_THROWS_AS(cost_config_from_json(nlohmann::json::parse(
                      R"({"user_activity_probs":[0.1],"K":30,"t0":3,"cleansed_history":[{"K":30,"t0":1}]})")),
                  InvalidInput);
  CHECK_THROWS(cost_config_from_json(nlohmann::json::parse(R"({"K":30})")));
}
