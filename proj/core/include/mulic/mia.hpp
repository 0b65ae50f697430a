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

// Loss-based membership inference: a one-feature logistic regression
// separates forget-set members from held-out test samples.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mulic/cnn.hpp"
#include "mulic/dataset.hpp"

namespace mulic::mia {

struct LossSample {
  double loss = 0.0;
  int member = 0;  // 1 = forget set, 0 = test set
};

struct LogisticModel {
  double weight = 0.0;
  double bias = 0.0;

  double probability(double loss) const;
  int predict(double loss) const { return probability(loss) >= 0.5 ? 1 : 0; }
};

struct LogisticOptions {
  int iterations = 1000;
  double learning_rate = 0.1;
};

struct MiaReport {
  double score = 0.0;
  std::vector<double> fold_scores;
  std::string model_name;
  std::string case_name;
};

/// Test losses labeled 0 followed by forget losses labeled 1.
std::vector<LossSample> collect_losses(std::span<const double> test_losses,
                                       std::span<const double> forget_losses);
std::vector<LossSample> collect_losses(const nn::CnnParams& params,
                                       std::span<const data::IQMap> test_set,
                                       std::span<const data::IQMap> forget_set);

/// Maximizes the mean log-likelihood by full-batch gradient ascent from
/// zero. The step is halved whenever it would lower the likelihood.
LogisticModel logistic_fit(std::span<const LossSample> samples, LogisticOptions opts = {});

double accuracy(const LogisticModel& model, std::span<const LossSample> samples);

/// Fold index per sample; each class is shuffled and dealt round-robin,
/// so per-class fold sizes differ by at most one.
std::vector<int> stratified_folds(std::span<const LossSample> samples, int k, std::uint64_t seed);

MiaReport mia_score(std::span<const LossSample> samples, int k, std::uint64_t seed,
                    LogisticOptions opts = {});
MiaReport mia_score(const nn::CnnParams& params, std::span<const data::IQMap> test_set,
                    std::span<const data::IQMap> forget_set, int k, std::uint64_t seed,
                    LogisticOptions opts = {});

struct LossHistogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<std::uint64_t> test_counts;
  std::vector<std::uint64_t> forget_counts;
};

/// Shared-edge histogram of test and forget losses over [0, max loss].
LossHistogram loss_histogram(std::span<const LossSample> samples, int bins);

nlohmann::json to_json(const MiaReport& r);
MiaReport mia_report_from_json(const nlohmann::json& j);
std::string to_csv(const LossHistogram& h);

}  // namespace mulic::mia
