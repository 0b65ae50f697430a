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

// Experiment stages behind the command-line tool. Every stage reads and
// writes plain files under one output directory.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mulic/cost_model.hpp"
#include "mulic/dataset.hpp"
#include "mulic/training.hpp"

namespace mulic::pipeline {

struct ExperimentConfig {
  std::uint64_t master_seed = 0;
  data::CorpusConfig corpus = data::canonical_corpus_config();
  learn::TrainConfig train{0.001, 3, 64, 0, true};
  int finetune_epochs = 3;
  int mia_folds = 5;
  int histogram_bins = 40;
  std::vector<cost::CostConfig> cost_configs;
  std::uint64_t cost_trials = 100000;
  std::filesystem::path out_dir = "out";
  // Reuse an existing corpus instead of out_dir/corpus.siiq.
  std::optional<std::filesystem::path> corpus_path;

  void validate() const;
};

ExperimentConfig canonical_experiment();
/// Keys absent from j keep their canonical values.
ExperimentConfig experiment_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);

/// Keeps only the named cases; unknown names are an InvalidInput.
void restrict_cases(ExperimentConfig& c, const std::vector<std::string>& names);

inline const std::vector<std::string> kModelNames{"Q", "RR", "U"};

std::filesystem::path corpus_file(const ExperimentConfig& c);
std::filesystem::path checkpoint_file(const ExperimentConfig& c, const std::string& model);

void run_generate(const ExperimentConfig& c);
void run_train(const ExperimentConfig& c);
void run_relearn(const ExperimentConfig& c);
void run_unlearn(const ExperimentConfig& c);
void run_eval(const ExperimentConfig& c);
void run_mia(const ExperimentConfig& c);
void run_cost(const ExperimentConfig& c);
void run_report(const ExperimentConfig& c);
void run_all(const ExperimentConfig& c);

/// closed form | Monte Carlo | standard error, one line per quantity.
std::string cost_table(const cost::CostReport& r);

}  // namespace mulic::pipeline
