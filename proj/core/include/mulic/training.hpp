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

// The three models: original Q (retain + forget), relearned-retain Q°
// (fresh init, retain only) and unlearned Q' (Q fine-tuned on retain).

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mulic/cnn.hpp"
#include "mulic/dataset.hpp"

namespace mulic::learn {

struct TrainConfig {
  double lr = 0.001;
  int epochs = 50;
  int batch_size = 64;
  std::uint64_t seed = 0;
  bool shuffle = true;

  /// allow_zero_epochs is only for fine-tuning.
  void validate(bool allow_zero_epochs = false) const;
};

// Counts every map handed to the optimizer, by partition.
struct ReadAudit {
  std::uint64_t retain_reads = 0;
  std::uint64_t forget_reads = 0;
  std::uint64_t test_reads = 0;
};

struct TrainResult {
  nn::CnnParams params;
  std::vector<double> epoch_accuracy;  // running accuracy over each epoch's batches
  std::vector<double> epoch_loss;
  ReadAudit audit;
};

struct EvalReport {
  std::string subset_name;
  double accuracy = 0.0;
  std::array<std::array<std::uint64_t, nn::kClasses>, nn::kClasses> confusion{};  // [true][predicted]
  std::vector<int> predictions;
  std::vector<double> per_sample_losses;
};

/// Runs Adam from a fresh optimizer state over maps; the order substream
/// is derived from cfg.seed and stream.
TrainResult train_on(nn::CnnParams init, std::span<const data::IQMap> maps, const TrainConfig& cfg,
                     const std::string& stream);

TrainResult train_original(const data::SiiqDataset& d, const TrainConfig& cfg);
TrainResult relearn_retain(const data::SiiqDataset& d, const TrainConfig& cfg);
/// cfg.epochs may be 0, in which case Q is returned unchanged.
TrainResult unlearn_finetune(const nn::CnnParams& q, const data::SiiqDataset& d, const TrainConfig& cfg);

EvalReport evaluate(const nn::CnnParams& params, std::span<const data::IQMap> maps, const std::string& name);

/// Stacks maps[first, first + count) into a [count,1,28,28] tensor.
nn::Tensor make_batch(std::span<const data::IQMap> maps, std::span<const std::size_t> indices);

struct EnsembleModel {
  std::vector<nn::CnnParams> submodels;
  std::vector<std::string> subdataset_ids;

  /// Mean of the submodels' class probabilities, [N, 5].
  nn::Tensor predict_proba(std::span<const data::IQMap> maps) const;
  double accuracy(std::span<const data::IQMap> maps) const;
};

/// Contiguous retain shard m of M (class-balanced because the corpus
/// cycles through the classes).
std::vector<data::IQMap> retain_shard(const data::SiiqDataset& d, int shard_count, int shard);

/// Submodel m trains on retain shard m; the interfered submodel also sees
/// the whole forget set.
EnsembleModel train_ensemble(const data::SiiqDataset& d, int shard_count, int interfered, const TrainConfig& cfg);

/// Fine-tunes submodel S on its retain shard; the others are copied as is.
EnsembleModel ensemble_unlearn(const EnsembleModel& e, int interfered, const data::SiiqDataset& d,
                               const TrainConfig& cfg);

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});
nlohmann::json to_json(const EvalReport& r);
/// Header row "true\\pred,0,1,2,3,4", then one row per true class.
std::string confusion_csv(const EvalReport& r);
nlohmann::json to_json(const TrainResult& r);

}  // namespace mulic::learn
