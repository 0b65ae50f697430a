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

#include "mulic/training.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "mulic/error.hpp"
#include "mulic/rng.hpp"

namespace mulic::learn {

namespace {

constexpr std::size_t kEvalBatch = 256;

void count_read(ReadAudit& a, data::Membership m) {
  switch (m) {
    case data::Membership::kRetain: ++a.retain_reads; break;
    case data::Membership::kForget: ++a.forget_reads; break;
    case data::Membership::kTest: ++a.test_reads; break;
  }
}

std::vector<int> labels_of(std::span<const data::IQMap> maps, std::span<const std::size_t> idx) {
  std::vector<int> y;
  y.reserve(idx.size());
  for (auto i : idx) y.push_back(maps[i].label);
  return y;
}

int argmax_row(const double* p) {
  return static_cast<int>(std::max_element(p, p + nn::kClasses) - p);
}

}  // namespace

void TrainConfig::validate(bool allow_zero_epochs) const {
  if (!(lr > 0.0)) throw InvalidInput("lr must be positive");
  if (epochs < (allow_zero_epochs ? 0 : 1)) {
    throw InvalidInput(allow_zero_epochs ? "epochs must be >= 0" : "epochs must be >= 1");
  }
  if (batch_size < 1) throw InvalidInput("batch_size must be >= 1");
}

nn::Tensor make_batch(std::span<const data::IQMap> maps, std::span<const std::size_t> indices) {
  nn::Tensor t({indices.size(), 1, nn::kInputSide, nn::kInputSide});
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto& g = maps[indices[k]].grid;
    if (g.size() != static_cast<std::size_t>(nn::kInputSize)) throw ShapeError("map grid has the wrong size");
    std::copy(g.begin(), g.end(), t.data.begin() + static_cast<std::ptrdiff_t>(k * nn::kInputSize));
  }
  return t;
}

TrainResult train_on(nn::CnnParams init, std::span<const data::IQMap> maps, const TrainConfig& cfg,
                     const std::string& stream) {
  cfg.validate(true);
  if (maps.empty()) throw InvalidInput("cannot train on an empty set");
  TrainResult r;
  r.params = std::move(init);
  auto adam = nn::AdamState::zeros();
  CounterRng order = CounterRng(cfg.seed).substream("order." + stream);
  std::vector<std::size_t> idx(maps.size());
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  for (int e = 0; e < cfg.epochs; ++e) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (cfg.shuffle) order.shuffle(idx);
    std::size_t correct = 0;
    double loss_sum = 0.0;
    for (std::size_t s = 0; s < idx.size(); s += bs) {
      const std::span<const std::size_t> batch_idx(idx.data() + s, std::min(bs, idx.size() - s));
      for (auto i : batch_idx) count_read(r.audit, maps[i].membership);
      const auto x = make_batch(maps, batch_idx);
      const auto y = labels_of(maps, batch_idx);
      auto fw = nn::forward(r.params, x);
      const auto loss = nn::cross_entropy(fw.probs, y);
      loss_sum += loss.mean_loss * static_cast<double>(batch_idx.size());
      for (std::size_t b = 0; b < batch_idx.size(); ++b) {
        correct += argmax_row(fw.probs.data.data() + b * nn::kClasses) == y[b] ? 1 : 0;
      }
      const auto grads = nn::backward(r.params, fw.cache, y);
      nn::adam_step(r.params, grads, adam, cfg.lr);
    }
    r.epoch_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(idx.size()));
    r.epoch_loss.push_back(loss_sum / static_cast<double>(idx.size()));
  }
  return r;
}

TrainResult train_original(const data::SiiqDataset& d, const TrainConfig& cfg) {
  cfg.validate();
  if (d.retain.empty() || d.forget.empty()) throw InvalidInput("original model needs non-empty retain and forget sets");
  const auto all = d.union_set();
  return train_on(nn::init_params(CounterRng(cfg.seed).substream("init.original").next_u64()), all, cfg, "original");
}

TrainResult relearn_retain(const data::SiiqDataset& d, const TrainConfig& cfg) {
  cfg.validate();
  if (d.retain.empty()) throw InvalidInput("relearned model needs a non-empty retain set");
  return train_on(nn::init_params(CounterRng(cfg.seed).substream("init.relearn").next_u64()), d.retain, cfg,
                  "relearn");
}

TrainResult unlearn_finetune(const nn::CnnParams& q, const data::SiiqDataset& d, const TrainConfig& cfg) {
  cfg.validate(true);
  if (d.retain.empty()) throw InvalidInput("fine-tuning needs a non-empty retain set");
  q.validate();
  return train_on(q, d.retain, cfg, "unlearn");
}

EvalReport evaluate(const nn::CnnParams& params, std::span<const data::IQMap> maps, const std::string& name) {
  if (maps.empty()) throw InvalidInput("cannot evaluate on an empty set '" + name + "'");
  EvalReport r;
  r.subset_name = name;
  std::vector<std::size_t> idx;
  std::size_t correct = 0;
  for (std::size_t s = 0; s < maps.size(); s += kEvalBatch) {
    idx.resize(std::min(kEvalBatch, maps.size() - s));
    std::iota(idx.begin(), idx.end(), s);
    const auto fw = nn::forward(params, make_batch(maps, idx), false);
    const auto y = labels_of(maps, idx);
    const auto loss = nn::cross_entropy(fw.probs, y);
    for (std::size_t b = 0; b < idx.size(); ++b) {
      const int pred = argmax_row(fw.probs.data.data() + b * nn::kClasses);
      r.predictions.push_back(pred);
      r.per_sample_losses.push_back(loss.per_sample[b]);
      r.confusion[static_cast<std::size_t>(y[b])][static_cast<std::size_t>(pred)]++;
      correct += pred == y[b] ? 1 : 0;
    }
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(maps.size());
  return r;
}

nn::Tensor EnsembleModel::predict_proba(std::span<const data::IQMap> maps) const {
  if (submodels.empty()) throw InvalidInput("ensemble has no submodels");
  nn::Tensor mean({maps.size(), nn::kClasses});
  std::vector<std::size_t> idx(maps.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto x = make_batch(maps, idx);
  for (const auto& p : submodels) {
    const auto fw = nn::forward(p, x, false);
    for (std::size_t i = 0; i < mean.size(); ++i) mean.data[i] += fw.probs.data[i];
  }
  for (auto& v : mean.data) v /= static_cast<double>(submodels.size());
  return mean;
}

double EnsembleModel::accuracy(std::span<const data::IQMap> maps) const {
  if (maps.empty()) throw InvalidInput("cannot evaluate an ensemble on an empty set");
  const auto p = predict_proba(maps);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < maps.size(); ++i) correct += argmax_row(p.data.data() + i * nn::kClasses) == maps[i].label;
  return static_cast<double>(correct) / static_cast<double>(maps.size());
}

std::vector<data::IQMap> retain_shard(const data::SiiqDataset& d, int shard_count, int shard) {
  if (shard_count < 1) throw InvalidInput("ensemble needs at least one submodel");
  if (shard < 0 || shard >= shard_count) throw InvalidInput("shard index out of range");
  const std::size_t n = d.retain.size();
  const std::size_t lo = n * static_cast<std::size_t>(shard) / static_cast<std::size_t>(shard_count);
  const std::size_t hi = n * static_cast<std::size_t>(shard + 1) / static_cast<std::size_t>(shard_count);
  if (lo == hi) throw InvalidInput("retain shard is empty");
  return {d.retain.begin() + static_cast<std::ptrdiff_t>(lo), d.retain.begin() + static_cast<std::ptrdiff_t>(hi)};
}

EnsembleModel train_ensemble(const data::SiiqDataset& d, int shard_count, int interfered, const TrainConfig& cfg) {
  cfg.validate();
  if (interfered < 0 || interfered >= shard_count) throw InvalidInput("interfered submodel index out of range");
  EnsembleModel e;
  for (int m = 0; m < shard_count; ++m) {
    auto maps = retain_shard(d, shard_count, m);
    if (m == interfered) maps.insert(maps.end(), d.forget.begin(), d.forget.end());
    // One submodel is just the original model, streams included.
    const std::string tag = shard_count == 1 ? "original" : "ensemble." + std::to_string(m);
    auto init = nn::init_params(CounterRng(cfg.seed).substream("init." + tag).next_u64());
    e.submodels.push_back(train_on(std::move(init), maps, cfg, tag).params);
    e.subdataset_ids.push_back("shard" + std::to_string(m) + (m == interfered ? "+forget" : ""));
  }
  return e;
}

EnsembleModel ensemble_unlearn(const EnsembleModel& e, int interfered, const data::SiiqDataset& d,
                               const TrainConfig& cfg) {
  const int m = static_cast<int>(e.submodels.size());
  if (interfered < 0 || interfered >= m) throw InvalidInput("interfered submodel index out of range");
  cfg.validate(true);
  EnsembleModel out = e;
  const auto shard = retain_shard(d, m, interfered);
  out.submodels[static_cast<std::size_t>(interfered)] =
      train_on(e.submodels[static_cast<std::size_t>(interfered)], shard, cfg,
               m == 1 ? "unlearn" : "ensemble_unlearn." + std::to_string(interfered))
          .params;
  out.subdataset_ids[static_cast<std::size_t>(interfered)] = "shard" + std::to_string(interfered);
  return out;
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"lr", c.lr}, {"epochs", c.epochs}, {"batch_size", c.batch_size}, {"seed", c.seed}, {"shuffle", c.shuffle}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base) {
  if (!j.is_object()) throw InvalidInput("train config must be a JSON object");
  try {
    base.lr = j.value("lr", base.lr);
    base.epochs = j.value("epochs", base.epochs);
    base.batch_size = j.value("batch_size", base.batch_size);
    base.seed = j.value("seed", base.seed);
    base.shuffle = j.value("shuffle", base.shuffle);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("train config: ") + e.what());
  }
  base.validate();
  return base;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json conf = nlohmann::json::array();
  for (const auto& row : r.confusion) conf.push_back(row);
  return {{"subset", r.subset_name}, {"accuracy", r.accuracy}, {"confusion", conf}, {"count", r.predictions.size()}};
}

std::string confusion_csv(const EvalReport& r) {
  std::ostringstream os;
  os << "true\\pred";
  for (int c = 0; c < nn::kClasses; ++c) os << ',' << c;
  os << '\n';
  for (int t = 0; t < nn::kClasses; ++t) {
    os << t;
    for (int p = 0; p < nn::kClasses; ++p) os << ',' << r.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
    os << '\n';
  }
  return os.str();
}

nlohmann::json to_json(const TrainResult& r) {
  return {{"epoch_accuracy", r.epoch_accuracy},
          {"epoch_loss", r.epoch_loss},
          {"reads", {{"retain", r.audit.retain_reads}, {"forget", r.audit.forget_reads}, {"test", r.audit.test_reads}}}};
}

}  // namespace mulic::learn
