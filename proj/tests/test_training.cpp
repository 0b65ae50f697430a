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

#include "mulic/error.hpp"
#include "mulic/rng.hpp"
#include "mulic/training.hpp"
#include "test_support.hpp"

using namespace mulic;
using learn::TrainConfig;

namespace {

const data::SiiqDataset& tiny() {
  static const auto d = data::generate_corpus(testing::tiny_corpus_config(60, 20, 20), 11);
  return d;
}

TrainConfig one_epoch(std::uint64_t seed = 1) { return {0.001, 1, 16, seed, true}; }

// Maps whose grid is the constant label value, and a network that returns
// the nearest integer to the grid value: logit_c = 2c*v - c^2.
std::pair<std::vector<data::IQMap>, nn::CnnParams> nearest_value_predictor(int n) {
  std::vector<data::IQMap> maps(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& m = maps[static_cast<std::size_t>(i)];
    m.label = i % nn::kClasses;
    m.grid.assign(data::kMapSize, static_cast<double>(m.label));
  }
  auto p = nn::zero_params();
  p.conv_w.data[4] = 1.0;  // channel 0, centre tap
  for (int k = 0; k < nn::kConvPixels; ++k) p.fc1_w.data[k] = 1.0 / nn::kConvPixels;
  for (int c = 0; c < nn::kClasses; ++c) {
    p.fc2_w.data[static_cast<std::size_t>(c) * nn::kHidden] = 2.0 * c;
    p.fc2_b.data[static_cast<std::size_t>(c)] = -1.0 * c * c;
  }
  p.touch();
  return {maps, p};
}

}  // namespace

TEST_CASE("train config validation") {
  TrainConfig c{};
  CHECK(c.epochs == 50);
  CHECK(c.batch_size == 64);
  CHECK_NOTHROW(c.validate());
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  CHECK_NOTHROW(c.validate(true));
  CHECK_THROWS_AS(learn::train_original(tiny(), c), InvalidInput);
  CHECK_THROWS_AS(learn::relearn_retain(tiny(), c), InvalidInput);
  TrainConfig bad_lr{-1.0, 1, 16, 0, true};
  CHECK_THROWS_AS(bad_lr.validate(), InvalidInput);
  TrainConfig bad_batch{0.001, 1, 0, 0, true};
  CHECK_THROWS_AS(bad_batch.validate(), InvalidInput);
  const auto j = learn::to_json(one_epoch(9));
  const auto back = learn::train_config_from_json(j);
  CHECK(back.seed == 9);
  CHECK(back.batch_size == 16);
}

TEST_CASE("empty partitions are rejected") {
  data::SiiqDataset d = tiny();
  d.forget.clear();
  CHECK_THROWS_AS(learn::train_original(d, one_epoch()), InvalidInput);
  d = tiny();
  d.retain.clear();
  CHECK_THROWS_AS(learn::relearn_retain(d, one_epoch()), InvalidInput);
  CHECK_THROWS_AS(learn::unlearn_finetune(nn::init_params(0), d, one_epoch()), InvalidInput);
  CHECK_THROWS_AS(learn::evaluate(nn::init_params(0), {}, "none"), InvalidInput);
}

TEST_CASE("training is deterministic given the seed") {
  const auto a = learn::train_original(tiny(), one_epoch(3));
  const auto b = learn::train_original(tiny(), one_epoch(3));
  CHECK(a.params == b.params);
  CHECK(a.epoch_loss == b.epoch_loss);
  CHECK_FALSE(a.params == learn::train_original(tiny(), one_epoch(4)).params);
  REQUIRE(a.epoch_accuracy.size() == 1);
  CHECK((a.epoch_accuracy[0] >= 0.0 && a.epoch_accuracy[0] <= 1.0));
}

TEST_CASE("read audit") {
  TrainConfig two = one_epoch();
  two.epochs = 2;
  const auto q = learn::train_original(tiny(), two);
  CHECK(q.audit.retain_reads == 120);
  CHECK(q.audit.forget_reads == 40);
  CHECK(q.audit.test_reads == 0);
  const auto r = learn::relearn_retain(tiny(), two);
  CHECK(r.audit.retain_reads == 120);
  CHECK(r.audit.forget_reads == 0);
  CHECK(r.audit.test_reads == 0);
  const auto u = learn::unlearn_finetune(q.params, tiny(), one_epoch());
  CHECK(u.audit.retain_reads == 60);
  CHECK(u.audit.forget_reads == 0);
}

TEST_CASE("fine-tuning") {
  const auto q = learn::train_original(tiny(), one_epoch()).params;
  SUBCASE("zero epochs returns Q unchanged") {
    TrainConfig zero = one_epoch();
    zero.epochs = 0;
    const auto u = learn::unlearn_finetune(q, tiny(), zero);
    CHECK(u.params == q);
    CHECK(u.audit.retain_reads == 0);
  }
  SUBCASE("continues from Q, not from a fresh init") {
    const auto u = learn::unlearn_finetune(q, tiny(), one_epoch()).params;
    const auto r = learn::relearn_retain(tiny(), one_epoch()).params;
    CHECK_FALSE(u == q);
    double du = 0, dr = 0;
    for (std::size_t i = 0; i < q.fc1_w.size(); ++i) {
      du += std::abs(u.fc1_w.data[i] - q.fc1_w.data[i]);
      dr += std::abs(r.fc1_w.data[i] - q.fc1_w.data[i]);
    }
    CHECK(du < dr);
  }
}

TEST_CASE("evaluate") {
  SUBCASE("perfect predictor") {
    auto [maps, p] = nearest_value_predictor(50);
    const auto r = learn::evaluate(p, maps, "perfect");
    CHECK(r.accuracy == 1.0);
    CHECK(r.subset_name == "perfect");
    for (int t = 0; t < nn::kClasses; ++t) {
      for (int c = 0; c < nn::kClasses; ++c) CHECK(r.confusion[t][c] == (t == c ? 10u : 0u));
    }
  }
  SUBCASE("predictions unrelated to labels score chance") {
    CounterRng rng(21);
    std::vector<data::IQMap> maps(625);
    for (auto& m : maps) {
      m.grid.resize(data::kMapSize);
      for (auto& v : m.grid) v = rng.uniform();
      m.label = static_cast<int>(rng.below(nn::kClasses));
    }
    const auto r = learn::evaluate(nn::init_params(22), maps, "chance");
    CHECK(std::abs(r.accuracy - 0.2) <= 0.05);
    std::uint64_t total = 0;
    for (const auto& row : r.confusion) {
      for (auto v : row) total += v;
    }
    CHECK(total == 625);
  }
  SUBCASE("losses and predictions match a direct forward pass") {
    const auto& maps = tiny().forget;
    const auto p = nn::init_params(23);
    const auto r = learn::evaluate(p, maps, "forget");
    std::vector<std::size_t> idx(maps.size());
    std::vector<int> labels;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      idx[i] = i;
      labels.push_back(maps[i].label);
    }
    const auto f = nn::forward(p, learn::make_batch(maps, idx), false);
    const auto ce = nn::cross_entropy(f.probs, labels);
    REQUIRE(r.per_sample_losses.size() == maps.size());
    for (std::size_t i = 0; i < maps.size(); ++i) {
      CHECK(r.per_sample_losses[i] == doctest::Approx(ce.per_sample[i]).epsilon(1e-12));
      const double* row = f.probs.data.data() + i * nn::kClasses;
      CHECK(row[r.predictions[i]] == *std::max_element(row, row + nn::kClasses));
    }
    const auto csv = learn::confusion_csv(r);
    CHECK(csv.rfind("true\\pred,0,1,2,3,4\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  }
}

TEST_CASE("ensemble") {
  SUBCASE("selective unlearning leaves the other submodels bit-exact") {
    const auto e = learn::train_ensemble(tiny(), 3, 1, one_epoch());
    REQUIRE(e.submodels.size() == 3);
    CHECK(e.subdataset_ids[1] == "shard1+forget");
    const auto u = learn::ensemble_unlearn(e, 1, tiny(), one_epoch());
    CHECK(u.submodels[0] == e.submodels[0]);
    CHECK(u.submodels[2] == e.submodels[2]);
    CHECK_FALSE(u.submodels[1] == e.submodels[1]);
    CHECK(u.subdataset_ids[1] == "shard1");
    const auto p = u.predict_proba(tiny().tests.at("case4"));
    CHECK(p.shape == std::vector<std::size_t>{20, 5});
    CHECK_THROWS_AS(learn::ensemble_unlearn(e, 3, tiny(), one_epoch()), InvalidInput);
  }
  SUBCASE("one submodel degenerates to the single-model pipeline") {
    const auto e = learn::train_ensemble(tiny(), 1, 0, one_epoch());
    const auto q = learn::train_original(tiny(), one_epoch());
    CHECK(e.submodels[0] == q.params);
    const auto u = learn::ensemble_unlearn(e, 0, tiny(), one_epoch());
    CHECK(u.submodels[0] == learn::unlearn_finetune(q.params, tiny(), one_epoch()).params);
  }
  SUBCASE("shards partition the retain set") {
    std::size_t total = 0;
    for (int m = 0; m < 7; ++m) total += learn::retain_shard(tiny(), 7, m).size();
    CHECK(total == tiny().retain.size());
    CHECK_THROWS_AS(learn::retain_shard(tiny(), 3, 3), InvalidInput);
  }
}
