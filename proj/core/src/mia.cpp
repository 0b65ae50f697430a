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

#include "mulic/mia.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mulic/error.hpp"
#include "mulic/rng.hpp"
#include "mulic/training.hpp"

namespace mulic::mia {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(sigmoid(z)) without overflow.
double log_sigmoid(double z) { return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }

double mean_log_likelihood(std::span<const LossSample> s, double w, double b) {
  double ll = 0.0;
  for (const auto& x : s) {
    const double z = w * x.loss + b;
    ll += x.member == 1 ? log_sigmoid(z) : log_sigmoid(-z);
  }
  return ll / static_cast<double>(s.size());
}

void require_both_labels(std::span<const LossSample> samples) {
  bool has0 = false, has1 = false;
  for (const auto& s : samples) {
    if (!std::isfinite(s.loss)) throw InvalidInput("non-finite loss in attack input");
    (s.member == 1 ? has1 : has0) = true;
  }
  if (!has0 || !has1) throw DegenerateFit("logistic fit needs both member labels present");
}

}  // namespace

double LogisticModel::probability(double loss) const { return sigmoid(weight * loss + bias); }

std::vector<LossSample> collect_losses(std::span<const double> test_losses,
                                       std::span<const double> forget_losses) {
  if (test_losses.empty() || forget_losses.empty()) {
    throw InvalidInput("membership inference needs non-empty test and forget sets");
  }
  std::vector<LossSample> out;
  out.reserve(test_losses.size() + forget_losses.size());
  for (double l : test_losses) out.push_back({l, 0});
  for (double l : forget_losses) out.push_back({l, 1});
  return out;
}

std::vector<LossSample> collect_losses(const nn::CnnParams& params,
                                       std::span<const data::IQMap> test_set,
                                       std::span<const data::IQMap> forget_set) {
  if (test_set.empty() || forget_set.empty()) {
    throw InvalidInput("membership inference needs non-empty test and forget sets");
  }
  const auto test = learn::evaluate(params, test_set, "test");
  const auto forget = learn::evaluate(params, forget_set, "forget");
  return collect_losses(test.per_sample_losses, forget.per_sample_losses);
}

LogisticModel logistic_fit(std::span<const LossSample> samples, LogisticOptions opts) {
  require_both_labels(samples);
  const double n = static_cast<double>(samples.size());
  // Fit on standardized losses, then map back. Raw losses are far from
  // centred and plain gradient ascent crawls on them.
  double mu = 0.0, var = 0.0;
  for (const auto& s : samples) mu += s.loss;
  mu /= n;
  for (const auto& s : samples) var += (s.loss - mu) * (s.loss - mu);
  const double sd = var > 0.0 ? std::sqrt(var / n) : 1.0;
  std::vector<LossSample> z(samples.begin(), samples.end());
  for (auto& s : z) s.loss = (s.loss - mu) / sd;
  samples = z;
  double w = 0.0, b = 0.0;
  double ll = mean_log_likelihood(samples, w, b);
  double step = opts.learning_rate;
  for (int it = 0; it < opts.iterations; ++it) {
    double gw = 0.0, gb = 0.0;
    for (const auto& s : samples) {
      const double r = static_cast<double>(s.member) - sigmoid(w * s.loss + b);
      gw += r * s.loss;
      gb += r;
    }
    gw /= n;
    gb /= n;
    if (gw == 0.0 && gb == 0.0) break;
    for (int halvings = 0; halvings < 60; ++halvings) {
      const double nw = w + step * gw;
      const double nb = b + step * gb;
      const double nll = mean_log_likelihood(samples, nw, nb);
      if (nll >= ll) {
        w = nw;
        b = nb;
        ll = nll;
        break;
      }
      step *= 0.5;
    }
  }
  return {w / sd, b - w * mu / sd};
}

double accuracy(const LogisticModel& model, std::span<const LossSample> samples) {
  if (samples.empty()) throw InvalidInput("accuracy of an empty sample set");
  std::size_t correct = 0;
  for (const auto& s : samples) correct += model.predict(s.loss) == s.member ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

std::vector<int> stratified_folds(std::span<const LossSample> samples, int k, std::uint64_t seed) {
  if (k < 2) throw InvalidInput("k-fold cross-validation needs k >= 2");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < samples.size(); ++i) by_class[samples[i].member == 1 ? 1 : 0].push_back(i);
  for (const auto& c : by_class) {
    if (c.size() < static_cast<std::size_t>(k)) {
      throw InvalidInput("each class needs at least k = " + std::to_string(k) +
                         " samples for stratified folds");
    }
  }
  std::vector<int> fold(samples.size(), -1);
  CounterRng rng(seed);
  for (int c = 0; c < 2; ++c) {
    auto idx = by_class[c];
    CounterRng class_rng = rng.substream("mia.folds", static_cast<std::uint64_t>(c));
    class_rng.shuffle(idx);
    for (std::size_t p = 0; p < idx.size(); ++p) fold[idx[p]] = static_cast<int>(p % static_cast<std::size_t>(k));
  }
  return fold;
}

MiaReport mia_score(std::span<const LossSample> samples, int k, std::uint64_t seed,
                    LogisticOptions opts) {
  require_both_labels(samples);
  const auto fold = stratified_folds(samples, k, seed);
  MiaReport report;
  std::vector<LossSample> train, held_out;
  for (int f = 0; f < k; ++f) {
    train.clear();
    held_out.clear();
    for (std::size_t i = 0; i < samples.size(); ++i) (fold[i] == f ? held_out : train).push_back(samples[i]);
    const auto model = logistic_fit(train, opts);
    report.fold_scores.push_back(accuracy(model, held_out));
  }
  double sum = 0.0;
  for (double s : report.fold_scores) sum += s;
  report.score = sum / static_cast<double>(k);
  return report;
}

MiaReport mia_score(const nn::CnnParams& params, std::span<const data::IQMap> test_set,
                    std::span<const data::IQMap> forget_set, int k, std::uint64_t seed,
                    LogisticOptions opts) {
  const auto samples = collect_losses(params, test_set, forget_set);
  return mia_score(samples, k, seed, opts);
}

LossHistogram loss_histogram(std::span<const LossSample> samples, int bins) {
  if (bins < 1) throw InvalidInput("histogram needs at least one bin");
  if (samples.empty()) throw InvalidInput("histogram of an empty sample set");
  double hi = 0.0;
  for (const auto& s : samples) hi = std::max(hi, s.loss);
  if (hi <= 0.0) hi = 1.0;
  LossHistogram h;
  for (int b = 0; b <= bins; ++b) h.edges.push_back(hi * static_cast<double>(b) / bins);
  h.test_counts.assign(static_cast<std::size_t>(bins), 0);
  h.forget_counts.assign(static_cast<std::size_t>(bins), 0);
  for (const auto& s : samples) {
    auto b = static_cast<int>(std::floor(std::max(s.loss, 0.0) / hi * bins));
    b = std::clamp(b, 0, bins - 1);
    (s.member == 1 ? h.forget_counts : h.test_counts)[static_cast<std::size_t>(b)]++;
  }
  return h;
}

nlohmann::json to_json(const MiaReport& r) {
  return {{"model", r.model_name}, {"case", r.case_name}, {"score", r.score}, {"fold_scores", r.fold_scores}};
}

MiaReport mia_report_from_json(const nlohmann::json& j) {
  MiaReport r;
  r.model_name = j.at("model").get<std::string>();
  r.case_name = j.at("case").get<std::string>();
  r.score = j.at("score").get<double>();
  r.fold_scores = j.at("fold_scores").get<std::vector<double>>();
  return r;
}

std::string to_csv(const LossHistogram& h) {
  std::ostringstream os;
  os.precision(17);
  os << "bin_low,bin_high,test_count,forget_count\n";
  for (std::size_t b = 0; b < h.test_counts.size(); ++b) {
    os << h.edges[b] << ',' << h.edges[b + 1] << ',' << h.test_counts[b] << ',' << h.forget_counts[b] << '\n';
  }
  return os.str();
}

}  // namespace mulic::mia
