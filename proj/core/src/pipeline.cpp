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

#include "mulic/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "binio.hpp"
#include "mulic/error.hpp"
#include "mulic/mia.hpp"
#include "mulic/rng.hpp"

namespace mulic::pipeline {

namespace fs = std::filesystem;

namespace {

void write_json(const fs::path& p, const nlohmann::json& j) { binio::write_text(p, j.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& p) {
  if (!fs::exists(p)) throw MissingInput("missing input " + p.string());
  std::ifstream in(p);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(p.string() + ": " + e.what());
  }
}

data::SiiqDataset load_corpus(const ExperimentConfig& c) {
  const auto p = corpus_file(c);
  if (!fs::exists(p)) throw MissingInput("missing corpus " + p.string() + " (run generate first)");
  return data::load(p);
}

nn::CnnParams load_model(const ExperimentConfig& c, const std::string& name) {
  const auto p = checkpoint_file(c, name);
  if (!fs::exists(p)) throw MissingInput("missing checkpoint " + p.string());
  return nn::load_checkpoint(p).params;
}

learn::TrainConfig train_cfg(const ExperimentConfig& c) {
  auto t = c.train;
  t.seed = c.master_seed;
  return t;
}

void save_model(const ExperimentConfig& c, const std::string& name, const learn::TrainResult& r) {
  nn::save_checkpoint(r.params, nullptr, checkpoint_file(c, name));
  write_json(c.out_dir / "models" / (name + ".train.json"), learn::to_json(r));
}

std::uint64_t derived_seed(const ExperimentConfig& c, const char* label, std::uint64_t index = 0) {
  return CounterRng(c.master_seed).substream(label, index).next_u64();
}

std::vector<cost::CostConfig> canonical_cost_configs() {
  cost::CostConfig a;
  a.user_activity_probs = {0.2, 0.3};
  a.total_samples = 50;
  a.frames_per_model = 5;
  a.model_count = 5;
  cost::CostConfig b;
  b.user_activity_probs = {0.1, 0.1, 0.1};
  b.total_samples = 30;
  b.frames_per_model = 3;
  b.model_count = 10;
  b.cleansed_history = {{10, 1}};
  return {a, b};
}

nlohmann::json cost_to_json(const cost::CostConfig& c) {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& s : c.cleansed_history) hist.push_back({{"K", s.samples}, {"t0", s.frames}});
  return {{"user_activity_probs", c.user_activity_probs},
          {"K", c.total_samples},
          {"t0", c.frames_per_model},
          {"M", c.model_count},
          {"cleansed_history", hist},
          {"nu", c.nu}};
}

std::string fmt(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
  corpus.validate();
  train.validate();
  if (finetune_epochs < 0) throw InvalidInput("finetune_epochs must be >= 0");
  if (mia_folds < 2) throw InvalidInput("mia_folds must be >= 2");
  if (histogram_bins < 1) throw InvalidInput("histogram_bins must be >= 1");
  if (cost_trials < 10000) throw InvalidInput("cost_trials must be >= 10000");
  for (const auto& k : cost_configs) k.validate();
  if (out_dir.empty()) throw InvalidInput("output directory must not be empty");
}

ExperimentConfig canonical_experiment() {
  ExperimentConfig c;
  c.cost_configs = canonical_cost_configs();
  return c;
}

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidInput("experiment config must be a JSON object");
  ExperimentConfig c = canonical_experiment();
  try {
    c.master_seed = j.value("master_seed", c.master_seed);
    if (j.contains("corpus")) c.corpus = data::corpus_config_from_json(j.at("corpus"));
    if (j.contains("train")) c.train = learn::train_config_from_json(j.at("train"), c.train);
    c.finetune_epochs = j.value("finetune_epochs", c.finetune_epochs);
    c.mia_folds = j.value("mia_folds", c.mia_folds);
    c.histogram_bins = j.value("histogram_bins", c.histogram_bins);
    if (j.contains("cost_configs")) {
      c.cost_configs.clear();
      for (const auto& k : j.at("cost_configs")) c.cost_configs.push_back(cost::cost_config_from_json(k));
    }
    c.cost_trials = j.value("cost_trials", c.cost_trials);
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("corpus_path")) c.corpus_path = fs::path(j.at("corpus_path").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json costs = nlohmann::json::array();
  for (const auto& k : c.cost_configs) costs.push_back(cost_to_json(k));
  nlohmann::json j{{"master_seed", c.master_seed},
                   {"corpus", data::to_json(c.corpus)},
                   {"train", learn::to_json(c.train)},
                   {"finetune_epochs", c.finetune_epochs},
                   {"mia_folds", c.mia_folds},
                   {"histogram_bins", c.histogram_bins},
                   {"cost_configs", costs},
                   {"cost_trials", c.cost_trials}};
  if (c.corpus_path) j["corpus_path"] = c.corpus_path->string();
  return j;
}

void restrict_cases(ExperimentConfig& c, const std::vector<std::string>& names) {
  std::vector<data::CaseConfig> kept;
  for (const auto& n : names) {
    auto it = std::find_if(c.corpus.cases.begin(), c.corpus.cases.end(), [&](const auto& k) { return k.name == n; });
    if (it == c.corpus.cases.end()) throw InvalidInput("unknown case '" + n + "'");
    kept.push_back(*it);
  }
  c.corpus.cases = kept;
}

fs::path corpus_file(const ExperimentConfig& c) { return c.corpus_path ? *c.corpus_path : c.out_dir / "corpus.siiq"; }

fs::path checkpoint_file(const ExperimentConfig& c, const std::string& model) {
  return c.out_dir / "models" / (model + ".mulc");
}

void run_generate(const ExperimentConfig& c) {
  c.validate();
  data::save(data::generate_corpus(c.corpus, c.master_seed), c.out_dir / "corpus.siiq");
  write_json(c.out_dir / "config.json", to_json(c));
}

void run_train(const ExperimentConfig& c) {
  c.validate();
  save_model(c, "Q", learn::train_original(load_corpus(c), train_cfg(c)));
}

void run_relearn(const ExperimentConfig& c) {
  c.validate();
  save_model(c, "RR", learn::relearn_retain(load_corpus(c), train_cfg(c)));
}

void run_unlearn(const ExperimentConfig& c) {
  c.validate();
  const auto d = load_corpus(c);
  auto t = train_cfg(c);
  t.epochs = c.finetune_epochs;
  save_model(c, "U", learn::unlearn_finetune(load_model(c, "Q"), d, t));
}

void run_eval(const ExperimentConfig& c) {
  c.validate();
  const auto d = load_corpus(c);
  const auto train_set = d.union_set();
  for (const auto& name : kModelNames) {
    const auto params = load_model(c, name);
    std::vector<std::pair<std::string, learn::EvalReport>> reports;
    reports.emplace_back("train", learn::evaluate(params, train_set, "train"));
    reports.emplace_back("retain", learn::evaluate(params, d.retain, "retain"));
    reports.emplace_back("forget", learn::evaluate(params, d.forget, "forget"));
    for (const auto& k : c.corpus.cases) {
      auto it = d.tests.find(k.name);
      if (it == d.tests.end()) throw MissingInput("corpus has no test set '" + k.name + "'");
      reports.emplace_back(k.name, learn::evaluate(params, it->second, k.name));
    }
    nlohmann::json j{{"model", name}, {"subsets", nlohmann::json::object()}};
    for (const auto& [subset, r] : reports) {
      j["subsets"][subset] = learn::to_json(r);
      binio::write_text(c.out_dir / "eval" / (name + "_" + subset + "_confusion.csv"), learn::confusion_csv(r));
    }
    write_json(c.out_dir / "eval" / (name + ".json"), j);
  }
}

void run_mia(const ExperimentConfig& c) {
  c.validate();
  const auto d = load_corpus(c);
  const auto seed = derived_seed(c, "mia.folds");
  for (const auto& name : kModelNames) {
    const auto params = load_model(c, name);
    const auto forget = learn::evaluate(params, d.forget, "forget");
    for (const auto& k : c.corpus.cases) {
      auto it = d.tests.find(k.name);
      if (it == d.tests.end()) throw MissingInput("corpus has no test set '" + k.name + "'");
      const auto test = learn::evaluate(params, it->second, k.name);
      const auto samples = mia::collect_losses(test.per_sample_losses, forget.per_sample_losses);
      auto report = mia::mia_score(samples, c.mia_folds, seed);
      report.model_name = name;
      report.case_name = k.name;
      auto j = mia::to_json(report);
      j["test_losses"] = test.per_sample_losses;
      j["forget_losses"] = forget.per_sample_losses;
      write_json(c.out_dir / "mia" / (name + "_" + k.name + ".json"), j);
    }
  }
}

void run_cost(const ExperimentConfig& c) {
  c.validate();
  for (std::size_t i = 0; i < c.cost_configs.size(); ++i) {
    const auto r = cost::analyze(c.cost_configs[i], c.cost_trials, derived_seed(c, "cost", i));
    auto j = cost::to_json(r);
    j["config"] = cost_to_json(c.cost_configs[i]);
    const auto stem = "cost_" + std::to_string(i);
    write_json(c.out_dir / "cost" / (stem + ".json"), j);
    binio::write_text(c.out_dir / "cost" / (stem + ".txt"), cost_table(r));
  }
}

void run_report(const ExperimentConfig& c) {
  c.validate();
  std::map<std::string, nlohmann::json> evals;
  for (const auto& name : kModelNames) evals[name] = read_json(c.out_dir / "eval" / (name + ".json"));
  auto acc = [&](const std::string& model, const std::string& subset) {
    const auto& s = evals.at(model).at("subsets");
    if (!s.contains(subset)) throw MissingInput("eval for " + model + " lacks subset '" + subset + "'");
    return s.at(subset).at("accuracy").get<double>();
  };

  std::ostringstream t1;
  t1 << "case,row,Q,RR,U\n";
  for (const auto& k : c.corpus.cases) {
    for (const std::string row : {"train", "test", "forget", "retain"}) {
      const std::string subset = row == "test" ? k.name : row;
      t1 << k.name << ',' << row;
      for (const auto& m : kModelNames) t1 << ',' << fmt(acc(m, subset), 5);
      t1 << '\n';
    }
  }
  binio::write_text(c.out_dir / "report" / "table1.csv", t1.str());

  std::ostringstream t2;
  t2 << "case,Q,RR,U\n";
  nlohmann::json summary{{"accuracy", nlohmann::json::object()}, {"mia", nlohmann::json::object()}};
  for (const auto& k : c.corpus.cases) {
    t2 << k.name;
    for (const auto& m : kModelNames) {
      const auto j = read_json(c.out_dir / "mia" / (m + "_" + k.name + ".json"));
      const double score = j.at("score").get<double>();
      t2 << ',' << fmt(score, 5);
      summary["mia"][m][k.name] = score;
      const auto samples = mia::collect_losses(j.at("test_losses").get<std::vector<double>>(),
                                               j.at("forget_losses").get<std::vector<double>>());
      binio::write_text(c.out_dir / "report" / "histograms" / (m + "_" + k.name + ".csv"),
                        mia::to_csv(mia::loss_histogram(samples, c.histogram_bins)));
    }
    t2 << '\n';
  }
  binio::write_text(c.out_dir / "report" / "table2.csv", t2.str());
  for (const auto& m : kModelNames) {
    for (const auto& [subset, r] : evals.at(m).at("subsets").items()) summary["accuracy"][m][subset] = r.at("accuracy");
  }
  write_json(c.out_dir / "report" / "summary.json", summary);
}

void run_all(const ExperimentConfig& c) {
  c.validate();
  if (!c.corpus_path) run_generate(c);
  run_train(c);
  run_relearn(c);
  run_unlearn(c);
  run_eval(c);
  run_mia(c);
  run_cost(c);
  run_report(c);
}

std::string cost_table(const cost::CostReport& r) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-22s %14s %14s %12s\n", "quantity", "closed_form", "monte_carlo", "std_error");
  os << line;
  auto row = [&](const std::string& name, double closed, const cost::Estimate& e) {
    std::snprintf(line, sizeof line, "%-22s %14.6f %14.6f %12.6f\n", name.c_str(), closed, e.mean, e.std_error);
    os << line;
  };
  row("p_event", r.p_event, r.mc.p_event);
  for (std::size_t m = 0; m < r.pmf.size(); ++m) row("pmf[" + std::to_string(m) + "]", r.pmf[m], r.mc.pmf[m]);
  row("E[A1]", r.expected_first, r.mc.expected_first);
  row("E[A1] floored", r.expected_first_floored, r.mc.expected_first_floored);
  row("E[Anu]", r.expected_after, r.mc.expected_after);
  row("E[Anu] floored", r.expected_after_floored, r.mc.expected_after_floored);
  return os.str();
}

}  // namespace mulic::pipeline
