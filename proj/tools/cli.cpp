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

#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mulic/error.hpp"
#include "mulic/pipeline.hpp"

namespace mulic::cli {

namespace {

namespace fs = std::filesystem;
using Stage = std::function<void(const pipeline::ExperimentConfig&)>;

const std::map<std::string, Stage>& stages() {
  static const std::map<std::string, Stage> s{
      {"generate", pipeline::run_generate}, {"train", pipeline::run_train}, {"relearn", pipeline::run_relearn},
      {"unlearn", pipeline::run_unlearn},   {"eval", pipeline::run_eval},   {"mia", pipeline::run_mia},
      {"cost", pipeline::run_cost},         {"report", pipeline::run_report}, {"all", pipeline::run_all},
  };
  return s;
}

std::string one_line(std::string s) {
  for (auto& ch : s) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

struct Options {
  std::string subcommand;
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> epochs;
  std::optional<int> finetune_epochs;
  std::optional<std::string> cases;
};

pipeline::ExperimentConfig resolve(const Options& o) {
  pipeline::ExperimentConfig c = pipeline::canonical_experiment();
  if (o.config) {
    const fs::path p(*o.config);
    if (!fs::exists(p)) throw MissingInput("config file " + p.string() + " does not exist");
    std::ifstream in(p);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw InvalidInput(p.string() + ": " + e.what());
    }
    c = pipeline::experiment_from_json(j);
  }
  if (o.seed) c.master_seed = *o.seed;
  if (o.out) c.out_dir = *o.out;
  if (o.epochs) c.train.epochs = *o.epochs;
  if (o.finetune_epochs) c.finetune_epochs = *o.finetune_epochs;
  if (o.cases) {
    std::vector<std::string> names;
    std::stringstream ss(*o.cases);
    for (std::string n; std::getline(ss, n, ',');) {
      if (!n.empty()) names.push_back(n);
    }
    if (names.empty()) throw InvalidInput("--cases needs at least one case name");
    pipeline::restrict_cases(c, names);
  }
  c.validate();
  return c;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"machine unlearning as uplink interference cancellation"};
  app.name("mulic");
  Options o;
  app.add_option("subcommand", o.subcommand, "generate|train|unlearn|relearn|eval|mia|cost|report|all")->required();
  app.add_option("--config", o.config, "experiment config JSON");
  app.add_option("--seed", o.seed, "master seed");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--epochs", o.epochs, "training epochs override");
  app.add_option("--finetune-epochs", o.finetune_epochs, "fine-tuning epochs override");
  app.add_option("--cases", o.cases, "comma-separated case names to keep");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "mulic: " << one_line(e.what()) << '\n';
    return kUsage;
  }
  const auto it = stages().find(o.subcommand);
  if (it == stages().end()) {
    err << "mulic: unknown subcommand '" << o.subcommand << "'\n";
    return kUsage;
  }

  try {
    const auto cfg = resolve(o);
    it->second(cfg);
    out << o.subcommand << ": wrote " << cfg.out_dir.string() << '\n';
    return kOk;
  } catch (const MissingInput& e) {
    err << "mulic: " << one_line(e.what()) << '\n';
    return kMissingInput;
  } catch (const InvalidInput& e) {
    err << "mulic: invalid config: " << one_line(e.what()) << '\n';
    return kInvalidConfig;
  } catch (const std::exception& e) {
    err << "mulic: " << one_line(e.what()) << '\n';
    return kFailure;
  }
}

}  // namespace mulic::cli
