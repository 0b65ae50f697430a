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

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "cli.hpp"
#include "mulic/pipeline.hpp"
#include "test_support.hpp"

using namespace mulic;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome call(std::vector<std::string> args) {
  args.insert(args.begin(), "mulic");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path write_config(const fs::path& dir, const std::string& name, const nlohmann::json& j) {
  const auto p = dir / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

nlohmann::json tiny_experiment() {
  auto c = pipeline::canonical_experiment();
  c.corpus = testing::tiny_corpus_config(60, 20, 20);
  c.train.epochs = 1;
  c.train.batch_size = 16;
  c.finetune_epochs = 1;
  c.histogram_bins = 8;
  c.cost_trials = 10000;
  return pipeline::to_json(c);
}

std::map<std::string, std::vector<char>> tree(const fs::path& root) {
  std::map<std::string, std::vector<char>> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = testing::read_bytes(e.path());
  }
  return files;
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> v;
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

bool one_line(const std::string& s) { return !s.empty() && std::count(s.begin(), s.end(), '\n') == 1; }

}  // namespace

TEST_CASE("usage errors exit 2") {
  auto r = call({});
  CHECK(r.code == cli::kUsage);
  CHECK(one_line(r.err));
  r = call({"frobnicate"});
  CHECK(r.code == cli::kUsage);
  CHECK(r.err.find("frobnicate") != std::string::npos);
  r = call({"all", "--no-such-flag"});
  CHECK(r.code == cli::kUsage);
  CHECK(one_line(r.err));
  CHECK(call({"--help"}).code == cli::kOk);
}

TEST_CASE("invalid configs exit 3") {
  testing::TempDir t("cli_bad");
  auto bad = tiny_experiment();
  bad["train"]["epochs"] = -1;
  auto r = call({"generate", "--config", write_config(t.path(), "neg.json", bad).string()});
  CHECK(r.code == cli::kInvalidConfig);
  CHECK(one_line(r.err));
  std::ofstream(t.path() / "broken.json") << "{ not json";
  CHECK(call({"generate", "--config", (t.path() / "broken.json").string()}).code == cli::kInvalidConfig);
  auto probs = tiny_experiment();
  probs["cost_configs"][0]["user_activity_probs"] = {0.2, 1.5};
  CHECK(call({"cost", "--config", write_config(t.path(), "p.json", probs).string()}).code == cli::kInvalidConfig);
  CHECK(call({"generate", "--cases", "case9", "--out", t.path().string()}).code == cli::kInvalidConfig);
}

TEST_CASE("missing inputs exit 4") {
  testing::TempDir t("cli_missing");
  auto r = call({"generate", "--config", (t.path() / "nope.json").string()});
  CHECK(r.code == cli::kMissingInput);
  CHECK(one_line(r.err));
  const auto cfg = write_config(t.path(), "tiny.json", tiny_experiment()).string();
  const auto out = (t.path() / "run").string();
  for (const char* stage : {"train", "relearn", "eval", "mia", "report"}) {
    CAPTURE(stage);
    CHECK(call({stage, "--config", cfg, "--out", out}).code == cli::kMissingInput);
  }
  CHECK(call({"generate", "--config", cfg, "--out", out}).code == cli::kOk);
  CHECK(call({"unlearn", "--config", cfg, "--out", out}).code == cli::kMissingInput);
}

TEST_CASE("all on a tiny config") {
  testing::TempDir t("cli_all");
  const auto cfg = write_config(t.path(), "tiny.json", tiny_experiment()).string();
  const auto a = t.path() / "a";
  const auto b = t.path() / "b";
  const auto s = t.path() / "staged";
  REQUIRE(call({"all", "--config", cfg, "--out", a.string()}).code == cli::kOk);

  SUBCASE("reruns are byte-identical") {
    REQUIRE(call({"all", "--config", cfg, "--out", b.string()}).code == cli::kOk);
    const auto ta = tree(a);
    CHECK(ta.size() > 30);
    const auto tb = tree(b);
    for (const auto& [k, v] : ta) {
      if (!tb.count(k) || tb.at(k) != v) MESSAGE("differs: " << k);
    }
    CHECK(ta == tb);
  }
  SUBCASE("stage by stage equals all") {
    for (const char* stage : {"generate", "train", "relearn", "unlearn", "eval", "mia", "cost", "report"}) {
      CAPTURE(stage);
      REQUIRE(call({stage, "--config", cfg, "--out", s.string()}).code == cli::kOk);
    }
    CHECK(tree(a) == tree(s));
  }
  SUBCASE("a different seed changes the results") {
    REQUIRE(call({"all", "--config", cfg, "--out", b.string(), "--seed", "5"}).code == cli::kOk);
    CHECK(testing::read_bytes(a / "models" / "Q.mulc") != testing::read_bytes(b / "models" / "Q.mulc"));
  }
  SUBCASE("report shapes") {
    const auto t1 = lines(a / "report" / "table1.csv");
    REQUIRE(t1.size() == 17);
    CHECK(t1[0] == "case,row,Q,RR,U");
    const auto t2 = lines(a / "report" / "table2.csv");
    REQUIRE(t2.size() == 5);
    CHECK(t2[0] == "case,Q,RR,U");
    int scores = 0;
    for (std::size_t i = 1; i < t2.size(); ++i) {
      std::stringstream ss(t2[i]);
      std::string cell;
      std::getline(ss, cell, ',');
      while (std::getline(ss, cell, ',')) {
        const double v = std::stod(cell);
        CHECK((v >= 0.0 && v <= 1.0));
        ++scores;
      }
    }
    CHECK(scores == 12);
    for (const char* m : {"Q", "RR", "U"}) {
      for (const char* k : {"case1", "case2", "case3", "case4"}) {
        CHECK(fs::exists(a / "report" / "histograms" / (std::string(m) + "_" + k + ".csv")));
      }
      CHECK(fs::exists(a / "eval" / (std::string(m) + "_case3_confusion.csv")));
    }
    CHECK(fs::exists(a / "cost" / "cost_0.txt"));
    CHECK(fs::exists(a / "corpus.siiq.manifest.json"));
  }
}

TEST_CASE("--cases keeps only the named test sets") {
  testing::TempDir t("cli_cases");
  const auto cfg = write_config(t.path(), "tiny.json", tiny_experiment()).string();
  REQUIRE(call({"all", "--config", cfg, "--out", t.path().string(), "--cases", "case4,case3"}).code == cli::kOk);
  CHECK(lines(t.path() / "report" / "table1.csv").size() == 9);
  CHECK_FALSE(fs::exists(t.path() / "mia" / "Q_case1.json"));
}
