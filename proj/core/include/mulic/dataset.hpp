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

// SIIQ corpus: equalized blocks reshaped into A x A IQ maps, labeled by a
// quantized block SNR, partitioned into retain / forget / per-case tests.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mulic/phy_sim.hpp"

namespace mulic::data {

inline constexpr int kMapSide = 28;
inline constexpr int kMapSize = kMapSide * kMapSide;
inline constexpr int kClassCount = 5;
inline constexpr std::uint16_t kSiiqVersion = 1;

enum class Membership : std::uint8_t { kRetain = 0, kForget = 1, kTest = 2 };

// What the class label quantizes.
//  kRealizedSinr:   desired power over interference plus noise.
//  kReceivedPower:  total received power over noise, as measured by a
//                   receiver that cannot separate the interferers.
enum class LabelRule { kRealizedSinr, kReceivedPower };

std::string to_string(Membership m);
std::string to_string(LabelRule r);
LabelRule label_rule_from_string(const std::string& s);

struct IQMap {
  std::vector<double> grid;  // kMapSize values, row-major
  int label = 0;
  Membership membership = Membership::kRetain;
  double label_db = 0.0;  // the quantity the label was cut from

  bool operator==(const IQMap&) const = default;
};

struct CaseConfig {
  std::string name;
  std::vector<double> interferer_offsets_db;
  double interfered_fraction = 0.0;
  int sample_count = 625;

  int user_count() const noexcept { return 1 + static_cast<int>(interferer_offsets_db.size()); }
  /// Interfered maps come first in the generated list.
  int interfered_count() const;
  void validate() const;
  bool operator==(const CaseConfig&) const = default;
};

struct CorpusConfig {
  int retain_count = 3125;
  int forget_count = 625;
  std::vector<double> forget_offsets_db{6.0, 6.0};
  std::vector<CaseConfig> cases;
  std::vector<double> class_levels_db{-10.0, -5.0, 0.0, 5.0, 10.0};
  double noise_variance = 1.0;
  LabelRule label_rule = LabelRule::kReceivedPower;
  // Clean blocks are redrawn until their label equals the nominal class,
  // which makes clean class histograms exactly uniform.
  bool clean_match_nominal = true;
  int max_redraws = 10000;

  /// Midpoints between consecutive class levels.
  std::vector<double> class_edges_db() const;
  void validate() const;
};

std::vector<CaseConfig> canonical_cases();
CorpusConfig canonical_corpus_config();

struct Manifest {
  std::uint64_t master_seed = 0;
  std::string prng_id;
  std::uint16_t format_version = kSiiqVersion;
  int map_side = kMapSide;
  std::vector<double> class_levels_db;
  std::vector<double> class_edges_db;
  LabelRule label_rule = LabelRule::kReceivedPower;
  double noise_variance = 1.0;
  std::vector<double> forget_offsets_db;
  std::vector<CaseConfig> cases;
  std::uint64_t retain_count = 0;
  std::uint64_t forget_count = 0;
  std::map<std::string, std::uint64_t> test_counts;

  bool operator==(const Manifest&) const = default;
};

struct SiiqDataset {
  std::vector<IQMap> retain;
  std::vector<IQMap> forget;
  std::map<std::string, std::vector<IQMap>> tests;
  Manifest manifest;

  /// retain followed by forget.
  std::vector<IQMap> union_set() const;
  bool operator==(const SiiqDataset&) const = default;
};

std::vector<double> blocks_to_map(const phy::ComplexSequence& equalized, int side = kMapSide);
phy::ComplexSequence map_to_blocks(std::span<const double> grid, int side = kMapSide);

/// Number of edges at or below the value, so an edge belongs to the upper bin.
int quantize_label(double db, std::span<const double> class_edges_db);

SiiqDataset generate_corpus(const CorpusConfig& cfg, std::uint64_t seed);

void save(const SiiqDataset& d, const std::filesystem::path& path);
SiiqDataset load(const std::filesystem::path& path);
/// Adjacent manifest path written by save: "<path>.manifest.json".
std::filesystem::path manifest_path(const std::filesystem::path& path);

nlohmann::json to_json(const CaseConfig& c);
CaseConfig case_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CorpusConfig& c);
CorpusConfig corpus_config_from_json(const nlohmann::json& j);

}  // namespace mulic::data
