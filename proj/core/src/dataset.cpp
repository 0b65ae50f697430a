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

#include "mulic/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "binio.hpp"
#include "mulic/error.hpp"
#include "mulic/rng.hpp"

namespace mulic::data {

namespace {

constexpr char kMagic[4] = {'S', 'I', 'I', 'Q'};

struct Partition {
  std::string name;
  Membership membership;
  const std::vector<IQMap>* maps;
};

IQMap make_map(CounterRng rng, const CorpusConfig& cfg, const std::vector<double>& edges, int nominal_class,
               const std::vector<double>& offsets, Membership m) {
  phy::BlockConfig block;
  block.symbols_per_block = kMapSize / 2;
  block.desired_snr_db = cfg.class_levels_db[static_cast<std::size_t>(nominal_class)];
  block.interferer_offsets_db = offsets;
  block.noise_variance = cfg.noise_variance;
  const bool redraw = offsets.empty() && cfg.clean_match_nominal;
  for (int attempt = 0; attempt <= cfg.max_redraws; ++attempt) {
    auto r = phy::transmit_block(rng, block);
    const double db =
        cfg.label_rule == LabelRule::kRealizedSinr ? r.realized_sinr_db : r.received_power_snr_db;
    const int label = quantize_label(db, edges);
    if (redraw && label != nominal_class) continue;
    return IQMap{blocks_to_map(r.equalized), label, m, db};
  }
  throw NumericFault("no channel draw matched class " + std::to_string(nominal_class) + " within " +
                     std::to_string(cfg.max_redraws) + " redraws");
}

std::vector<IQMap> make_partition(const CounterRng& root, const std::string& stream, int count,
                                  int interfered, const std::vector<double>& offsets, const CorpusConfig& cfg,
                                  Membership m) {
  const auto edges = cfg.class_edges_db();
  const std::vector<double> none;
  std::vector<IQMap> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    out.push_back(make_map(root.substream(stream, static_cast<std::uint64_t>(i)), cfg, edges, i % kClassCount,
                           i < interfered ? offsets : none, m));
  }
  return out;
}

void check_offsets(const std::vector<double>& offsets) {
  for (double o : offsets) {
    if (!std::isfinite(o)) throw InvalidInput("interferer offsets must be finite");
  }
}

}  // namespace

std::string to_string(Membership m) {
  switch (m) {
    case Membership::kRetain: return "retain";
    case Membership::kForget: return "forget";
    case Membership::kTest: return "test";
  }
  return "unknown";
}

std::string to_string(LabelRule r) { return r == LabelRule::kRealizedSinr ? "realized_sinr" : "received_power"; }

LabelRule label_rule_from_string(const std::string& s) {
  if (s == "realized_sinr") return LabelRule::kRealizedSinr;
  if (s == "received_power") return LabelRule::kReceivedPower;
  throw InvalidInput("unknown label rule '" + s + "'");
}

int CaseConfig::interfered_count() const {
  return static_cast<int>(std::lround(interfered_fraction * sample_count));
}

void CaseConfig::validate() const {
  if (name.empty()) throw InvalidInput("case name must not be empty");
  if (!(interfered_fraction >= 0.0 && interfered_fraction <= 1.0)) {
    throw InvalidInput("case '" + name + "': interfered_fraction must lie in [0, 1]");
  }
  if (sample_count <= 0) throw InvalidInput("case '" + name + "': sample_count must be positive");
  check_offsets(interferer_offsets_db);
  if (interferer_offsets_db.empty() && interfered_fraction > 0.0) {
    throw InvalidInput("case '" + name + "': interfered_fraction > 0 without interferers");
  }
}

std::vector<double> CorpusConfig::class_edges_db() const {
  std::vector<double> e;
  for (std::size_t i = 1; i < class_levels_db.size(); ++i) e.push_back(0.5 * (class_levels_db[i - 1] + class_levels_db[i]));
  return e;
}

void CorpusConfig::validate() const {
  if (retain_count <= 0 || forget_count <= 0) throw InvalidInput("retain and forget counts must be positive");
  if (class_levels_db.size() != static_cast<std::size_t>(kClassCount)) {
    throw InvalidInput("exactly " + std::to_string(kClassCount) + " class levels are required");
  }
  for (std::size_t i = 1; i < class_levels_db.size(); ++i) {
    if (!(class_levels_db[i] > class_levels_db[i - 1])) throw InvalidInput("class levels must be strictly increasing");
  }
  if (!(noise_variance > 0.0)) throw InvalidInput("noise_variance must be positive");
  if (max_redraws < 0) throw InvalidInput("max_redraws must be >= 0");
  check_offsets(forget_offsets_db);
  std::vector<std::string> names;
  for (const auto& c : cases) {
    c.validate();
    if (std::find(names.begin(), names.end(), c.name) != names.end()) {
      throw InvalidInput("duplicate case name '" + c.name + "'");
    }
    names.push_back(c.name);
  }
}

std::vector<CaseConfig> canonical_cases() {
  return {
      {"case1", {-12.0}, 1.0 / 6.0, 625},
      {"case2", {-4.0}, 1.0 / 6.0, 625},
      {"case3", {6.0, 6.0}, 1.0, 625},
      {"case4", {}, 0.0, 625},
  };
}

CorpusConfig canonical_corpus_config() {
  CorpusConfig c;
  c.cases = canonical_cases();
  return c;
}

std::vector<IQMap> SiiqDataset::union_set() const {
  std::vector<IQMap> u = retain;
  u.insert(u.end(), forget.begin(), forget.end());
  return u;
}

std::vector<double> blocks_to_map(const phy::ComplexSequence& equalized, int side) {
  if (side <= 0 || side % 2 != 0) throw ShapeError("map side must be positive and even");
  const auto half = static_cast<std::size_t>(side) * static_cast<std::size_t>(side) / 2;
  if (equalized.re.size() != half || equalized.im.size() != half) {
    throw ShapeError("blocks_to_map needs " + std::to_string(half) + " samples, got " +
                     std::to_string(equalized.re.size()));
  }
  std::vector<double> grid(2 * half);
  std::copy(equalized.re.begin(), equalized.re.end(), grid.begin());
  std::copy(equalized.im.begin(), equalized.im.end(), grid.begin() + static_cast<std::ptrdiff_t>(half));
  return grid;
}

phy::ComplexSequence map_to_blocks(std::span<const double> grid, int side) {
  if (side <= 0 || side % 2 != 0) throw ShapeError("map side must be positive and even");
  const auto half = static_cast<std::size_t>(side) * static_cast<std::size_t>(side) / 2;
  if (grid.size() != 2 * half) throw ShapeError("grid size does not match map side");
  phy::ComplexSequence s(half);
  std::copy(grid.begin(), grid.begin() + static_cast<std::ptrdiff_t>(half), s.re.begin());
  std::copy(grid.begin() + static_cast<std::ptrdiff_t>(half), grid.end(), s.im.begin());
  return s;
}

int quantize_label(double db, std::span<const double> class_edges_db) {
  int c = 0;
  for (double e : class_edges_db) c += e <= db ? 1 : 0;
  return c;
}

SiiqDataset generate_corpus(const CorpusConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const CounterRng root(seed);
  SiiqDataset d;
  d.retain = make_partition(root, "siiq.retain", cfg.retain_count, 0, {}, cfg, Membership::kRetain);
  d.forget = make_partition(root, "siiq.forget", cfg.forget_count, cfg.forget_count, cfg.forget_offsets_db, cfg,
                            Membership::kForget);
  for (const auto& c : cfg.cases) {
    d.tests[c.name] = make_partition(root, "siiq.test." + c.name, c.sample_count, c.interfered_count(),
                                     c.interferer_offsets_db, cfg, Membership::kTest);
  }
  auto& m = d.manifest;
  m.master_seed = seed;
  m.prng_id = std::string(CounterRng::kAlgorithmId);
  m.class_levels_db = cfg.class_levels_db;
  m.class_edges_db = cfg.class_edges_db();
  m.label_rule = cfg.label_rule;
  m.noise_variance = cfg.noise_variance;
  m.forget_offsets_db = cfg.forget_offsets_db;
  m.cases = cfg.cases;
  m.retain_count = d.retain.size();
  m.forget_count = d.forget.size();
  for (const auto& [name, maps] : d.tests) m.test_counts[name] = maps.size();
  return d;
}

// Layout: magic, u16 version, u16 side, u8 classes, u32 manifest length,
// manifest JSON, u32 partition count, per partition (name, u8 membership,
// u64 count), then every record in partition order.
void save(const SiiqDataset& d, const std::filesystem::path& path) {
  std::vector<Partition> parts{{"retain", Membership::kRetain, &d.retain}, {"forget", Membership::kForget, &d.forget}};
  for (const auto& [name, maps] : d.tests) parts.push_back({"test." + name, Membership::kTest, &maps});

  const std::string manifest = to_json(d.manifest).dump(2);
  binio::Writer w;
  w.bytes(kMagic, 4);
  w.uint<std::uint16_t>(kSiiqVersion);
  w.uint<std::uint16_t>(static_cast<std::uint16_t>(kMapSide));
  w.uint<std::uint8_t>(static_cast<std::uint8_t>(kClassCount));
  w.str(manifest);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(parts.size()));
  for (const auto& p : parts) {
    w.str(p.name);
    w.uint<std::uint8_t>(static_cast<std::uint8_t>(p.membership));
    w.uint<std::uint64_t>(p.maps->size());
  }
  for (const auto& p : parts) {
    for (const auto& m : *p.maps) {
      if (m.grid.size() != static_cast<std::size_t>(kMapSize)) throw ShapeError("map grid has wrong size");
      w.uint<std::uint8_t>(static_cast<std::uint8_t>(m.label));
      w.uint<std::uint8_t>(static_cast<std::uint8_t>(m.membership));
      w.f64(m.label_db);
      for (double v : m.grid) w.f64(v);
    }
  }
  binio::write_file(path, w.data());
  binio::write_text(manifest_path(path), manifest + "\n");
}

SiiqDataset load(const std::filesystem::path& path) {
  using K = ParseError::Kind;
  const auto buf = binio::read_file(path);
  binio::Reader r(buf, path.string());
  char magic[4];
  r.bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kMagic)) {
    throw ParseError(K::kBadMagic, path.string() + ": bad magic, expected \"SIIQ\"");
  }
  const auto version = r.uint<std::uint16_t>();
  if (version != kSiiqVersion) {
    throw ParseError(K::kVersion, path.string() + ": unsupported SIIQ version " + std::to_string(version));
  }
  const auto side = r.uint<std::uint16_t>();
  const auto classes = r.uint<std::uint8_t>();
  if (side != kMapSide || classes != kClassCount) {
    throw ParseError(K::kVersion, path.string() + ": unsupported map side or class count");
  }
  const std::string manifest_text = r.str();
  SiiqDataset d;
  try {
    d.manifest = manifest_from_json(nlohmann::json::parse(manifest_text));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(K::kManifest, path.string() + ": embedded manifest unreadable: " + e.what());
  } catch (const InvalidInput& e) {
    throw ParseError(K::kManifest, path.string() + ": embedded manifest invalid: " + e.what());
  }

  const auto n_parts = r.uint<std::uint32_t>();
  std::vector<std::pair<std::string, std::uint64_t>> table;
  std::uint64_t total = 0;
  for (std::uint32_t i = 0; i < n_parts; ++i) {
    auto name = r.str();
    r.uint<std::uint8_t>();
    const auto count = r.uint<std::uint64_t>();
    total += count;
    table.emplace_back(std::move(name), count);
  }

  // Counts in the table must agree with the manifest and with the payload.
  const auto& m = d.manifest;
  std::map<std::string, std::uint64_t> expected{{"retain", m.retain_count}, {"forget", m.forget_count}};
  for (const auto& [name, c] : m.test_counts) expected["test." + name] = c;
  if (expected.size() != table.size()) {
    throw ParseError(K::kCountMismatch, path.string() + ": partition table disagrees with manifest");
  }
  for (const auto& [name, count] : table) {
    auto it = expected.find(name);
    if (it == expected.end() || it->second != count) {
      throw ParseError(K::kCountMismatch, path.string() + ": partition '" + name + "' count " +
                                              std::to_string(count) + " disagrees with manifest");
    }
  }
  const std::size_t record = 2 + 8 + 8 * static_cast<std::size_t>(kMapSize);
  if (r.remaining() != total * record) {
    if (r.remaining() < total * record) {
      throw ParseError(K::kTruncated, path.string() + ": payload truncated, expected " + std::to_string(total) +
                                          " records");
    }
    throw ParseError(K::kCountMismatch, path.string() + ": payload holds more records than the table declares");
  }

  for (const auto& [name, count] : table) {
    std::vector<IQMap> maps(count);
    for (auto& mp : maps) {
      mp.label = r.uint<std::uint8_t>();
      mp.membership = static_cast<Membership>(r.uint<std::uint8_t>());
      mp.label_db = r.f64();
      mp.grid.resize(static_cast<std::size_t>(kMapSize));
      for (auto& v : mp.grid) v = r.f64();
    }
    if (name == "retain") {
      d.retain = std::move(maps);
    } else if (name == "forget") {
      d.forget = std::move(maps);
    } else {
      d.tests[name.substr(5)] = std::move(maps);
    }
  }

  const auto side_path = manifest_path(path);
  if (std::filesystem::exists(side_path)) {
    Manifest adjacent;
    try {
      adjacent = manifest_from_json(nlohmann::json::parse(binio::read_file(side_path)));
    } catch (const std::exception& e) {
      throw ParseError(K::kManifest, side_path.string() + ": unreadable manifest: " + e.what());
    }
    if (!(adjacent == d.manifest)) {
      throw ParseError(K::kManifest, side_path.string() + ": adjacent manifest disagrees with the embedded one");
    }
  }
  return d;
}

std::filesystem::path manifest_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".manifest.json");
}

nlohmann::json to_json(const CaseConfig& c) {
  return {{"name", c.name},
          {"user_count", c.user_count()},
          {"interferer_offsets_db", c.interferer_offsets_db},
          {"interfered_fraction", c.interfered_fraction},
          {"sample_count", c.sample_count}};
}

CaseConfig case_from_json(const nlohmann::json& j) {
  CaseConfig c;
  c.name = j.at("name").get<std::string>();
  c.interferer_offsets_db = j.value("interferer_offsets_db", std::vector<double>{});
  c.interfered_fraction = j.value("interfered_fraction", 0.0);
  c.sample_count = j.value("sample_count", 625);
  if (j.contains("user_count") && j.at("user_count").get<int>() != c.user_count()) {
    throw InvalidInput("case '" + c.name + "': user_count disagrees with the offset list");
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const Manifest& m) {
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& c : m.cases) cases.push_back(to_json(c));
  return {{"format_version", m.format_version},
          {"master_seed", m.master_seed},
          {"prng", m.prng_id},
          {"map_side", m.map_side},
          {"class_levels_db", m.class_levels_db},
          {"class_edges_db", m.class_edges_db},
          {"label_rule", to_string(m.label_rule)},
          {"noise_variance", m.noise_variance},
          {"forget_offsets_db", m.forget_offsets_db},
          {"cases", cases},
          {"counts", {{"retain", m.retain_count}, {"forget", m.forget_count}, {"test", m.test_counts}}}};
}

Manifest manifest_from_json(const nlohmann::json& j) {
  Manifest m;
  m.format_version = j.at("format_version").get<std::uint16_t>();
  m.master_seed = j.at("master_seed").get<std::uint64_t>();
  m.prng_id = j.at("prng").get<std::string>();
  m.map_side = j.at("map_side").get<int>();
  m.class_levels_db = j.at("class_levels_db").get<std::vector<double>>();
  m.class_edges_db = j.at("class_edges_db").get<std::vector<double>>();
  m.label_rule = label_rule_from_string(j.at("label_rule").get<std::string>());
  m.noise_variance = j.at("noise_variance").get<double>();
  m.forget_offsets_db = j.at("forget_offsets_db").get<std::vector<double>>();
  for (const auto& c : j.at("cases")) m.cases.push_back(case_from_json(c));
  const auto& counts = j.at("counts");
  m.retain_count = counts.at("retain").get<std::uint64_t>();
  m.forget_count = counts.at("forget").get<std::uint64_t>();
  m.test_counts = counts.at("test").get<std::map<std::string, std::uint64_t>>();
  return m;
}

nlohmann::json to_json(const CorpusConfig& c) {
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& k : c.cases) cases.push_back(to_json(k));
  return {{"retain_count", c.retain_count},
          {"forget_count", c.forget_count},
          {"forget_offsets_db", c.forget_offsets_db},
          {"cases", cases},
          {"class_levels_db", c.class_levels_db},
          {"noise_variance", c.noise_variance},
          {"label_rule", to_string(c.label_rule)},
          {"clean_match_nominal", c.clean_match_nominal},
          {"max_redraws", c.max_redraws}};
}

CorpusConfig corpus_config_from_json(const nlohmann::json& j) {
  CorpusConfig c = canonical_corpus_config();
  if (!j.is_object()) throw InvalidInput("corpus config must be a JSON object");
  try {
    c.retain_count = j.value("retain_count", c.retain_count);
    c.forget_count = j.value("forget_count", c.forget_count);
    c.forget_offsets_db = j.value("forget_offsets_db", c.forget_offsets_db);
    if (j.contains("cases")) {
      c.cases.clear();
      for (const auto& k : j.at("cases")) c.cases.push_back(case_from_json(k));
    }
    c.class_levels_db = j.value("class_levels_db", c.class_levels_db);
    c.noise_variance = j.value("noise_variance", c.noise_variance);
    if (j.contains("label_rule")) c.label_rule = label_rule_from_string(j.at("label_rule").get<std::string>());
    c.clean_match_nominal = j.value("clean_match_nominal", c.clean_match_nominal);
    c.max_redraws = j.value("max_redraws", c.max_redraws);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("corpus config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace mulic::data
