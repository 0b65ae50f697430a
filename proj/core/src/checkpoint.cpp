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

#include <algorithm>
#include <string>

#include "binio.hpp"
#include "mulic/cnn.hpp"
#include "mulic/error.hpp"

namespace mulic::nn {

namespace {

constexpr char kMagic[4] = {'M', 'U', 'L', 'C'};
constexpr std::uint16_t kVersion = 1;

void write_payload(binio::Writer& w, const CnnParams& p) {
  for (const auto* t : p.tensors()) {
    for (double x : t->data) w.f64(x);
  }
}

void read_payload(binio::Reader& r, CnnParams& p) {
  for (auto* t : p.tensors()) {
    r.need(t->data.size() * 8);
    for (auto& x : t->data) x = r.f64();
  }
  p.touch();
}

}  // namespace

// Layout: magic, u16 version, u32 tensor count, per tensor (name, u32 rank,
// u64 dims), u8 adam flag, [u64 step, f64 beta1, beta2, eps], then the
// parameter payload and, if flagged, the m and v payloads.
void save_checkpoint(const CnnParams& params, const AdamState* adam, const std::filesystem::path& path) {
  params.validate();
  binio::Writer w;
  w.bytes(kMagic, 4);
  w.uint<std::uint16_t>(kVersion);
  const auto ts = params.tensors();
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(ts.size()));
  for (std::size_t i = 0; i < ts.size(); ++i) {
    w.str(CnnParams::kNames[i]);
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(ts[i]->shape.size()));
    for (auto d : ts[i]->shape) w.uint<std::uint64_t>(d);
  }
  w.uint<std::uint8_t>(adam ? 1 : 0);
  if (adam) {
    w.uint<std::uint64_t>(static_cast<std::uint64_t>(adam->step_count));
    w.f64(adam->beta1);
    w.f64(adam->beta2);
    w.f64(adam->eps);
  }
  write_payload(w, params);
  if (adam) {
    write_payload(w, adam->m);
    write_payload(w, adam->v);
  }
  binio::write_file(path, w.data());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  using K = ParseError::Kind;
  const auto buf = binio::read_file(path);
  binio::Reader r(buf, path.string());
  char magic[4];
  r.bytes(magic, 4);
  if (!std::equal(magic, magic + 4, kMagic)) {
    throw ParseError(K::kBadMagic, path.string() + ": bad magic, expected \"MULC\"");
  }
  const auto version = r.uint<std::uint16_t>();
  if (version != kVersion) {
    throw ParseError(K::kVersion, path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  ck.params = zero_params();
  const auto ts = ck.params.tensors();
  const auto count = r.uint<std::uint32_t>();
  if (count != ts.size()) {
    throw ParseError(K::kCountMismatch, path.string() + ": expected 6 tensors, table lists " + std::to_string(count));
  }
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto name = r.str();
    const auto rank = r.uint<std::uint32_t>();
    std::vector<std::size_t> shape;
    for (std::uint32_t k = 0; k < rank && k < 8; ++k) shape.push_back(r.uint<std::uint64_t>());
    if (name != CnnParams::kNames[i] || shape != ts[i]->shape) {
      throw ParseError(K::kCountMismatch, path.string() + ": tensor '" + name + "' does not match the network shape");
    }
  }
  const auto flag = r.uint<std::uint8_t>();
  if (flag > 1) throw ParseError(K::kVersion, path.string() + ": bad optimizer flag");
  ck.has_adam = flag == 1;
  if (ck.has_adam) {
    ck.adam = AdamState::zeros();
    ck.adam.step_count = static_cast<std::int64_t>(r.uint<std::uint64_t>());
    ck.adam.beta1 = r.f64();
    ck.adam.beta2 = r.f64();
    ck.adam.eps = r.f64();
  }
  read_payload(r, ck.params);
  if (ck.has_adam) {
    read_payload(r, ck.adam.m);
    read_payload(r, ck.adam.v);
  }
  if (r.remaining() != 0) {
    throw ParseError(K::kCountMismatch, path.string() + ": " + std::to_string(r.remaining()) + " trailing bytes");
  }
  return ck;
}

}  // namespace mulic::nn
