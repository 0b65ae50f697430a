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

#include "mulic/cnn.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Core>

#include "mulic/error.hpp"
#include "mulic/rng.hpp"

namespace mulic::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ColMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;
using RowMap = Eigen::Map<RowMat>;
using CRowMap = Eigen::Map<const RowMat>;
using ColMap = Eigen::Map<ColMat>;
using CColMap = Eigen::Map<const ColMat>;
using CVecMap = Eigen::Map<const Eigen::VectorXd>;

constexpr int kPatch = kKernel * kKernel;

std::uint64_t next_revision() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

void require_finite(std::span<const double> v, const char* layer) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericFault(std::string("non-finite activation in layer ") + layer);
  }
}

std::size_t batch_of(const Tensor& input) {
  if (input.shape.size() != 4 || input.shape[1] != 1 || input.shape[2] != kInputSide || input.shape[3] != kInputSide) {
    throw ShapeError("input batch must have shape [B,1,28,28]");
  }
  if (input.data.size() != input.shape[0] * kInputSize) throw ShapeError("input data size does not match shape");
  return input.shape[0];
}

// Patch matrix for one 28x28 image: row p = (i, j) output pixel, column k =
// (u, v) kernel tap, column-major so column k is contiguous.
void im2col(const double* img, double* out) {
  for (int u = 0; u < kKernel; ++u) {
    for (int v = 0; v < kKernel; ++v) {
      double* col = out + static_cast<std::ptrdiff_t>(u * kKernel + v) * kConvPixels;
      for (int i = 0; i < kConvSide; ++i) {
        const double* src = img + (i + u) * kInputSide + v;
        std::copy(src, src + kConvSide, col + i * kConvSide);
      }
    }
  }
}

// Conv output for one sample as a 676 x 32 column-major block, which is
// exactly the [32, 26, 26] row-major flatten order.
void conv_one(const double* patches, const Tensor& conv_w, const Tensor& conv_b, double* out) {
  CColMap P(patches, kConvPixels, kPatch);
  CRowMap W(conv_w.data.data(), kConvChannels, kPatch);
  ColMap C(out, kConvPixels, kConvChannels);
  C.noalias() = P * W.transpose();
  C.rowwise() += CVecMap(conv_b.data.data(), kConvChannels).transpose();
}

void check_params_shape(const CnnParams& p) {
  const CnnParams ref = zero_params();
  auto a = p.tensors();
  auto b = ref.tensors();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i]->shape != b[i]->shape || a[i]->data.size() != b[i]->data.size()) {
      throw ShapeError(std::string("parameter ") + CnnParams::kNames[i] + " has the wrong shape");
    }
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  data.assign(n, 0.0);
}

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

void Tensor::validate(const char* what) const {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  if (n != data.size()) throw ShapeError(std::string(what) + ": shape does not match data length");
  for (double x : data) {
    if (!std::isfinite(x)) throw NumericFault(std::string(what) + ": non-finite value");
  }
}

std::size_t CnnParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto* t : tensors()) n += t->size();
  return n;
}

void CnnParams::touch() { revision = next_revision(); }

void CnnParams::validate() const {
  check_params_shape(*this);
  auto ts = tensors();
  for (std::size_t i = 0; i < ts.size(); ++i) ts[i]->validate(kNames[i]);
}

bool CnnParams::operator==(const CnnParams& o) const {
  auto a = tensors();
  auto b = o.tensors();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(*a[i] == *b[i])) return false;
  }
  return true;
}

AdamState AdamState::zeros() {
  AdamState s;
  s.m = zero_params();
  s.v = zero_params();
  return s;
}

CnnParams zero_params() {
  CnnParams p;
  p.touch();
  return p;
}

CnnParams init_params(std::uint64_t seed) {
  CnnParams p;
  CounterRng rng(seed);
  auto fill = [&](Tensor& t, double fan_in) {
    const double bound = 1.0 / std::sqrt(fan_in);
    for (auto& x : t.data) x = (2.0 * rng.uniform() - 1.0) * bound;
  };
  fill(p.conv_w, kPatch);
  fill(p.conv_b, kPatch);
  fill(p.fc1_w, kFlat);
  fill(p.fc1_b, kFlat);
  fill(p.fc2_w, kHidden);
  fill(p.fc2_b, kHidden);
  p.touch();
  return p;
}

Tensor conv2d_forward(const Tensor& input, const Tensor& conv_w, const Tensor& conv_b) {
  const std::size_t B = batch_of(input);
  if (conv_w.shape != std::vector<std::size_t>{kConvChannels, 1, kKernel, kKernel} ||
      conv_b.shape != std::vector<std::size_t>{kConvChannels}) {
    throw ShapeError("conv weights must be [32,1,3,3] with bias [32]");
  }
  Tensor out({B, kConvChannels, kConvSide, kConvSide});
  Buffer patches(static_cast<std::size_t>(kConvPixels) * kPatch);
  for (std::size_t b = 0; b < B; ++b) {
    im2col(input.data.data() + b * kInputSize, patches.data());
    conv_one(patches.data(), conv_w, conv_b, out.data.data() + b * kFlat);
  }
  return out;
}

Tensor softmax(const Tensor& logits) {
  if (logits.shape.size() != 2) throw ShapeError("softmax expects a [B, C] tensor");
  const std::size_t B = logits.shape[0], C = logits.shape[1];
  Tensor probs(logits.shape);
  for (std::size_t b = 0; b < B; ++b) {
    const double* z = logits.data.data() + b * C;
    double* p = probs.data.data() + b * C;
    const double mx = *std::max_element(z, z + C);
    double sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) sum += (p[c] = std::exp(z[c] - mx));
    for (std::size_t c = 0; c < C; ++c) p[c] /= sum;
  }
  return probs;
}

ForwardResult forward(const CnnParams& params, const Tensor& batch, bool keep_cache) {
  check_params_shape(params);
  const std::size_t B = batch_of(batch);
  const auto Bi = static_cast<Eigen::Index>(B);
  ForwardResult r;
  auto& c = r.cache;
  c.revision = params.revision;
  c.batch = B;
  c.patches.resize(B * kConvPixels * kPatch);
  c.conv_act.resize(B * kFlat);
  for (std::size_t b = 0; b < B; ++b) {
    double* pb = c.patches.data() + b * kConvPixels * kPatch;
    im2col(batch.data.data() + b * kInputSize, pb);
    conv_one(pb, params.conv_w, params.conv_b, c.conv_act.data() + b * kFlat);
  }
  require_finite(c.conv_act, "conv");
  for (auto& x : c.conv_act) x = std::max(x, 0.0);

  c.hidden.resize(B * kHidden);
  RowMap H(c.hidden.data(), Bi, kHidden);
  H.noalias() = CRowMap(c.conv_act.data(), Bi, kFlat) * CRowMap(params.fc1_w.data.data(), kHidden, kFlat).transpose();
  H.rowwise() += CVecMap(params.fc1_b.data.data(), kHidden).transpose();
  require_finite(c.hidden, "fc1");
  H = H.cwiseMax(0.0);

  r.logits = Tensor({B, kClasses});
  RowMap L(r.logits.data.data(), Bi, kClasses);
  L.noalias() = H * CRowMap(params.fc2_w.data.data(), kClasses, kHidden).transpose();
  L.rowwise() += CVecMap(params.fc2_b.data.data(), kClasses).transpose();
  require_finite(r.logits.data, "fc2");

  r.probs = softmax(r.logits);
  require_finite(r.probs.data, "softmax");
  c.probs = r.probs.data;
  if (!keep_cache) c = ForwardCache{};
  return r;
}

LossResult cross_entropy(const Tensor& probs, std::span<const int> labels) {
  if (probs.shape.size() != 2 || probs.shape[1] != kClasses) throw ShapeError("probs must be [B, 5]");
  const std::size_t B = probs.shape[0];
  if (labels.size() != B) throw ShapeError("label count does not match batch size");
  if (B == 0) throw InvalidInput("cross_entropy of an empty batch");
  LossResult r;
  r.per_sample.resize(B);
  double sum = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    const int y = labels[b];
    if (y < 0 || y >= kClasses) throw InvalidInput("label " + std::to_string(y) + " out of range");
    const double p = std::max(probs.data[b * kClasses + static_cast<std::size_t>(y)], 1e-12);
    sum += (r.per_sample[b] = -std::log(p));
  }
  r.mean_loss = sum / static_cast<double>(B);
  return r;
}

Gradients backward(const CnnParams& params, const ForwardCache& cache, std::span<const int> labels) {
  if (cache.revision != params.revision) throw InvalidInput("stale forward cache: parameters changed since forward");
  const std::size_t B = cache.batch;
  if (B == 0 || cache.conv_act.size() != B * kFlat || cache.probs.size() != B * kClasses) {
    throw InvalidInput("forward cache is empty or mismatched");
  }
  if (labels.size() != B) throw ShapeError("label count does not match cached batch");
  const auto Bi = static_cast<Eigen::Index>(B);

  // d(mean CE)/d logits = (p - onehot) / B
  RowMat dL = CRowMap(cache.probs.data(), Bi, kClasses);
  for (std::size_t b = 0; b < B; ++b) {
    const int y = labels[b];
    if (y < 0 || y >= kClasses) throw InvalidInput("label " + std::to_string(y) + " out of range");
    dL(static_cast<Eigen::Index>(b), y) -= 1.0;
  }
  dL /= static_cast<double>(B);

  Gradients g = zero_params();
  CRowMap H(cache.hidden.data(), Bi, kHidden);
  RowMap(g.fc2_w.data.data(), kClasses, kHidden).noalias() = dL.transpose() * H;
  Eigen::Map<Eigen::VectorXd>(g.fc2_b.data.data(), kClasses) = dL.colwise().sum().transpose();

  RowMat dH = dL * CRowMap(params.fc2_w.data.data(), kClasses, kHidden);
  dH = (H.array() > 0.0).select(dH, 0.0);

  CRowMap A(cache.conv_act.data(), Bi, kFlat);
  RowMap(g.fc1_w.data.data(), kHidden, kFlat).noalias() = dH.transpose() * A;
  Eigen::Map<Eigen::VectorXd>(g.fc1_b.data.data(), kHidden) = dH.colwise().sum().transpose();

  RowMat dA = dH * CRowMap(params.fc1_w.data.data(), kHidden, kFlat);
  dA = (A.array() > 0.0).select(dA, 0.0);

  // conv weights: dW^T (9 x 32) = sum_b P_b^T dC_b
  ColMat dWt = ColMat::Zero(kPatch, kConvChannels);
  Eigen::VectorXd db = Eigen::VectorXd::Zero(kConvChannels);
  for (std::size_t b = 0; b < B; ++b) {
    CColMap P(cache.patches.data() + b * kConvPixels * kPatch, kConvPixels, kPatch);
    CColMap dC(dA.data() + b * kFlat, kConvPixels, kConvChannels);
    dWt.noalias() += P.transpose() * dC;
    db += dC.colwise().sum().transpose();
  }
  RowMap(g.conv_w.data.data(), kConvChannels, kPatch) = dWt.transpose();
  Eigen::Map<Eigen::VectorXd>(g.conv_b.data.data(), kConvChannels) = db;
  return g;
}

void adam_step(CnnParams& params, const Gradients& grads, AdamState& state, double lr) {
  if (!(lr > 0.0)) throw InvalidInput("learning rate must be positive");
  check_params_shape(params);
  check_params_shape(grads);
  check_params_shape(state.m);
  check_params_shape(state.v);
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  auto P = params.tensors();
  auto G = grads.tensors();
  auto M = state.m.tensors();
  auto V = state.v.tensors();
  for (std::size_t k = 0; k < P.size(); ++k) {
    auto& p = P[k]->data;
    const auto& g = G[k]->data;
    auto& m = M[k]->data;
    auto& v = V[k]->data;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + state.eps);
    }
  }
  params.touch();
}

}  // namespace mulic::nn
