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

// The fixed classifier: conv 1->32 3x3 valid, ReLU, fc 21632->128, ReLU,
// fc 128->5, softmax. Gradients are derived by hand. Everything is f64.

#include <array>
#include <cstdint>
#include <filesystem>
#include <new>
#include <span>
#include <vector>

namespace mulic::nn {

inline constexpr int kInputSide = 28;
inline constexpr int kInputSize = kInputSide * kInputSide;
inline constexpr int kConvChannels = 32;
inline constexpr int kKernel = 3;
inline constexpr int kConvSide = kInputSide - kKernel + 1;  // 26
inline constexpr int kConvPixels = kConvSide * kConvSide;
inline constexpr int kFlat = kConvChannels * kConvPixels;   // 21632
inline constexpr int kHidden = 128;
inline constexpr int kClasses = 5;

// Storage aligned for the widest SIMD packet. The GEMM kernels peel an
// unaligned head in scalar code, so with plain malloc alignment the
// summation order, and the low bits of every result, depend on where the
// heap put the buffer.
template <class T>
struct SimdAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};
  SimdAllocator() = default;
  template <class U>
  SimdAllocator(const SimdAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }
  template <class U>
  bool operator==(const SimdAllocator<U>&) const noexcept { return true; }
};

using Buffer = std::vector<double, SimdAllocator<double>>;

struct Tensor {
  std::vector<std::size_t> shape;
  Buffer data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s);

  std::size_t size() const noexcept { return data.size(); }
  void fill(double v);
  /// Throws ShapeError if product(shape) != size, NumericFault if not finite.
  void validate(const char* what) const;
  bool operator==(const Tensor& o) const { return shape == o.shape && data == o.data; }
};

struct CnnParams {
  Tensor conv_w{{kConvChannels, 1, kKernel, kKernel}};
  Tensor conv_b{{kConvChannels}};
  Tensor fc1_w{{kHidden, kFlat}};
  Tensor fc1_b{{kHidden}};
  Tensor fc2_w{{kClasses, kHidden}};
  Tensor fc2_b{{kClasses}};
  // Changes on every mutation through this API; a forward cache remembers
  // it so backward can refuse a cache built from other weights.
  std::uint64_t revision = 0;

  static constexpr std::array<const char*, 6> kNames{"conv_w", "conv_b", "fc1_w", "fc1_b", "fc2_w", "fc2_b"};

  std::array<Tensor*, 6> tensors() { return {&conv_w, &conv_b, &fc1_w, &fc1_b, &fc2_w, &fc2_b}; }
  std::array<const Tensor*, 6> tensors() const { return {&conv_w, &conv_b, &fc1_w, &fc1_b, &fc2_w, &fc2_b}; }
  std::size_t parameter_count() const;
  /// Call after editing weights directly.
  void touch();
  void validate() const;
  /// Weights only; the revision is ignored.
  bool operator==(const CnnParams& o) const;
};

using Gradients = CnnParams;

struct AdamState {
  CnnParams m;
  CnnParams v;
  std::int64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState zeros();
  bool operator==(const AdamState& o) const {
    return m == o.m && v == o.v && step_count == o.step_count && beta1 == o.beta1 && beta2 == o.beta2 &&
           eps == o.eps;
  }
};

struct ForwardCache {
  std::uint64_t revision = 0;
  std::size_t batch = 0;
  Buffer patches;  // per sample, 676 x 9 column-major
  Buffer conv_act; // [B, 21632], post-ReLU
  Buffer hidden;   // [B, 128], post-ReLU
  Buffer probs;    // [B, 5]
};

struct ForwardResult {
  Tensor logits;  // [B, 5]
  Tensor probs;   // [B, 5]
  ForwardCache cache;
};

struct LossResult {
  double mean_loss = 0.0;
  std::vector<double> per_sample;
};

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
CnnParams init_params(std::uint64_t seed);
CnnParams zero_params();

/// [B,1,28,28] -> [B,32,26,26].
Tensor conv2d_forward(const Tensor& input, const Tensor& conv_w, const Tensor& conv_b);

ForwardResult forward(const CnnParams& params, const Tensor& batch, bool keep_cache = true);

/// Row-wise softmax with max subtraction; logits is [B, C].
Tensor softmax(const Tensor& logits);

LossResult cross_entropy(const Tensor& probs, std::span<const int> labels);

Gradients backward(const CnnParams& params, const ForwardCache& cache, std::span<const int> labels);

void adam_step(CnnParams& params, const Gradients& grads, AdamState& state, double lr);

void save_checkpoint(const CnnParams& params, const AdamState* adam, const std::filesystem::path& path);
struct Checkpoint {
  CnnParams params;
  bool has_adam = false;
  AdamState adam;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mulic::nn
