// Copyright 2026 The DGN Authors.
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

#include <cstddef>
#include <vector>

#include "dgn/random.hpp"
#include "dgn/tensor.hpp"

// Windowed correlation attention: the building blocks of the intra-object
// similarity path (gated feature extraction plus spatial and channel
// self-correlation inside non-overlapping windows).
namespace dgn::intra_sim {

/// Non-overlapping square windows cut from a reflection-padded feature map.
/// `windows` is [num_windows, win_area, channels]; windows are ordered
/// row-major within each image, images in batch order.
struct WindowSet {
  Tensor windows;
  std::size_t win_size = 0;
  std::size_t pad_h = 0;
  std::size_t pad_w = 0;
  std::size_t orig_h = 0;
  std::size_t orig_w = 0;

  std::size_t num_windows() const { return windows.dim(0); }
  std::size_t win_area() const { return windows.dim(1); }
  std::size_t channels() const { return windows.dim(2); }
  std::size_t windows_per_image() const;
};

/// Learned relative positional bias for one window size. Row `index[p * area + q]`
/// of `table` holds the bias between window positions p and q.
struct RelPosBias {
  Tensor table;  // [(2 * win_size - 1)^2, num_heads]
  std::vector<std::size_t> index;
  std::size_t win_size = 0;
  std::size_t num_heads = 1;

  static RelPosBias create(std::size_t win_size, Rng& rng, double init_std = 0.02);
  static RelPosBias zeros(std::size_t win_size);

  /// Dense [win_area, win_area] bias for head 0, differentiable w.r.t. `table`.
  Tensor matrix() const;
};

/// Index into the reflected (mirror, edge not repeated) extension of [0, n).
std::size_t reflect_index(long i, std::size_t n);

WindowSet window_partition(const Tensor& x, int win_size);
Tensor window_merge(const WindowSet& ws);

/// Parameters of the gated extractor. The convolutional branch is a
/// bottleneck (1x1 reduce, 3x3, 1x1 expand); the linear branch is a
/// per-pixel projection. Both keep the channel count.
struct DfeParams {
  Tensor reduce_w, reduce_b;
  Tensor mid_w, mid_b;
  Tensor expand_w, expand_b;
  Tensor linear_w, linear_b;

  static DfeParams create(std::size_t channels, Rng& rng);
};

std::size_t dfe_bottleneck_width(std::size_t channels);

/// Conv(x) * L(x), elementwise.
Tensor dfe(const Tensor& x, const DfeParams& params);

/// Per window: (Q V^T / sqrt(d) + B) V, where d is the channel width of
/// Q and V. `bias` is a [win_area, win_area] matrix or undefined (B = 0).
WindowSet ssc(const WindowSet& q, const WindowSet& v, const Tensor& bias);

enum class CscMode {
  kChannel,  // V (Q^T V / sqrt(area)): a [d x d] channel correlation map
  kSpatial,  // (Q V^T / sqrt(area)) V: the operand order as printed
};

WindowSet csc(const WindowSet& q, const WindowSet& v, CscMode mode = CscMode::kChannel);

/// Window sizes for the blocks of one residual group: base * ratio each.
std::vector<int> window_schedule(int base, const std::vector<double>& ratios);

}  // namespace dgn::intra_sim
