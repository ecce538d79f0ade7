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
#include <cstdint>
#include <vector>

#include "dgn/tensor.hpp"

namespace dgn::ops {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

/// Weighted sum of scalar tensors; undefined entries are skipped.
Tensor weighted_sum(const std::vector<Tensor>& terms, const std::vector<double>& weights);

/// Zero-padded "same" 2-D convolution with stride 1 and an odd kernel.
/// weight: [C_out, C_in, k, k]; bias: [C_out] or undefined.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Rearranges [N, C*r*r, H, W] into [N, C, H*r, W*r].
Tensor pixel_shuffle(const Tensor& x, std::size_t factor);

Tensor slice_channels(const Tensor& x, std::size_t begin, std::size_t count);
Tensor concat_channels(const std::vector<Tensor>& parts);

/// Layer normalization over the channel axis at every spatial position,
/// followed by a per-channel affine transform.
Tensor layer_norm_channels(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                           double eps = 1e-5);

/// out.flat[i] = x.flat[index[i]]; the backward pass scatter-adds.
Tensor gather(const Tensor& x, const Shape& out_shape, std::vector<std::size_t> index);

/// Mean absolute difference over all elements (scalar).
Tensor l1_loss(const Tensor& prediction, const Tensor& target);

/// Sum of all elements (scalar).
Tensor sum(const Tensor& x);

}  // namespace dgn::ops
