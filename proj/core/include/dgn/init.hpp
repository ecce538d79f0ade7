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

#include "dgn/random.hpp"
#include "dgn/tensor.hpp"

namespace dgn::init {

/// Truncated normal (cut at two standard deviations).
Tensor truncated_normal(const Shape& shape, double stddev, Rng& rng);

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], fan_in = prod(shape[1:]).
Tensor fan_in_uniform(const Shape& shape, Rng& rng);

/// Uniform bias for a layer with the given fan-in.
Tensor bias_uniform(std::size_t size, std::size_t fan_in, Rng& rng);

Tensor zeros(const Shape& shape);
Tensor ones(const Shape& shape);

}  // namespace dgn::init
