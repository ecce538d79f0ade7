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

#include "dgn/init.hpp"

#include <cmath>

namespace dgn::init {

Tensor truncated_normal(const Shape& shape, double stddev, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.truncated_normal(stddev);
  return Tensor::parameter(shape, std::move(v));
}

Tensor fan_in_uniform(const Shape& shape, Rng& rng) {
  std::size_t fan_in = 1;
  for (std::size_t i = 1; i < shape.size(); ++i) fan_in *= shape[i];
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = (2.0 * rng.uniform() - 1.0) * bound;
  return Tensor::parameter(shape, std::move(v));
}

Tensor bias_uniform(std::size_t size, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> v(size);
  for (auto& x : v) x = (2.0 * rng.uniform() - 1.0) * bound;
  return Tensor::parameter({size}, std::move(v));
}

Tensor zeros(const Shape& shape) {
  return Tensor::parameter(shape, std::vector<double>(shape_numel(shape), 0.0));
}

Tensor ones(const Shape& shape) {
  return Tensor::parameter(shape, std::vector<double>(shape_numel(shape), 1.0));
}

}  // namespace dgn::init
