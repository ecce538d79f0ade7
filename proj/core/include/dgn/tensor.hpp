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
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dgn {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until the first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Receives the gradient of this node and accumulates into the parents.
  std::function<void(const std::vector<double>&)> backward;

  std::vector<double>& grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

// Dense row-major double tensor with tape-free reverse-mode autodiff: each
// result holds shared references to its inputs and a closure that pushes
// its gradient back. Image-like data uses the NCHW layout throughout.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const Shape& shape);
  static Tensor full(const Shape& shape, double value);
  static Tensor from(const Shape& shape, std::vector<double> values);
  /// Leaf that participates in gradient computation.
  static Tensor parameter(const Shape& shape, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t numel() const { return node_->value.size(); }

  std::span<double> data() { return node_->value; }
  std::span<const double> data() const { return node_->value; }
  /// Accumulated gradient; zeros when nothing reached this tensor.
  std::vector<double> grad() const;
  bool has_grad() const { return node_ && !node_->grad.empty(); }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  void zero_grad();

  double item() const;
  double& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x);
  double at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const;

  /// Value copy cut off from the graph.
  Tensor detach() const;
  Tensor reshape(const Shape& shape) const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  friend Tensor make_result(Shape, std::vector<double>, const std::vector<Tensor>&,
                            std::function<void(const std::vector<double>&)>);

  std::shared_ptr<detail::Node> node_;
};

/// Builds an op output. The backward closure is kept only when some input
/// requires a gradient and grad mode is enabled.
Tensor make_result(Shape shape, std::vector<double> values, const std::vector<Tensor>& inputs,
                   std::function<void(const std::vector<double>&)> backward);

/// Gradient accumulation target for an input inside a backward closure;
/// nullptr when that input does not need a gradient.
std::vector<double>* grad_target(const Tensor& input);

/// Runs reverse-mode accumulation from a scalar root (seed 1).
void backward(const Tensor& root);

bool grad_enabled();

/// Disables graph construction in the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace dgn
