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

#include "dgn/tensor.hpp"

#include <sstream>
#include <unordered_set>

#include "dgn/error.hpp"

namespace dgn {

namespace {
thread_local bool g_grad_enabled = true;
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kCorruptWindowSet: return "corrupt-windowset";
    case ErrorCode::kOracleScaleExceeded: return "oracle-scale-exceeded";
    case ErrorCode::kDecodeError: return "decode-error";
    case ErrorCode::kMissingDepth: return "missing-depth";
    case ErrorCode::kIoError: return "io-error";
    case ErrorCode::kNanLoss: return "nan-loss";
  }
  return "unknown";
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "," : "") << shape[i];
  out << ')';
  return out.str();
}

Tensor Tensor::zeros(const Shape& shape) { return full(shape, 0.0); }

Tensor Tensor::full(const Shape& shape, double value) {
  return from(shape, std::vector<double>(shape_numel(shape), value));
}

Tensor Tensor::from(const Shape& shape, std::vector<double> values) {
  require(values.size() == shape_numel(shape), ErrorCode::kInvalidArgument,
          "value count does not match shape " + shape_string(shape));
  auto node = std::make_shared<detail::Node>();
  node->shape = shape;
  node->value = std::move(values);
  return Tensor(std::move(node));
}

Tensor Tensor::parameter(const Shape& shape, std::vector<double> values) {
  Tensor t = from(shape, std::move(values));
  t.node_->requires_grad = true;
  return t;
}

std::vector<double> Tensor::grad() const {
  if (!node_ || node_->grad.empty()) return std::vector<double>(numel(), 0.0);
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_) node_->grad.clear();
}

double Tensor::item() const {
  require(numel() == 1, ErrorCode::kInvalidArgument, "item() on non-scalar tensor");
  return node_->value[0];
}

double& Tensor::at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
  const auto& s = node_->shape;
  return node_->value[((n * s[1] + c) * s[2] + y) * s[3] + x];
}

double Tensor::at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
  const auto& s = node_->shape;
  return node_->value[((n * s[1] + c) * s[2] + y) * s[3] + x];
}

Tensor Tensor::detach() const { return from(shape(), node_->value); }

Tensor Tensor::reshape(const Shape& new_shape) const {
  require(shape_numel(new_shape) == numel(), ErrorCode::kInvalidArgument,
          "cannot reshape " + shape_string(shape()) + " to " + shape_string(new_shape));
  Tensor self = *this;
  return make_result(new_shape, node_->value, {self}, [self](const std::vector<double>& g) {
    if (auto* dst = grad_target(self))
      for (std::size_t i = 0; i < g.size(); ++i) (*dst)[i] += g[i];
  });
}

Tensor make_result(Shape shape, std::vector<double> values, const std::vector<Tensor>& inputs,
                   std::function<void(const std::vector<double>&)> backward_fn) {
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  if (g_grad_enabled) {
    for (const auto& in : inputs) {
      if (in.requires_grad()) {
        node->requires_grad = true;
        break;
      }
    }
  }
  if (node->requires_grad) {
    for (const auto& in : inputs)
      if (in.requires_grad()) node->parents.push_back(in.node());
    node->backward = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

std::vector<double>* grad_target(const Tensor& input) {
  if (!input.requires_grad()) return nullptr;
  return &input.node()->grad_buffer();
}

void backward(const Tensor& root) {
  require(root.defined() && root.numel() == 1, ErrorCode::kInvalidArgument,
          "backward() needs a scalar root");
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order without recursion
  // depth limits on long graphs.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(node->grad);
  }
  // Intermediate gradients are not needed after the sweep.
  for (detail::Node* node : order)
    if (node->backward) node->grad.clear();
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

}  // namespace dgn
