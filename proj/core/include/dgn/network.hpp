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

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dgn/config.hpp"
#include "dgn/inter_sim.hpp"
#include "dgn/intra_sim.hpp"
#include "dgn/tensor.hpp"

namespace dgn::net {

struct Conv {
  Tensor weight;
  Tensor bias;
};

struct Norm {
  Tensor gamma;
  Tensor beta;
};

/// One depth-guided spatial enhancement block. Depth-side members stay
/// undefined when the depth branch is disabled.
struct DseParams {
  intra_sim::DfeParams dfe_image;
  inter_sim::NonLocalParams nonlocal;
  Norm norm_image;
  Conv linear_image;  // 1x1, C -> C
  intra_sim::DfeParams dfe_depth;
  Norm norm_depth;
  Conv linear_depth;  // 1x1, C/2 -> C/2
};

struct GroupParams {
  std::vector<DseParams> blocks;
  std::vector<Norm> post_norm_image;  // one per block
  std::vector<Norm> post_norm_depth;
  Conv tail_image;
  Conv tail_depth;
};

struct HeadParams {
  std::vector<Conv> upsample;  // each C -> 4C, followed by a x2 pixel shuffle
  Conv output;                 // -> 3 channels
};

struct DgnParams {
  Conv shallow_image, shallow_depth;
  std::vector<GroupParams> groups;
  Conv trunk_image, trunk_depth;
  HeadParams head_image, head_depth;
  std::map<int, intra_sim::RelPosBias> bias_tables;  // keyed by window size
};

struct InitOptions {
  /// Zero the last convolution of every residual group so each group starts
  /// as the identity map.
  bool zero_group_tail = true;
};

DgnParams init_params(const DgnConfig& cfg, std::uint64_t seed, const InitOptions& options = {});

/// Visits every trainable tensor with its canonical module-path name, in a
/// fixed order. Checkpoints and the optimizer rely on this order.
void for_each_parameter(DgnParams& params, const std::function<void(const std::string&, Tensor&)>& fn);
std::vector<std::pair<std::string, Tensor>> named_parameters(DgnParams& params);
std::size_t parameter_count(DgnParams& params);

/// Structural record emitted once per block for inspection.
struct BlockTrace {
  int group = 0;
  int block = 0;
  int window_size = 0;
  std::size_t image_concat_channels = 0;
  std::size_t depth_concat_channels = 0;
  std::pair<std::size_t, std::size_t> image_linear{0, 0};  // in, out
  std::pair<std::size_t, std::size_t> depth_linear{0, 0};
};

struct ForwardHooks {
  std::function<void(const BlockTrace&)> on_block;
};

struct BranchState {
  Tensor image;  // [B, C, h, w]
  Tensor depth;  // [B, C/2, h, w]; undefined when the depth branch is off
};

std::pair<Tensor, Tensor> dse_forward(const Tensor& x, const Tensor& x_depth,
                                      const DseParams& params, int window_size,
                                      const intra_sim::RelPosBias& bias, const DgnConfig& cfg,
                                      BlockTrace* trace = nullptr);

BranchState residual_group(const BranchState& state, const GroupParams& params,
                           const DgnParams& all, const DgnConfig& cfg, int group_index = 0,
                           const ForwardHooks* hooks = nullptr);

struct DgnOutput {
  Tensor image;  // [B, 3, H, W]
  Tensor depth;  // [B, 3, H, W]; undefined when the depth branch is off
};

DgnOutput dgn_forward(const Tensor& x_lq, const Tensor& xd_lq, const DgnConfig& cfg,
                      const DgnParams& params, const ForwardHooks* hooks = nullptr);

/// Owns a configuration and its parameters.
class DgnModel {
 public:
  DgnModel(DgnConfig cfg, std::uint64_t seed, const InitOptions& options = {});
  DgnModel(DgnConfig cfg, DgnParams params);

  const DgnConfig& config() const { return cfg_; }
  DgnParams& params() { return params_; }
  const DgnParams& params() const { return params_; }

  DgnOutput forward(const Tensor& x_lq, const Tensor& xd_lq,
                    const ForwardHooks* hooks = nullptr) const {
    return dgn_forward(x_lq, xd_lq, cfg_, params_, hooks);
  }

 private:
  DgnConfig cfg_;
  DgnParams params_;
};

}  // namespace dgn::net
