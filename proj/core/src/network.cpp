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

#include "dgn/network.hpp"

#include <set>

#include "dgn/error.hpp"
#include "dgn/init.hpp"
#include "dgn/ops.hpp"

namespace dgn::net {

namespace {

using intra_sim::WindowSet;

constexpr double kProjectionStd = 0.02;

Conv make_conv(std::size_t c_out, std::size_t c_in, std::size_t k, Rng& rng) {
  return {init::fan_in_uniform({c_out, c_in, k, k}, rng), init::bias_uniform(c_out, c_in * k * k, rng)};
}

Conv make_projection(std::size_t c_out, std::size_t c_in, Rng& rng) {
  return {init::truncated_normal({c_out, c_in, 1, 1}, kProjectionStd, rng), init::zeros({c_out})};
}

Conv make_zero_conv(std::size_t c_out, std::size_t c_in, std::size_t k) {
  return {init::zeros({c_out, c_in, k, k}), init::zeros({c_out})};
}

Norm make_norm(std::size_t c) { return {init::ones({c}), init::zeros({c})}; }

Tensor apply(const Conv& conv, const Tensor& x) { return ops::conv2d(x, conv.weight, conv.bias); }

Tensor apply(const Norm& norm, const Tensor& x) {
  return ops::layer_norm_channels(x, norm.gamma, norm.beta);
}

HeadParams make_head(const DgnConfig& cfg, std::size_t c, Rng& rng) {
  HeadParams head;
  if (cfg.task == Task::kSr)
    for (int stage = 0; stage < 2; ++stage) head.upsample.push_back(make_conv(4 * c, c, 3, rng));
  head.output = make_conv(3, c, 3, rng);
  return head;
}

Tensor apply_head(const HeadParams& head, const Tensor& features, const Tensor& input,
                  const DgnConfig& cfg) {
  Tensor f = features;
  for (const auto& up : head.upsample) f = ops::pixel_shuffle(apply(up, f), 2);
  Tensor out = apply(head.output, f);
  if (cfg.task == Task::kDenoise && cfg.denoise_global_skip) out = ops::add(out, input);
  return out;
}

void visit_conv(const std::string& name, Conv& conv,
                const std::function<void(const std::string&, Tensor&)>& fn) {
  if (conv.weight.defined()) fn(name + ".weight", conv.weight);
  if (conv.bias.defined()) fn(name + ".bias", conv.bias);
}

void visit_norm(const std::string& name, Norm& norm,
                const std::function<void(const std::string&, Tensor&)>& fn) {
  if (norm.gamma.defined()) fn(name + ".gamma", norm.gamma);
  if (norm.beta.defined()) fn(name + ".beta", norm.beta);
}

void visit_dfe(const std::string& name, intra_sim::DfeParams& p,
               const std::function<void(const std::string&, Tensor&)>& fn) {
  if (!p.reduce_w.defined()) return;
  fn(name + ".reduce.weight", p.reduce_w);
  fn(name + ".reduce.bias", p.reduce_b);
  fn(name + ".mid.weight", p.mid_w);
  fn(name + ".mid.bias", p.mid_b);
  fn(name + ".expand.weight", p.expand_w);
  fn(name + ".expand.bias", p.expand_b);
  fn(name + ".linear.weight", p.linear_w);
  fn(name + ".linear.bias", p.linear_b);
}

void visit_head(const std::string& name, HeadParams& head,
                const std::function<void(const std::string&, Tensor&)>& fn) {
  for (std::size_t i = 0; i < head.upsample.size(); ++i)
    visit_conv(name + ".upsample." + std::to_string(i), head.upsample[i], fn);
  visit_conv(name + ".output", head.output, fn);
}

WindowSet add_windows(const WindowSet& a, const WindowSet& b) {
  WindowSet out = a;
  out.windows = ops::add(a.windows, b.windows);
  return out;
}

}  // namespace

DgnParams init_params(const DgnConfig& cfg, std::uint64_t seed, const InitOptions& options) {
  cfg.validate();
  Rng rng(seed);
  const std::size_t c = static_cast<std::size_t>(cfg.channels);
  const std::size_t half = c / 2;
  const bool depth = cfg.depth_enabled;
  DgnParams p;
  p.shallow_image = make_conv(c, 3, 3, rng);
  if (depth) p.shallow_depth = make_conv(half, 3, 3, rng);
  for (int g = 0; g < cfg.num_groups; ++g) {
    GroupParams group;
    for (int b = 0; b < cfg.blocks_per_group; ++b) {
      DseParams block;
      block.dfe_image = intra_sim::DfeParams::create(half, rng);
      block.nonlocal = inter_sim::NonLocalParams::create(half, rng);
      block.norm_image = make_norm(c);
      block.linear_image = make_projection(c, c, rng);
      if (depth) {
        block.dfe_depth = intra_sim::DfeParams::create(half, rng);
        block.norm_depth = make_norm(half);
        block.linear_depth = make_projection(half, half, rng);
      }
      group.blocks.push_back(std::move(block));
      group.post_norm_image.push_back(make_norm(c));
      if (depth) group.post_norm_depth.push_back(make_norm(half));
    }
    group.tail_image = options.zero_group_tail ? make_zero_conv(c, c, 3) : make_conv(c, c, 3, rng);
    if (depth)
      group.tail_depth =
          options.zero_group_tail ? make_zero_conv(half, half, 3) : make_conv(half, half, 3, rng);
    p.groups.push_back(std::move(group));
  }
  p.trunk_image = make_conv(c, c, 3, rng);
  if (depth) p.trunk_depth = make_conv(half, half, 3, rng);
  p.head_image = make_head(cfg, c, rng);
  if (depth) p.head_depth = make_head(cfg, half, rng);
  const auto windows = cfg.window_sizes();
  for (int w : std::set<int>(windows.begin(), windows.end()))
    p.bias_tables.emplace(w, intra_sim::RelPosBias::create(static_cast<std::size_t>(w), rng,
                                                           kProjectionStd));
  return p;
}

void for_each_parameter(DgnParams& p, const std::function<void(const std::string&, Tensor&)>& fn) {
  visit_conv("shallow.image", p.shallow_image, fn);
  visit_conv("shallow.depth", p.shallow_depth, fn);
  for (std::size_t g = 0; g < p.groups.size(); ++g) {
    auto& group = p.groups[g];
    const std::string gname = "groups." + std::to_string(g);
    for (std::size_t b = 0; b < group.blocks.size(); ++b) {
      auto& block = group.blocks[b];
      const std::string bname = gname + ".blocks." + std::to_string(b);
      visit_dfe(bname + ".dfe_image", block.dfe_image, fn);
      if (block.nonlocal.proj_w.defined()) {
        fn(bname + ".nonlocal.proj.weight", block.nonlocal.proj_w);
        fn(bname + ".nonlocal.proj.bias", block.nonlocal.proj_b);
      }
      visit_norm(bname + ".norm_image", block.norm_image, fn);
      visit_conv(bname + ".linear_image", block.linear_image, fn);
      visit_dfe(bname + ".dfe_depth", block.dfe_depth, fn);
      visit_norm(bname + ".norm_depth", block.norm_depth, fn);
      visit_conv(bname + ".linear_depth", block.linear_depth, fn);
      if (b < group.post_norm_image.size())
        visit_norm(bname + ".post_norm_image", group.post_norm_image[b], fn);
      if (b < group.post_norm_depth.size())
        visit_norm(bname + ".post_norm_depth", group.post_norm_depth[b], fn);
    }
    visit_conv(gname + ".tail_image", group.tail_image, fn);
    visit_conv(gname + ".tail_depth", group.tail_depth, fn);
  }
  visit_conv("trunk.image", p.trunk_image, fn);
  visit_conv("trunk.depth", p.trunk_depth, fn);
  visit_head("head.image", p.head_image, fn);
  visit_head("head.depth", p.head_depth, fn);
  for (auto& [w, bias] : p.bias_tables) fn("bias_tables.w" + std::to_string(w), bias.table);
}

std::vector<std::pair<std::string, Tensor>> named_parameters(DgnParams& params) {
  std::vector<std::pair<std::string, Tensor>> out;
  for_each_parameter(params, [&](const std::string& name, Tensor& t) { out.emplace_back(name, t); });
  return out;
}

std::size_t parameter_count(DgnParams& params) {
  std::size_t total = 0;
  for_each_parameter(params, [&](const std::string&, Tensor& t) { total += t.numel(); });
  return total;
}

std::pair<Tensor, Tensor> dse_forward(const Tensor& x, const Tensor& x_depth,
                                      const DseParams& params, int window_size,
                                      const intra_sim::RelPosBias& bias, const DgnConfig& cfg,
                                      BlockTrace* trace) {
  require(x.defined() && x.rank() == 4, ErrorCode::kInvalidArgument, "dse: expected NCHW image features");
  const std::size_t c = x.dim(1);
  require(c >= 4 && c % 4 == 0, ErrorCode::kInvalidConfig,
          "dse: image features need a multiple of 4 channels, got " + std::to_string(c));
  const std::size_t half = c / 2, quarter = c / 4;
  const bool depth = cfg.depth_enabled;
  if (depth) {
    require(x_depth.defined() && x_depth.rank() == 4 && x_depth.dim(1) == half,
            ErrorCode::kInvalidConfig,
            "dse: depth features must have half the image channels (" + std::to_string(half) + ")");
    require(x_depth.dim(0) == x.dim(0) && x_depth.dim(2) == x.dim(2) && x_depth.dim(3) == x.dim(3),
            ErrorCode::kInvalidArgument, "dse: image/depth spatial mismatch");
  }
  require(static_cast<int>(bias.win_size) == window_size, ErrorCode::kInvalidConfig,
          "dse: bias table does not match the window size");

  // Image branch: X1 feeds the non-local path, X2 the windowed path.
  const Tensor x1 = ops::slice_channels(x, 0, half);
  const Tensor x2 = ops::slice_channels(x, half, half);
  const Tensor x2_refined = intra_sim::dfe(x2, params.dfe_image);
  const WindowSet q = intra_sim::window_partition(ops::slice_channels(x2_refined, 0, quarter), window_size);
  const WindowSet v = intra_sim::window_partition(ops::slice_channels(x2_refined, quarter, quarter), window_size);
  const Tensor bias_matrix = bias.matrix();

  WindowSet q_depth, v_depth;
  if (depth) {
    const Tensor xd_refined = intra_sim::dfe(x_depth, params.dfe_depth);
    q_depth = intra_sim::window_partition(ops::slice_channels(xd_refined, 0, quarter), window_size);
    v_depth = intra_sim::window_partition(ops::slice_channels(xd_refined, quarter, quarter), window_size);
  }

  const Tensor x1_global = inter_sim::sparse_nonlocal_attention(x1, cfg.lsh, params.nonlocal);
  WindowSet spatial = intra_sim::ssc(q, v, bias_matrix);
  if (depth) spatial = add_windows(spatial, intra_sim::ssc(q_depth, v, bias_matrix));
  const Tensor t = ops::concat_channels({intra_sim::window_merge(intra_sim::csc(q, v, cfg.csc_mode)),
                                         intra_sim::window_merge(spatial), x1_global});
  require(params.linear_image.weight.dim(1) == t.dim(1) && params.linear_image.weight.dim(0) == c,
          ErrorCode::kInvalidConfig, "dse: image projection must map C -> C");
  Tensor out_image = ops::add(apply(params.linear_image, apply(params.norm_image, t)), x);

  Tensor out_depth;
  std::size_t t_depth_channels = 0;
  if (depth) {
    const WindowSet spatial_depth =
        add_windows(intra_sim::ssc(q_depth, v_depth, bias_matrix), intra_sim::ssc(q, v_depth, bias_matrix));
    const Tensor t_depth =
        ops::concat_channels({intra_sim::window_merge(intra_sim::csc(q_depth, v_depth, cfg.csc_mode)),
                              intra_sim::window_merge(spatial_depth)});
    t_depth_channels = t_depth.dim(1);
    require(params.linear_depth.weight.dim(1) == t_depth_channels &&
                params.linear_depth.weight.dim(0) == half,
            ErrorCode::kInvalidConfig, "dse: depth projection must map C/2 -> C/2");
    out_depth = ops::add(apply(params.linear_depth, apply(params.norm_depth, t_depth)), x_depth);
  }

  if (trace) {
    trace->window_size = window_size;
    trace->image_concat_channels = t.dim(1);
    trace->depth_concat_channels = t_depth_channels;
    trace->image_linear = {params.linear_image.weight.dim(1), params.linear_image.weight.dim(0)};
    if (depth)
      trace->depth_linear = {params.linear_depth.weight.dim(1), params.linear_depth.weight.dim(0)};
  }
  return {out_image, out_depth};
}

BranchState residual_group(const BranchState& state, const GroupParams& params, const DgnParams& all,
                           const DgnConfig& cfg, int group_index, const ForwardHooks* hooks) {
  require(state.image.defined() && state.image.rank() == 4 && state.image.dim(2) > 0 &&
              state.image.dim(3) > 0,
          ErrorCode::kInvalidArgument, "residual_group: non-positive feature dims");
  const auto windows = cfg.window_sizes();
  require(params.blocks.size() == windows.size(), ErrorCode::kInvalidConfig,
          "residual_group: block count does not match the window schedule");
  BranchState cur = state;
  for (std::size_t b = 0; b < params.blocks.size(); ++b) {
    const int w = windows[b];
    const auto it = all.bias_tables.find(w);
    require(it != all.bias_tables.end(), ErrorCode::kInvalidConfig,
            "residual_group: no bias table for window " + std::to_string(w));
    BlockTrace trace;
    trace.group = group_index;
    trace.block = static_cast<int>(b);
    auto [img, dep] = dse_forward(cur.image, cur.depth, params.blocks[b], w, it->second, cfg, &trace);
    cur.image = apply(params.post_norm_image[b], img);
    if (cfg.depth_enabled) cur.depth = apply(params.post_norm_depth[b], dep);
    if (hooks && hooks->on_block) hooks->on_block(trace);
  }
  BranchState out;
  out.image = ops::add(apply(params.tail_image, cur.image), state.image);
  if (cfg.depth_enabled) out.depth = ops::add(apply(params.tail_depth, cur.depth), state.depth);
  return out;
}

DgnOutput dgn_forward(const Tensor& x_lq, const Tensor& xd_lq, const DgnConfig& cfg,
                      const DgnParams& params, const ForwardHooks* hooks) {
  cfg.validate();
  require(x_lq.defined() && x_lq.rank() == 4 && x_lq.dim(1) == 3, ErrorCode::kInvalidArgument,
          "dgn_forward: image input must be [B, 3, h, w]");
  if (cfg.depth_enabled)
    require(xd_lq.defined() && xd_lq.shape() == x_lq.shape(), ErrorCode::kInvalidArgument,
            "dgn_forward: depth input must match the image input shape");
  require(params.groups.size() == static_cast<std::size_t>(cfg.num_groups), ErrorCode::kInvalidConfig,
          "dgn_forward: parameter set has the wrong number of groups");

  BranchState shallow;
  shallow.image = apply(params.shallow_image, x_lq);
  if (cfg.depth_enabled) shallow.depth = apply(params.shallow_depth, xd_lq);

  BranchState deep = shallow;
  for (std::size_t g = 0; g < params.groups.size(); ++g)
    deep = residual_group(deep, params.groups[g], params, cfg, static_cast<int>(g), hooks);

  DgnOutput out;
  const Tensor f_image = ops::add(apply(params.trunk_image, deep.image), shallow.image);
  out.image = apply_head(params.head_image, f_image, x_lq, cfg);
  if (cfg.depth_enabled) {
    const Tensor f_depth = ops::add(apply(params.trunk_depth, deep.depth), shallow.depth);
    out.depth = apply_head(params.head_depth, f_depth, xd_lq, cfg);
  }
  return out;
}

DgnModel::DgnModel(DgnConfig cfg, std::uint64_t seed, const InitOptions& options)
    : cfg_(std::move(cfg)), params_(init_params(cfg_, seed, options)) {}

DgnModel::DgnModel(DgnConfig cfg, DgnParams params) : cfg_(std::move(cfg)), params_(std::move(params)) {
  cfg_.validate();
}

}  // namespace dgn::net
