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

#include "dgn/intra_sim.hpp"

#include <cmath>

#include "dgn/error.hpp"
#include "dgn/init.hpp"
#include "dgn/ops.hpp"
#include "matrix_kernels.hpp"

namespace dgn::intra_sim {

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

void require_compatible(const WindowSet& q, const WindowSet& v, const char* op) {
  require(q.windows.defined() && v.windows.defined() && q.windows.rank() == 3 &&
              v.windows.rank() == 3,
          ErrorCode::kInvalidArgument, std::string(op) + ": window sets must be rank 3");
  require(q.windows.shape() == v.windows.shape() && q.win_size == v.win_size,
          ErrorCode::kInvalidArgument,
          std::string(op) + ": query/value window sets differ " + shape_string(q.windows.shape()) +
              " vs " + shape_string(v.windows.shape()));
}

// Shared kernel for (Q V^T * inv + B) V. Used by SSC and by the spatial CSC reading.
WindowSet spatial_correlation(const WindowSet& q, const WindowSet& v, const Tensor& bias,
                              double inv) {
  const std::size_t nw = q.num_windows(), n = q.win_area(), d = q.channels();
  if (bias.defined())
    require(bias.shape() == Shape{n, n}, ErrorCode::kInvalidArgument,
            "ssc: bias must be [win_area, win_area]");
  auto qv = q.windows.data();
  auto vv = v.windows.data();
  std::vector<double> corr(nw * n * n, 0.0);
  std::vector<double> out(nw * n * d, 0.0);
  for (std::size_t w = 0; w < nw; ++w) {
    double* s = corr.data() + w * n * n;
    if (bias.defined()) std::copy(bias.data().begin(), bias.data().end(), s);
    kernels::gemm_nt(qv.data() + w * n * d, vv.data() + w * n * d, s, n, d, n, inv);
    kernels::gemm_nn(s, vv.data() + w * n * d, out.data() + w * n * d, n, n, d);
  }
  Tensor qt = q.windows, vt = v.windows;
  WindowSet result = v;
  result.windows = make_result(
      v.windows.shape(), std::move(out), {qt, vt, bias},
      [qt, vt, bias, nw, n, d, inv, corr = std::move(corr)](const std::vector<double>& g) {
        auto* gq = grad_target(qt);
        auto* gv = grad_target(vt);
        auto* gb = bias.defined() ? grad_target(bias) : nullptr;
        auto qv = qt.data();
        auto vv = vt.data();
        std::vector<double> ds(n * n);
        for (std::size_t w = 0; w < nw; ++w) {
          const double* go = g.data() + w * n * d;
          const double* qw = qv.data() + w * n * d;
          const double* vw = vv.data() + w * n * d;
          std::fill(ds.begin(), ds.end(), 0.0);
          kernels::gemm_nt(go, vw, ds.data(), n, d, n);
          if (gv) {
            double* gvw = gv->data() + w * n * d;
            kernels::gemm_tn(corr.data() + w * n * n, go, gvw, n, n, d);
            kernels::gemm_tn(ds.data(), qw, gvw, n, n, d, inv);
          }
          if (gq) kernels::gemm_nn(ds.data(), vw, gq->data() + w * n * d, n, n, d, inv);
          if (gb)
            for (std::size_t i = 0; i < n * n; ++i) (*gb)[i] += ds[i];
        }
      });
  return result;
}

}  // namespace

std::size_t WindowSet::windows_per_image() const {
  return ceil_div(orig_h, win_size) * ceil_div(orig_w, win_size);
}

std::size_t reflect_index(long i, std::size_t n) {
  if (n <= 1) return 0;
  const long period = 2 * (static_cast<long>(n) - 1);
  long m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<long>(n)) m = period - m;
  return static_cast<std::size_t>(m);
}

RelPosBias RelPosBias::create(std::size_t win_size, Rng& rng, double init_std) {
  RelPosBias bias = zeros(win_size);
  bias.table = init::truncated_normal(bias.table.shape(), init_std, rng);
  return bias;
}

RelPosBias RelPosBias::zeros(std::size_t win_size) {
  require(win_size >= 1, ErrorCode::kInvalidArgument, "RelPosBias: win_size must be positive");
  RelPosBias bias;
  bias.win_size = win_size;
  const std::size_t span = 2 * win_size - 1;
  bias.table = init::zeros({span * span, bias.num_heads});
  const std::size_t area = win_size * win_size;
  bias.index.resize(area * area);
  for (std::size_t p = 0; p < area; ++p) {
    const std::size_t py = p / win_size, px = p % win_size;
    for (std::size_t q = 0; q < area; ++q) {
      const std::size_t qy = q / win_size, qx = q % win_size;
      const std::size_t ry = py + win_size - 1 - qy;
      const std::size_t rx = px + win_size - 1 - qx;
      bias.index[p * area + q] = ry * span + rx;
    }
  }
  return bias;
}

Tensor RelPosBias::matrix() const {
  const std::size_t area = win_size * win_size;
  std::vector<std::size_t> rows(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) rows[i] = index[i] * num_heads;
  return ops::gather(table, {area, area}, std::move(rows));
}

WindowSet window_partition(const Tensor& x, int win_size) {
  require(win_size >= 1, ErrorCode::kInvalidArgument,
          "window_partition: win_size must be positive, got " + std::to_string(win_size));
  require(x.defined() && x.rank() == 4 && x.dim(2) > 0 && x.dim(3) > 0,
          ErrorCode::kInvalidArgument, "window_partition: expected NCHW with positive spatial dims");
  const std::size_t ws = static_cast<std::size_t>(win_size);
  const std::size_t batch = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t nwh = ceil_div(h, ws), nww = ceil_div(w, ws);
  const std::size_t area = ws * ws;
  std::vector<std::size_t> index(batch * nwh * nww * area * c);
  std::size_t i = 0;
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t wy = 0; wy < nwh; ++wy)
      for (std::size_t wx = 0; wx < nww; ++wx)
        for (std::size_t iy = 0; iy < ws; ++iy) {
          const std::size_t sy = reflect_index(static_cast<long>(wy * ws + iy), h);
          for (std::size_t ix = 0; ix < ws; ++ix) {
            const std::size_t sx = reflect_index(static_cast<long>(wx * ws + ix), w);
            for (std::size_t ch = 0; ch < c; ++ch) index[i++] = ((b * c + ch) * h + sy) * w + sx;
          }
        }
  WindowSet result;
  result.windows = ops::gather(x, {batch * nwh * nww, area, c}, std::move(index));
  result.win_size = ws;
  result.pad_h = nwh * ws - h;
  result.pad_w = nww * ws - w;
  result.orig_h = h;
  result.orig_w = w;
  return result;
}

Tensor window_merge(const WindowSet& set) {
  const std::size_t ws = set.win_size;
  require(set.windows.defined() && set.windows.rank() == 3 && ws >= 1 && set.orig_h > 0 &&
              set.orig_w > 0,
          ErrorCode::kCorruptWindowSet, "window_merge: malformed window set");
  const std::size_t nwh = ceil_div(set.orig_h, ws), nww = ceil_div(set.orig_w, ws);
  const std::size_t per_image = nwh * nww;
  require(set.win_area() == ws * ws, ErrorCode::kCorruptWindowSet,
          "window_merge: win_area does not match win_size");
  require(set.pad_h == nwh * ws - set.orig_h && set.pad_w == nww * ws - set.orig_w,
          ErrorCode::kCorruptWindowSet, "window_merge: padding inconsistent with original dims");
  require(set.num_windows() > 0 && set.num_windows() % per_image == 0,
          ErrorCode::kCorruptWindowSet,
          "window_merge: " + std::to_string(set.num_windows()) +
              " windows cannot tile images of " + std::to_string(set.orig_h) + "x" +
              std::to_string(set.orig_w));
  const std::size_t batch = set.num_windows() / per_image;
  const std::size_t c = set.channels(), h = set.orig_h, w = set.orig_w, area = ws * ws;
  std::vector<std::size_t> index(batch * c * h * w);
  std::size_t i = 0;
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          const std::size_t win = (b * nwh + y / ws) * nww + x / ws;
          const std::size_t pos = (y % ws) * ws + x % ws;
          index[i++] = (win * area + pos) * c + ch;
        }
  return ops::gather(set.windows, {batch, c, h, w}, std::move(index));
}

std::size_t dfe_bottleneck_width(std::size_t channels) { return std::max<std::size_t>(1, channels / 2); }

DfeParams DfeParams::create(std::size_t channels, Rng& rng) {
  const std::size_t mid = dfe_bottleneck_width(channels);
  DfeParams p;
  p.reduce_w = init::fan_in_uniform({mid, channels, 1, 1}, rng);
  p.reduce_b = init::bias_uniform(mid, channels, rng);
  p.mid_w = init::fan_in_uniform({mid, mid, 3, 3}, rng);
  p.mid_b = init::bias_uniform(mid, mid * 9, rng);
  p.expand_w = init::fan_in_uniform({channels, mid, 1, 1}, rng);
  p.expand_b = init::bias_uniform(channels, mid, rng);
  p.linear_w = init::fan_in_uniform({channels, channels, 1, 1}, rng);
  p.linear_b = init::bias_uniform(channels, channels, rng);
  return p;
}

Tensor dfe(const Tensor& x, const DfeParams& p) {
  require(x.defined() && x.rank() == 4, ErrorCode::kInvalidArgument, "dfe: expected NCHW input");
  const std::size_t c = x.dim(1);
  require(p.reduce_w.dim(1) == c && p.expand_w.dim(0) == c && p.linear_w.dim(0) == c &&
              p.linear_w.dim(1) == c && p.mid_w.dim(0) == p.expand_w.dim(1) &&
              p.reduce_w.dim(0) == p.mid_w.dim(1),
          ErrorCode::kInvalidConfig,
          "dfe: convolution and linear branches must both map " + std::to_string(c) +
              " channels to " + std::to_string(c));
  Tensor conv = ops::conv2d(x, p.reduce_w, p.reduce_b);
  conv = ops::conv2d(conv, p.mid_w, p.mid_b);
  conv = ops::conv2d(conv, p.expand_w, p.expand_b);
  Tensor lin = ops::conv2d(x, p.linear_w, p.linear_b);
  return ops::mul(conv, lin);
}

WindowSet ssc(const WindowSet& q, const WindowSet& v, const Tensor& bias) {
  require_compatible(q, v, "ssc");
  return spatial_correlation(q, v, bias, 1.0 / std::sqrt(static_cast<double>(q.channels())));
}

WindowSet csc(const WindowSet& q, const WindowSet& v, CscMode mode) {
  require_compatible(q, v, "csc");
  const std::size_t nw = q.num_windows(), n = q.win_area(), d = q.channels();
  const double inv = 1.0 / std::sqrt(static_cast<double>(n));
  if (mode == CscMode::kSpatial) return spatial_correlation(q, v, Tensor(), inv);

  auto qv = q.windows.data();
  auto vv = v.windows.data();
  std::vector<double> corr(nw * d * d, 0.0);
  std::vector<double> out(nw * n * d, 0.0);
  for (std::size_t w = 0; w < nw; ++w) {
    double* m = corr.data() + w * d * d;
    kernels::gemm_tn(qv.data() + w * n * d, vv.data() + w * n * d, m, d, n, d, inv);
    kernels::gemm_nn(vv.data() + w * n * d, m, out.data() + w * n * d, n, d, d);
  }
  Tensor qt = q.windows, vt = v.windows;
  WindowSet result = v;
  result.windows = make_result(
      v.windows.shape(), std::move(out), {qt, vt},
      [qt, vt, nw, n, d, inv, corr = std::move(corr)](const std::vector<double>& g) {
        auto* gq = grad_target(qt);
        auto* gv = grad_target(vt);
        auto qv = qt.data();
        auto vv = vt.data();
        std::vector<double> dm(d * d);
        for (std::size_t w = 0; w < nw; ++w) {
          const double* go = g.data() + w * n * d;
          const double* qw = qv.data() + w * n * d;
          const double* vw = vv.data() + w * n * d;
          std::fill(dm.begin(), dm.end(), 0.0);
          kernels::gemm_tn(vw, go, dm.data(), d, n, d);
          if (gv) {
            double* gvw = gv->data() + w * n * d;
            kernels::gemm_nt(go, corr.data() + w * d * d, gvw, n, d, d);
            kernels::gemm_nn(qw, dm.data(), gvw, n, d, d, inv);
          }
          if (gq) kernels::gemm_nt(vw, dm.data(), gq->data() + w * n * d, n, d, d, inv);
        }
      });
  return result;
}

std::vector<int> window_schedule(int base, const std::vector<double>& ratios) {
  require(base >= 2, ErrorCode::kInvalidConfig, "window_schedule: base must be at least 2");
  require(!ratios.empty(), ErrorCode::kInvalidConfig, "window_schedule: no ratios given");
  std::vector<int> sizes;
  sizes.reserve(ratios.size());
  for (double r : ratios) {
    require(r > 0.0, ErrorCode::kInvalidConfig, "window_schedule: ratios must be positive");
    const double product = base * r;
    const double rounded = std::round(product);
    require(std::abs(product - rounded) < 1e-9 && rounded >= 1.0, ErrorCode::kInvalidConfig,
            "window_schedule: base * ratio = " + std::to_string(product) + " is not integral");
    sizes.push_back(static_cast<int>(rounded));
  }
  return sizes;
}

}  // namespace dgn::intra_sim
