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

#include "dgn/ops.hpp"

#include <algorithm>
#include <cmath>

#include "dgn/error.hpp"

namespace dgn::ops {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.shape() == b.shape(), ErrorCode::kInvalidArgument,
          std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
              shape_string(b.shape()));
}

void require_rank4(const Tensor& x, const char* op) {
  require(x.defined() && x.rank() == 4, ErrorCode::kInvalidArgument,
          std::string(op) + ": expected a rank-4 NCHW tensor");
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Calls fn(ky, kx, dy, dx, y0, y1, x0, x1): output rows [y0, y1) and columns
// [x0, x1) read input at (y + dy, x + dx) without leaving the image.
template <typename Fn>
void for_each_tap(std::size_t k, std::size_t h, std::size_t w, Fn&& fn) {
  const long pad = static_cast<long>(k / 2);
  const long lh = static_cast<long>(h), lw = static_cast<long>(w);
  for (std::size_t ky = 0; ky < k; ++ky) {
    const long dy = static_cast<long>(ky) - pad;
    const long y0 = std::max(0L, -dy), y1 = std::min(lh, lh - dy);
    for (std::size_t kx = 0; kx < k; ++kx) {
      const long dx = static_cast<long>(kx) - pad;
      const long x0 = std::max(0L, -dx), x1 = std::min(lw, lw - dx);
      if (y0 >= y1 || x0 >= x1) continue;
      fn(ky, kx, dy, dx, y0, y1, x0, x1);
    }
  }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_result(a.shape(), std::move(out), {a, b}, [a, b](const std::vector<double>& g) {
    if (auto* ga = grad_target(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    if (auto* gb = grad_target(b))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i];
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return make_result(a.shape(), std::move(out), {a, b}, [a, b](const std::vector<double>& g) {
    if (auto* ga = grad_target(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    if (auto* gb = grad_target(b))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_result(a.shape(), std::move(out), {a, b}, [a, b](const std::vector<double>& g) {
    auto av = a.data();
    auto bv = b.data();
    if (auto* ga = grad_target(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * bv[i];
    if (auto* gb = grad_target(b))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * av[i];
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.numel());
  auto av = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * factor;
  return make_result(a.shape(), std::move(out), {a}, [a, factor](const std::vector<double>& g) {
    if (auto* ga = grad_target(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * factor;
  });
}

Tensor weighted_sum(const std::vector<Tensor>& terms, const std::vector<double>& weights) {
  require(terms.size() == weights.size(), ErrorCode::kInvalidArgument,
          "weighted_sum: term/weight count mismatch");
  double total = 0.0;
  std::vector<Tensor> inputs;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (!terms[i].defined()) continue;
    total += weights[i] * terms[i].item();
    inputs.push_back(terms[i]);
  }
  return make_result({}, {total}, inputs, [terms, weights](const std::vector<double>& g) {
    for (std::size_t i = 0; i < terms.size(); ++i) {
      if (!terms[i].defined()) continue;
      if (auto* gt = grad_target(terms[i])) (*gt)[0] += g[0] * weights[i];
    }
  });
}

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank4(x, "conv2d");
  require(weight.defined() && weight.rank() == 4 && weight.dim(2) == weight.dim(3) &&
              weight.dim(2) % 2 == 1,
          ErrorCode::kInvalidArgument, "conv2d: weight must be [C_out, C_in, k, k] with odd k");
  require(weight.dim(1) == x.dim(1), ErrorCode::kInvalidArgument,
          "conv2d: input has " + std::to_string(x.dim(1)) + " channels, weight expects " +
              std::to_string(weight.dim(1)));
  const std::size_t n_batch = x.dim(0), c_in = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t c_out = weight.dim(0), k = weight.dim(2);
  if (bias.defined())
    require(bias.numel() == c_out, ErrorCode::kInvalidArgument, "conv2d: bias size mismatch");

  const std::size_t plane = h * w;
  std::vector<double> out(n_batch * c_out * plane, 0.0);
  auto xv = x.data();
  auto wv = weight.data();

  for (std::size_t n = 0; n < n_batch; ++n) {
    for (std::size_t co = 0; co < c_out; ++co) {
      double* out_plane = out.data() + (n * c_out + co) * plane;
      if (bias.defined()) {
        const double b = bias.data()[co];
        for (std::size_t i = 0; i < plane; ++i) out_plane[i] = b;
      }
      for (std::size_t ci = 0; ci < c_in; ++ci) {
        const double* in_plane = xv.data() + (n * c_in + ci) * plane;
        const double* kernel = wv.data() + (co * c_in + ci) * k * k;
        for_each_tap(k, h, w, [&](std::size_t ky, std::size_t kx, long dy, long dx, long y0, long y1, long x0,
                         long x1) {
          const double wk = kernel[ky * k + kx];
          for (long y = y0; y < y1; ++y) {
            double* orow = out_plane + y * w;
            const double* irow = in_plane + (y + dy) * static_cast<long>(w) + dx;
            for (long xx = x0; xx < x1; ++xx) orow[xx] += wk * irow[xx];
          }
        });
      }
    }
  }

  Shape out_shape{n_batch, c_out, h, w};
  return make_result(out_shape, std::move(out), {x, weight, bias}, [=](const std::vector<double>& g) {
    auto* gx = grad_target(x);
    auto* gw = grad_target(weight);
    auto* gb = bias.defined() ? grad_target(bias) : nullptr;
    auto xv = x.data();
    auto wv = weight.data();
    for (std::size_t n = 0; n < n_batch; ++n) {
      for (std::size_t co = 0; co < c_out; ++co) {
        const double* g_plane = g.data() + (n * c_out + co) * plane;
        if (gb) {
          double s = 0.0;
          for (std::size_t i = 0; i < plane; ++i) s += g_plane[i];
          (*gb)[co] += s;
        }
        for (std::size_t ci = 0; ci < c_in; ++ci) {
          const double* in_plane = xv.data() + (n * c_in + ci) * plane;
          double* gin_plane = gx ? gx->data() + (n * c_in + ci) * plane : nullptr;
          const double* kernel = wv.data() + (co * c_in + ci) * k * k;
          double* gkernel = gw ? gw->data() + (co * c_in + ci) * k * k : nullptr;
          for_each_tap(k, h, w, [&](std::size_t ky, std::size_t kx, long dy, long dx, long y0, long y1,
                           long x0, long x1) {
            const double wk = kernel[ky * k + kx];
            double acc = 0.0;
            for (long y = y0; y < y1; ++y) {
              const double* grow = g_plane + y * w;
              const long offset = (y + dy) * static_cast<long>(w) + dx;
              if (gin_plane) {
                double* girow = gin_plane + offset;
                for (long xx = x0; xx < x1; ++xx) girow[xx] += wk * grow[xx];
              }
              if (gkernel) {
                const double* irow = in_plane + offset;
                for (long xx = x0; xx < x1; ++xx) acc += grow[xx] * irow[xx];
              }
            }
            if (gkernel) gkernel[ky * k + kx] += acc;
          });
        }
      }
    }
  });
}

Tensor pixel_shuffle(const Tensor& x, std::size_t factor) {
  require_rank4(x, "pixel_shuffle");
  const std::size_t r2 = factor * factor;
  require(factor >= 1 && x.dim(1) % r2 == 0, ErrorCode::kInvalidArgument,
          "pixel_shuffle: channels must be divisible by factor^2");
  const std::size_t n_batch = x.dim(0), c = x.dim(1) / r2, h = x.dim(2), w = x.dim(3);
  const std::size_t oh = h * factor, ow = w * factor;
  std::vector<std::size_t> index(n_batch * c * oh * ow);
  std::size_t i = 0;
  for (std::size_t n = 0; n < n_batch; ++n)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t xx = 0; xx < ow; ++xx) {
          const std::size_t src_c = ch * r2 + (y % factor) * factor + (xx % factor);
          index[i++] = ((n * x.dim(1) + src_c) * h + y / factor) * w + xx / factor;
        }
  return gather(x, {n_batch, c, oh, ow}, std::move(index));
}

Tensor slice_channels(const Tensor& x, std::size_t begin, std::size_t count) {
  require_rank4(x, "slice_channels");
  require(begin + count <= x.dim(1) && count > 0, ErrorCode::kInvalidArgument,
          "slice_channels: range out of bounds");
  const std::size_t n_batch = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  std::vector<std::size_t> index(n_batch * count * plane);
  std::size_t i = 0;
  for (std::size_t n = 0; n < n_batch; ++n)
    for (std::size_t ch = 0; ch < count; ++ch)
      for (std::size_t p = 0; p < plane; ++p) index[i++] = (n * c + begin + ch) * plane + p;
  return gather(x, {n_batch, count, x.dim(2), x.dim(3)}, std::move(index));
}

Tensor concat_channels(const std::vector<Tensor>& parts) {
  require(!parts.empty(), ErrorCode::kInvalidArgument, "concat_channels: no inputs");
  for (const auto& p : parts) require_rank4(p, "concat_channels");
  const std::size_t n_batch = parts[0].dim(0), h = parts[0].dim(2), w = parts[0].dim(3);
  const std::size_t plane = h * w;
  std::size_t total_c = 0;
  for (const auto& p : parts) {
    require(p.dim(0) == n_batch && p.dim(2) == h && p.dim(3) == w, ErrorCode::kInvalidArgument,
            "concat_channels: batch/spatial mismatch");
    total_c += p.dim(1);
  }
  std::vector<double> out(n_batch * total_c * plane);
  for (std::size_t n = 0; n < n_batch; ++n) {
    std::size_t c_offset = 0;
    for (const auto& p : parts) {
      const std::size_t pc = p.dim(1);
      auto src = p.data().subspan(n * pc * plane, pc * plane);
      std::copy(src.begin(), src.end(), out.begin() + (n * total_c + c_offset) * plane);
      c_offset += pc;
    }
  }
  return make_result({n_batch, total_c, h, w}, std::move(out), parts,
                     [parts, n_batch, total_c, plane](const std::vector<double>& g) {
                       std::size_t c_offset = 0;
                       for (const auto& p : parts) {
                         const std::size_t pc = p.dim(1);
                         if (auto* gp = grad_target(p)) {
                           for (std::size_t n = 0; n < n_batch; ++n) {
                             const double* src = g.data() + (n * total_c + c_offset) * plane;
                             double* dst = gp->data() + n * pc * plane;
                             for (std::size_t i = 0; i < pc * plane; ++i) dst[i] += src[i];
                           }
                         }
                         c_offset += pc;
                       }
                     });
}

Tensor layer_norm_channels(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require_rank4(x, "layer_norm_channels");
  const std::size_t n_batch = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  require(gamma.numel() == c && beta.numel() == c, ErrorCode::kInvalidArgument,
          "layer_norm_channels: affine parameter size mismatch");
  std::vector<double> out(x.numel());
  std::vector<double> normalized(x.numel());
  std::vector<double> inv_std(n_batch * plane);
  auto xv = x.data();
  auto gv = gamma.data();
  auto bv = beta.data();
  for (std::size_t n = 0; n < n_batch; ++n) {
    for (std::size_t p = 0; p < plane; ++p) {
      double mean = 0.0;
      for (std::size_t ch = 0; ch < c; ++ch) mean += xv[(n * c + ch) * plane + p];
      mean /= static_cast<double>(c);
      double var = 0.0;
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double d = xv[(n * c + ch) * plane + p] - mean;
        var += d * d;
      }
      var /= static_cast<double>(c);
      const double is = 1.0 / std::sqrt(var + eps);
      inv_std[n * plane + p] = is;
      for (std::size_t ch = 0; ch < c; ++ch) {
        const std::size_t idx = (n * c + ch) * plane + p;
        normalized[idx] = (xv[idx] - mean) * is;
        out[idx] = normalized[idx] * gv[ch] + bv[ch];
      }
    }
  }
  return make_result(x.shape(), std::move(out), {x, gamma, beta},
                     [=, normalized = std::move(normalized),
                      inv_std = std::move(inv_std)](const std::vector<double>& g) {
                       auto* gx = grad_target(x);
                       auto* gg = grad_target(gamma);
                       auto* gb = grad_target(beta);
                       auto gv = gamma.data();
                       std::vector<double> dxhat(c);
                       for (std::size_t n = 0; n < n_batch; ++n) {
                         for (std::size_t p = 0; p < plane; ++p) {
                           double sum_d = 0.0, sum_dx = 0.0;
                           for (std::size_t ch = 0; ch < c; ++ch) {
                             const std::size_t idx = (n * c + ch) * plane + p;
                             if (gg) (*gg)[ch] += g[idx] * normalized[idx];
                             if (gb) (*gb)[ch] += g[idx];
                             dxhat[ch] = g[idx] * gv[ch];
                             sum_d += dxhat[ch];
                             sum_dx += dxhat[ch] * normalized[idx];
                           }
                           if (!gx) continue;
                           const double is = inv_std[n * plane + p];
                           const double inv_c = 1.0 / static_cast<double>(c);
                           for (std::size_t ch = 0; ch < c; ++ch) {
                             const std::size_t idx = (n * c + ch) * plane + p;
                             (*gx)[idx] += is * (dxhat[ch] - inv_c * sum_d -
                                                 normalized[idx] * inv_c * sum_dx);
                           }
                         }
                       }
                     });
}

Tensor gather(const Tensor& x, const Shape& out_shape, std::vector<std::size_t> index) {
  require(index.size() == shape_numel(out_shape), ErrorCode::kInvalidArgument,
          "gather: index count does not match output shape");
  std::vector<double> out(index.size());
  auto xv = x.data();
  for (std::size_t i = 0; i < index.size(); ++i) {
    require(index[i] < xv.size(), ErrorCode::kInvalidArgument, "gather: index out of range");
    out[i] = xv[index[i]];
  }
  return make_result(out_shape, std::move(out), {x},
                     [x, index = std::move(index)](const std::vector<double>& g) {
                       if (auto* gx = grad_target(x))
                         for (std::size_t i = 0; i < index.size(); ++i) (*gx)[index[i]] += g[i];
                     });
}

Tensor l1_loss(const Tensor& prediction, const Tensor& target) {
  require_same_shape(prediction, target, "l1_loss");
  const std::size_t n = prediction.numel();
  require(n > 0, ErrorCode::kInvalidArgument, "l1_loss: empty input");
  auto pv = prediction.data();
  auto tv = target.data();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += std::abs(pv[i] - tv[i]);
  return make_result({}, {total / static_cast<double>(n)}, {prediction, target},
                     [prediction, target, n](const std::vector<double>& g) {
                       auto pv = prediction.data();
                       auto tv = target.data();
                       const double s = g[0] / static_cast<double>(n);
                       auto* gp = grad_target(prediction);
                       auto* gt = grad_target(target);
                       for (std::size_t i = 0; i < n; ++i) {
                         const double d = sign(pv[i] - tv[i]) * s;
                         if (gp) (*gp)[i] += d;
                         if (gt) (*gt)[i] -= d;
                       }
                     });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  return make_result({}, {total}, {x}, [x](const std::vector<double>& g) {
    if (auto* gx = grad_target(x))
      for (auto& v : *gx) v += g[0];
  });
}

}  // namespace dgn::ops
