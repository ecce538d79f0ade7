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

// Slow reference implementations written directly from the defining
// formulas. They share no code with the library except the Rng.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "dgn/inter_sim.hpp"
#include "dgn/random.hpp"
#include "dgn/tensor.hpp"

namespace dgn::testing {

inline Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0,
                            bool requires_grad = false) {
  std::vector<double> v(shape_numel(shape));
  for (auto& e : v) e = lo + (hi - lo) * rng.uniform();
  return requires_grad ? Tensor::parameter(shape, std::move(v)) : Tensor::from(shape, std::move(v));
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return a.size() == b.size() ? m : INFINITY;
}

// One window, row-major [area, d]. out = (Q V^T / sqrt(d) + B) V.
inline std::vector<double> oracle_ssc(const std::vector<double>& q, const std::vector<double>& v,
                                      const std::vector<double>& bias, std::size_t area,
                                      std::size_t d) {
  std::vector<double> out(area * d, 0.0);
  for (std::size_t i = 0; i < area; ++i)
    for (std::size_t j = 0; j < area; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += q[i * d + c] * v[j * d + c];
      s = s / std::sqrt(double(d)) + (bias.empty() ? 0.0 : bias[i * area + j]);
      for (std::size_t c = 0; c < d; ++c) out[i * d + c] += s * v[j * d + c];
    }
  return out;
}

// out = V (Q^T V / sqrt(area)).
inline std::vector<double> oracle_csc_channel(const std::vector<double>& q,
                                              const std::vector<double>& v, std::size_t area,
                                              std::size_t d) {
  std::vector<double> m(d * d, 0.0);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) {
      for (std::size_t p = 0; p < area; ++p) m[a * d + b] += q[p * d + a] * v[p * d + b];
      m[a * d + b] /= std::sqrt(double(area));
    }
  std::vector<double> out(area * d, 0.0);
  for (std::size_t p = 0; p < area; ++p)
    for (std::size_t b = 0; b < d; ++b)
      for (std::size_t a = 0; a < d; ++a) out[p * d + b] += v[p * d + a] * m[a * d + b];
  return out;
}

// out = (Q V^T / sqrt(area)) V.
inline std::vector<double> oracle_csc_spatial(const std::vector<double>& q,
                                              const std::vector<double>& v, std::size_t area,
                                              std::size_t d) {
  std::vector<double> out(area * d, 0.0);
  for (std::size_t i = 0; i < area; ++i)
    for (std::size_t j = 0; j < area; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += q[i * d + c] * v[j * d + c];
      s /= std::sqrt(double(area));
      for (std::size_t c = 0; c < d; ++c) out[i * d + c] += s * v[j * d + c];
    }
  return out;
}

// Zero padded "same" convolution on one NCHW tensor.
inline std::vector<double> oracle_conv(const Tensor& x, const Tensor& w, const Tensor& b) {
  const std::size_t n = x.dim(0), ci = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const std::size_t co = w.dim(0), k = w.dim(2);
  const long r = long(k / 2);
  std::vector<double> out(n * co * h * wd, 0.0);
  for (std::size_t bn = 0; bn < n; ++bn)
    for (std::size_t o = 0; o < co; ++o)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t xx = 0; xx < wd; ++xx) {
          double s = b.defined() ? b.data()[o] : 0.0;
          for (std::size_t i = 0; i < ci; ++i)
            for (std::size_t ky = 0; ky < k; ++ky)
              for (std::size_t kx = 0; kx < k; ++kx) {
                const long yy = long(y) + long(ky) - r, xs = long(xx) + long(kx) - r;
                if (yy < 0 || xs < 0 || yy >= long(h) || xs >= long(wd)) continue;
                s += w.data()[((o * ci + i) * k + ky) * k + kx] * x.at(bn, i, yy, xs);
              }
          out[((bn * co + o) * h + y) * wd + xx] = s;
        }
  return out;
}

// Sparse non-local attention re-derived step by step: embed, hash every
// round, sort by (bucket, feature vector, position), chunk, softmax, average.
inline std::vector<double> oracle_sparse_attention(const Tensor& x, const inter_sim::LshConfig& cfg,
                                                   const inter_sim::NonLocalParams& params) {
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3), plane = h * w;
  const auto embed = oracle_conv(x, params.proj_w, params.proj_b);
  std::vector<double> out(x.data().begin(), x.data().end());
  const std::size_t half = std::size_t(cfg.num_buckets / 2);
  for (std::size_t b = 0; b < n; ++b) {
    auto e = [&](std::size_t p, std::size_t ch) { return embed[(b * c + ch) * plane + p]; };
    std::vector<double> mean(plane * c, 0.0);
    for (int r = 0; r < cfg.num_rounds; ++r) {
      Rng rng(mix_seed(cfg.seed, std::uint64_t(r)));
      std::vector<double> rot(c * half);
      for (auto& v : rot) v = rng.normal();
      std::vector<int> bucket(plane, 0);
      for (std::size_t p = 0; p < plane; ++p) {
        double norm = 0.0;
        for (std::size_t ch = 0; ch < c; ++ch) norm += e(p, ch) * e(p, ch);
        if (norm == 0.0) continue;
        norm = std::sqrt(norm);
        std::vector<double> proj(2 * half, 0.0);
        for (std::size_t j = 0; j < half; ++j) {
          for (std::size_t ch = 0; ch < c; ++ch) proj[j] += e(p, ch) / norm * rot[ch * half + j];
          proj[j + half] = -proj[j];
        }
        bucket[p] = int(std::max_element(proj.begin(), proj.end()) - proj.begin());
      }
      std::vector<std::size_t> order(plane);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t bb) {
        if (bucket[a] != bucket[bb]) return bucket[a] < bucket[bb];
        for (std::size_t ch = 0; ch < c; ++ch)
          if (e(a, ch) != e(bb, ch)) return e(a, ch) < e(bb, ch);
        return a < bb;
      });
      const std::size_t cs = std::size_t(cfg.chunk_size);
      for (std::size_t start = 0; start < plane; start += cs) {
        const std::size_t end = std::min(plane, start + cs);
        for (std::size_t i = start; i < end; ++i) {
          std::vector<double> s;
          for (std::size_t j = start; j < end; ++j) {
            double dot = 0.0;
            for (std::size_t ch = 0; ch < c; ++ch) dot += e(order[i], ch) * e(order[j], ch);
            s.push_back(dot / std::sqrt(double(c)));
          }
          const double mx = *std::max_element(s.begin(), s.end());
          double z = 0.0;
          for (auto& v : s) z += (v = std::exp(v - mx));
          for (std::size_t j = start; j < end; ++j)
            for (std::size_t ch = 0; ch < c; ++ch)
              mean[order[i] * c + ch] += s[j - start] / z * e(order[j], ch) / cfg.num_rounds;
        }
      }
    }
    for (std::size_t p = 0; p < plane; ++p)
      for (std::size_t ch = 0; ch < c; ++ch) out[(b * c + ch) * plane + p] += mean[p * c + ch];
  }
  return out;
}

// Mean SSIM of two single-channel planes, evaluated pixel by pixel.
inline double oracle_ssim_plane(const std::vector<double>& a, const std::vector<double>& b,
                                std::size_t h, std::size_t w) {
  const int k = 11;
  const double sigma = 1.5, c1 = 1e-4, c2 = 9e-4;
  double g[11][11], total = 0.0;
  for (int y = 0; y < k; ++y)
    for (int x = 0; x < k; ++x) {
      g[y][x] = std::exp(-((y - 5) * (y - 5) + (x - 5) * (x - 5)) / (2 * sigma * sigma));
      total += g[y][x];
    }
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t y0 = 0; y0 + k <= h; ++y0)
    for (std::size_t x0 = 0; x0 + k <= w; ++x0) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int y = 0; y < k; ++y)
        for (int x = 0; x < k; ++x) {
          const double wt = g[y][x] / total;
          const double va = a[(y0 + y) * w + x0 + x], vb = b[(y0 + y) * w + x0 + x];
          ma += wt * va;
          mb += wt * vb;
          saa += wt * va * va;
          sbb += wt * vb * vb;
          sab += wt * va * vb;
        }
      const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
      acc += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  return acc / double(count);
}

// AID for one flattened map pair.
inline double oracle_aid(std::vector<double> p, std::vector<double> t) {
  auto normalize = [](std::vector<double>& d) {
    std::vector<double> s = d;
    std::sort(s.begin(), s.end());
    const double med = s[(s.size() - 1) / 2];
    double mad = 0.0;
    for (double v : d) mad += std::abs(v - med);
    mad /= double(d.size());
    if (mad < 1e-8) return false;
    for (double& v : d) v = (v - med) / mad;
    return true;
  };
  if (!normalize(p) || !normalize(t)) return 0.0;
  double l = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) l += std::abs(p[i] - t[i]);
  return l / double(p.size());
}

inline int oracle_hamming(std::uint64_t a, std::uint64_t b) {
  int d = 0;
  for (int i = 0; i < 64; ++i) d += int(((a >> i) & 1u) != ((b >> i) & 1u));
  return d;
}

}  // namespace dgn::testing
