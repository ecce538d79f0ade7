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

#include "dgn/objectives.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "dgn/error.hpp"
#include "dgn/ops.hpp"

namespace dgn::objectives {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.defined() && b.defined() && a.shape() == b.shape(), ErrorCode::kInvalidArgument,
          std::string(op) + ": shape mismatch");
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Median/MAD normalization of one channel-0 plane.
struct Normalized {
  std::vector<double> value;   // (d - median) / mad
  std::vector<double> shifted; // d - median
  std::size_t median_index = 0;
  double mad = 0.0;
};

Normalized normalize(const double* d, std::size_t n) {
  Normalized out;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t mid = (n - 1) / 2;
  std::nth_element(order.begin(), order.begin() + static_cast<long>(mid), order.end(),
                   [d](std::size_t a, std::size_t b) { return d[a] < d[b] || (d[a] == d[b] && a < b); });
  out.median_index = order[mid];
  const double median = d[out.median_index];
  out.shifted.resize(n);
  double mad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.shifted[i] = d[i] - median;
    mad += std::abs(out.shifted[i]);
  }
  out.mad = mad / static_cast<double>(n);
  out.value.resize(n);
  if (out.mad >= kAidScaleGuard)
    for (std::size_t i = 0; i < n; ++i) out.value[i] = out.shifted[i] / out.mad;
  return out;
}

// Pushes dL/d(normalized) back to the raw plane.
void normalize_backward(const Normalized& norm, const std::vector<double>& g_norm, double* g_raw) {
  const std::size_t n = g_norm.size();
  const double s = norm.mad;
  double dot = 0.0;
  for (std::size_t i = 0; i < n; ++i) dot += g_norm[i] * norm.shifted[i];
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double g_shift = g_norm[i] / s - dot / (s * s) * sign(norm.shifted[i]) / static_cast<double>(n);
    g_raw[i] += g_shift;
    total += g_shift;
  }
  g_raw[norm.median_index] -= total;
}

std::array<double, kSsimWindow> gaussian_kernel() {
  std::array<double, kSsimWindow> k{};
  const double c = (kSsimWindow - 1) / 2.0;
  double total = 0.0;
  for (std::size_t i = 0; i < kSsimWindow; ++i) {
    const double d = static_cast<double>(i) - c;
    k[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    total += k[i];
  }
  for (auto& v : k) v /= total;
  return k;
}

// Channel-combined plane of image n: luma for 3 channels, identity for 1.
std::vector<double> luma_plane(const Tensor& t, std::size_t n) {
  const std::size_t c = t.dim(1), h = t.dim(2), w = t.dim(3), plane = h * w;
  std::vector<double> out(plane);
  auto v = t.data();
  if (c == 1) {
    std::copy_n(v.data() + n * plane, plane, out.data());
    return out;
  }
  require(c == 3, ErrorCode::kInvalidArgument, "ssim: expected 1 or 3 channels");
  const double* r = v.data() + (n * 3 + 0) * plane;
  const double* g = v.data() + (n * 3 + 1) * plane;
  const double* b = v.data() + (n * 3 + 2) * plane;
  for (std::size_t i = 0; i < plane; ++i) out[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
  return out;
}

// Separable "valid" Gaussian filtering.
std::vector<double> filter_valid(const std::vector<double>& src, std::size_t h, std::size_t w,
                                 const std::array<double, kSsimWindow>& k) {
  const std::size_t oh = h - kSsimWindow + 1, ow = w - kSsimWindow + 1;
  std::vector<double> rows(h * ow, 0.0);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t i = 0; i < kSsimWindow; ++i) s += k[i] * src[y * w + x + i];
      rows[y * ow + x] = s;
    }
  std::vector<double> out(oh * ow, 0.0);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t i = 0; i < kSsimWindow; ++i) s += k[i] * rows[(y + i) * ow + x];
      out[y * ow + x] = s;
    }
  return out;
}

}  // namespace

Tensor image_loss(const Tensor& restored, const Tensor& target) {
  require_same_shape(restored, target, "image_loss");
  return ops::l1_loss(restored, target);
}

Tensor aid_loss(const Tensor& prediction, const Tensor& target) {
  require_same_shape(prediction, target, "aid_loss");
  require(prediction.rank() == 4 && prediction.dim(2) * prediction.dim(3) > 0,
          ErrorCode::kInvalidArgument, "aid_loss: expected non-empty [B, C, H, W] tensors");
  const std::size_t batch = prediction.dim(0), c = prediction.dim(1);
  const std::size_t plane = prediction.dim(2) * prediction.dim(3);

  std::vector<Normalized> pred_norm, target_norm;
  std::vector<bool> active(batch, false);
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    pred_norm.push_back(normalize(prediction.data().data() + b * c * plane, plane));
    target_norm.push_back(normalize(target.data().data() + b * c * plane, plane));
    if (pred_norm[b].mad < kAidScaleGuard || target_norm[b].mad < kAidScaleGuard) continue;
    active[b] = true;
    double s = 0.0;
    for (std::size_t i = 0; i < plane; ++i)
      s += std::abs(pred_norm[b].value[i] - target_norm[b].value[i]);
    loss += s / static_cast<double>(plane);
  }
  loss /= static_cast<double>(batch);

  return make_result({}, {loss}, {prediction, target},
                     [=, pred_norm = std::move(pred_norm), target_norm = std::move(target_norm),
                      active = std::move(active)](const std::vector<double>& g) {
                       auto* gp = grad_target(prediction);
                       auto* gt = grad_target(target);
                       const double scale = g[0] / static_cast<double>(batch * plane);
                       std::vector<double> g_norm(plane);
                       for (std::size_t b = 0; b < batch; ++b) {
                         if (!active[b]) continue;
                         for (std::size_t i = 0; i < plane; ++i)
                           g_norm[i] = scale * sign(pred_norm[b].value[i] - target_norm[b].value[i]);
                         if (gp) normalize_backward(pred_norm[b], g_norm, gp->data() + b * c * plane);
                         if (gt) {
                           for (auto& v : g_norm) v = -v;
                           normalize_backward(target_norm[b], g_norm, gt->data() + b * c * plane);
                         }
                       }
                     });
}

TotalLoss total_loss(const Tensor& y, const Tensor& x, const Tensor& y_d, const Tensor& x_d,
                     double lambda1, double lambda2, const Tensor& aid_reference) {
  require(lambda1 >= 0.0 && lambda2 >= 0.0, ErrorCode::kInvalidConfig,
          "total_loss: loss weights must be non-negative");
  TotalLoss out;
  const Tensor image = image_loss(y, x);
  Tensor depth_l1, depth_aid;
  if (y_d.defined()) {
    require(x_d.defined(), ErrorCode::kInvalidArgument, "total_loss: missing depth target");
    depth_l1 = ops::l1_loss(y_d, x_d);
    depth_aid = aid_loss(y_d, aid_reference.defined() ? aid_reference : x_d);
  }
  out.total = ops::weighted_sum({image, depth_l1, depth_aid}, {1.0, lambda1, lambda2});
  out.report.image_loss = image.item();
  out.report.depth_l1 = depth_l1.defined() ? depth_l1.item() : 0.0;
  out.report.depth_aid = depth_aid.defined() ? depth_aid.item() : 0.0;
  out.report.lambda1 = lambda1;
  out.report.lambda2 = lambda2;
  out.report.total = out.total.item();
  return out;
}

double psnr(const Tensor& a, const Tensor& b, double max_val) {
  require_same_shape(a, b, "psnr");
  require(max_val > 0.0, ErrorCode::kInvalidArgument, "psnr: max_val must be positive");
  auto av = a.data();
  auto bv = b.data();
  double mse = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    mse += d * d;
  }
  mse /= static_cast<double>(av.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(max_val * max_val / mse));
}

double ssim(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "ssim");
  require(a.rank() == 4, ErrorCode::kInvalidArgument, "ssim: expected [B, C, H, W]");
  const std::size_t h = a.dim(2), w = a.dim(3);
  require(h >= kSsimWindow && w >= kSsimWindow, ErrorCode::kInvalidArgument,
          "ssim: images must be at least 11x11");
  constexpr double kC1 = 0.01 * 0.01, kC2 = 0.03 * 0.03;
  const auto k = gaussian_kernel();
  double total = 0.0;
  for (std::size_t n = 0; n < a.dim(0); ++n) {
    const auto pa = luma_plane(a, n);
    const auto pb = luma_plane(b, n);
    std::vector<double> aa(pa.size()), bb(pa.size()), ab(pa.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
      aa[i] = pa[i] * pa[i];
      bb[i] = pb[i] * pb[i];
      ab[i] = pa[i] * pb[i];
    }
    const auto mu_a = filter_valid(pa, h, w, k);
    const auto mu_b = filter_valid(pb, h, w, k);
    const auto e_aa = filter_valid(aa, h, w, k);
    const auto e_bb = filter_valid(bb, h, w, k);
    const auto e_ab = filter_valid(ab, h, w, k);
    double sum = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double var_a = e_aa[i] - mu_a[i] * mu_a[i];
      const double var_b = e_bb[i] - mu_b[i] * mu_b[i];
      const double cov = e_ab[i] - mu_a[i] * mu_b[i];
      sum += ((2 * mu_a[i] * mu_b[i] + kC1) * (2 * cov + kC2)) /
             ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + kC1) * (var_a + var_b + kC2));
    }
    total += sum / static_cast<double>(mu_a.size());
  }
  return total / static_cast<double>(a.dim(0));
}

std::string format_metric_row(const std::string& id, double psnr_db, double ssim_value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "\t%.4f\t%.4f", psnr_db, ssim_value);
  return id + buf;
}

}  // namespace dgn::objectives
