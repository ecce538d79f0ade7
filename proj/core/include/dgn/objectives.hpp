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

#include <string>

#include "dgn/tensor.hpp"

// Training objectives and full-reference quality metrics.
namespace dgn::objectives {

/// Mean absolute error (scalar, differentiable).
Tensor image_loss(const Tensor& restored, const Tensor& target);

/// Affine-invariant depth loss on channel 0 of [B, C, H, W] inputs. Each
/// map is shifted by its median (lower middle element for even sizes) and
/// scaled by its mean absolute deviation before an L1 comparison. An image
/// whose deviation falls below 1e-8 on either side contributes zero.
Tensor aid_loss(const Tensor& prediction, const Tensor& target);

inline constexpr double kAidScaleGuard = 1e-8;

struct LossReport {
  double image_loss = 0.0;
  double depth_l1 = 0.0;
  double depth_aid = 0.0;
  double total = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

struct TotalLoss {
  Tensor total;  // differentiable scalar
  LossReport report;
};

/// image_l1(y, x) + lambda1 * l1(y_d, x_d) + lambda2 * aid(y_d, aid_reference).
/// The depth terms are skipped (reported as 0) when `y_d` is undefined.
/// `aid_reference` defaults to `x_d` when left undefined.
TotalLoss total_loss(const Tensor& y, const Tensor& x, const Tensor& y_d, const Tensor& x_d,
                     double lambda1, double lambda2, const Tensor& aid_reference = Tensor());

inline constexpr double kPsnrCap = 100.0;

/// 10 log10(max^2 / MSE) in dB; identical inputs give kPsnrCap.
double psnr(const Tensor& a, const Tensor& b, double max_val = 1.0);

/// Mean SSIM over the valid region of an 11x11 Gaussian window (sigma 1.5,
/// K1 = 0.01, K2 = 0.03, dynamic range 1). RGB inputs are converted to luma
/// (0.299, 0.587, 0.114) first; batches are averaged.
double ssim(const Tensor& a, const Tensor& b);

inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

/// One line of a metric report: "<id>\t<psnr>\t<ssim>" with 4 decimals.
std::string format_metric_row(const std::string& id, double psnr_db, double ssim_value);

}  // namespace dgn::objectives
