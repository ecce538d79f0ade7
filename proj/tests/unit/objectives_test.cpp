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

#include <gtest/gtest.h>

#include <cmath>

#include "dgn/objectives.hpp"
#include "dgn/ops.hpp"
#include "expect_error.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

namespace dgn {
namespace {

using namespace objectives;
using testing::random_tensor;

Tensor offset(const Tensor& t, double delta) {
  std::vector<double> v(t.data().begin(), t.data().end());
  for (auto& e : v) e += delta;
  return Tensor::from(t.shape(), std::move(v));
}

Tensor affine(const Tensor& t, double a, double b) {
  std::vector<double> v(t.data().begin(), t.data().end());
  for (auto& e : v) e = a * e + b;
  return Tensor::from(t.shape(), std::move(v));
}

TEST(ImageLoss, Examples) {
  Rng rng(1);
  const Tensor x = random_tensor({2, 3, 5, 5}, rng);
  EXPECT_EQ(image_loss(x, x).item(), 0.0);
  EXPECT_NEAR(image_loss(offset(x, 0.5), x).item(), 0.5, 1e-12);
  const Tensor y = random_tensor({2, 3, 5, 5}, rng);
  double want = 0.0;
  for (std::size_t i = 0; i < x.numel(); ++i) want += std::abs(y.data()[i] - x.data()[i]);
  EXPECT_NEAR(image_loss(y, x).item(), want / double(x.numel()), 1e-9);
  EXPECT_DGN_ERROR(image_loss(x, Tensor::zeros({2, 3, 5, 4})), ErrorCode::kInvalidArgument);
}

TEST(AidLoss, IdenticalAndAffine) {
  Rng rng(2);
  const Tensor t = random_tensor({2, 3, 6, 7}, rng);
  EXPECT_EQ(aid_loss(t, t).item(), 0.0);
  EXPECT_NEAR(aid_loss(affine(t, 2.0, 5.0), t).item(), 0.0, 1e-7);
}

TEST(AidLoss, AffineInvarianceOfEitherArgument) {
  Rng rng(3);
  const Tensor p = random_tensor({2, 3, 5, 5}, rng), t = random_tensor({2, 3, 5, 5}, rng);
  const double base = aid_loss(p, t).item();
  for (auto [a, b] : {std::pair{0.5, -3.0}, {7.0, 0.25}, {1e-3, 100.0}}) {
    EXPECT_NEAR(aid_loss(affine(p, a, b), t).item(), base, 1e-7);
    EXPECT_NEAR(aid_loss(p, affine(t, a, b)).item(), base, 1e-7);
  }
}

TEST(AidLoss, MatchesScalarOracle) {
  Rng rng(4);
  const Tensor p = random_tensor({3, 3, 4, 6}, rng), t = random_tensor({3, 3, 4, 6}, rng);
  double want = 0.0;
  for (std::size_t b = 0; b < 3; ++b) {
    const auto plane = [&](const Tensor& x) {
      auto first = x.data().begin() + b * 3 * 24;
      return std::vector<double>(first, first + 24);
    };
    want += testing::oracle_aid(plane(p), plane(t));
  }
  EXPECT_NEAR(aid_loss(p, t).item(), want / 3.0, 1e-7);
}

TEST(AidLoss, ConstantMapContributesZero) {
  Rng rng(5);
  const Tensor p = random_tensor({1, 3, 4, 4}, rng);
  EXPECT_EQ(aid_loss(p, Tensor::full({1, 3, 4, 4}, 0.3)).item(), 0.0);
  EXPECT_DGN_ERROR(aid_loss(p, Tensor::zeros({1, 3, 4, 5})), ErrorCode::kInvalidArgument);
}

TEST(AidLoss, GradientAwayFromTies) {
  Rng rng(6);
  Tensor p = random_tensor({2, 3, 5, 5}, rng, -1, 1, true);
  Tensor t = random_tensor({2, 3, 5, 5}, rng, -1, 1, true);
  const auto r = testing::gradcheck([&] { return aid_loss(p, t); }, {{"pred", p}, {"target", t}});
  EXPECT_LE(r.max_rel_error, 1e-4) << r.worst;
}

TEST(TotalLoss, Composition) {
  Rng rng(7);
  const Tensor y = random_tensor({1, 3, 6, 6}, rng), x = random_tensor({1, 3, 6, 6}, rng);
  const Tensor yd = random_tensor({1, 3, 6, 6}, rng), xd = random_tensor({1, 3, 6, 6}, rng);
  const auto zero = total_loss(x, x, xd, xd, 0.01, 0.01);
  EXPECT_EQ(zero.report.total, 0.0);
  const auto plain = total_loss(y, x, yd, xd, 0.0, 0.0);
  EXPECT_EQ(plain.report.total, image_loss(y, x).item());
  const auto full = total_loss(y, x, yd, xd, 0.01, 0.01);
  const double hand = image_loss(y, x).item() + 0.01 * image_loss(yd, xd).item() + 0.01 * aid_loss(yd, xd).item();
  EXPECT_NEAR(full.report.total, hand, 1e-9);
  EXPECT_EQ(full.report.total, full.report.image_loss + 0.01 * full.report.depth_l1 + 0.01 * full.report.depth_aid);
  EXPECT_EQ(full.total.item(), full.report.total);
  EXPECT_GE(full.report.depth_aid, 0.0);
  EXPECT_DGN_ERROR(total_loss(y, x, yd, xd, -0.01, 0.01), ErrorCode::kInvalidConfig);
}

TEST(TotalLoss, RestoredImageReference) {
  Rng rng(8);
  const Tensor y = random_tensor({1, 3, 6, 6}, rng), x = random_tensor({1, 3, 6, 6}, rng);
  const Tensor yd = random_tensor({1, 3, 6, 6}, rng), xd = random_tensor({1, 3, 6, 6}, rng);
  const auto r = total_loss(y, x, yd, xd, 0.01, 0.01, y);
  EXPECT_NEAR(r.report.depth_aid, aid_loss(yd, y).item(), 1e-15);
}

TEST(TotalLoss, WithoutDepthBranch) {
  Rng rng(9);
  const Tensor y = random_tensor({1, 3, 6, 6}, rng), x = random_tensor({1, 3, 6, 6}, rng);
  const auto r = total_loss(y, x, Tensor(), Tensor(), 0.01, 0.01);
  EXPECT_EQ(r.report.total, r.report.image_loss);
  EXPECT_EQ(r.report.depth_l1, 0.0);
}

TEST(Psnr, UniformOffsets) {
  Rng rng(10);
  const Tensor a = random_tensor({1, 3, 8, 8}, rng, 0, 0.4);
  EXPECT_EQ(psnr(a, a), 100.0);
  EXPECT_NEAR(psnr(a, offset(a, 0.5)), 6.0206, 1e-4);
  EXPECT_NEAR(psnr(a, offset(a, 0.1)), 20.0, 1e-9);
  EXPECT_DGN_ERROR(psnr(a, Tensor::zeros({1, 3, 8, 7})), ErrorCode::kInvalidArgument);
}

TEST(Psnr, DecreasesWithNoiseAmplitude) {
  Rng rng(11);
  const Tensor a = random_tensor({1, 1, 16, 16}, rng, 0, 1);
  const Tensor noise = random_tensor({1, 1, 16, 16}, rng, -1, 1);
  double last = INFINITY;
  for (double amp : {0.01, 0.02, 0.05, 0.1, 0.3}) {
    const double p = psnr(a, ops::add(a, ops::scale(noise, amp)));
    EXPECT_LT(p, last);
    last = p;
  }
}

TEST(Ssim, IdentityAndConstantImages) {
  Rng rng(12);
  const Tensor a = random_tensor({1, 3, 16, 16}, rng, 0, 1);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
  const double c1 = 1e-4;
  EXPECT_NEAR(ssim(Tensor::zeros({1, 1, 12, 12}), Tensor::full({1, 1, 12, 12}, 1.0)), c1 / (1 + c1), 1e-12);
  EXPECT_DGN_ERROR(ssim(Tensor::zeros({1, 1, 10, 12}), Tensor::zeros({1, 1, 10, 12})),
                   ErrorCode::kInvalidArgument);
}

TEST(Ssim, MatchesSlidingWindowOracleAndIsSymmetric) {
  Rng rng(13);
  const Tensor a = random_tensor({1, 3, 19, 23}, rng, 0, 1), b = random_tensor({1, 3, 19, 23}, rng, 0, 1);
  auto luma = [](const Tensor& t) {
    std::vector<double> g(19 * 23);
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] = 0.299 * t.data()[i] + 0.587 * t.data()[g.size() + i] + 0.114 * t.data()[2 * g.size() + i];
    return g;
  };
  EXPECT_NEAR(ssim(a, b), testing::oracle_ssim_plane(luma(a), luma(b), 19, 23), 1e-6);
  EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-9);
}

TEST(MetricRow, FixedFormatting) {
  EXPECT_EQ(format_metric_row("img_01", 30.28, 0.8335), "img_01\t30.2800\t0.8335");
}

}  // namespace
}  // namespace dgn
