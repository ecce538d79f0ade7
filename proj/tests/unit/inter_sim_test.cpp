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

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dgn/inter_sim.hpp"
#include "expect_error.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

#ifndef DGN_FIXTURE_DIR
#error "DGN_FIXTURE_DIR must point at tests/fixtures"
#endif

namespace dgn {
namespace {

using inter_sim::LshConfig;
using testing::max_abs_diff;
using testing::random_tensor;

bool is_permutation_of_range(const std::vector<std::size_t>& order) {
  std::vector<std::size_t> s = order;
  std::sort(s.begin(), s.end());
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i] != i) return false;
  return true;
}

TEST(Slsh, AssignmentIsSortedPermutation) {
  Rng rng(1);
  LshConfig cfg;
  cfg.seed = 42;
  const Tensor x = random_tensor({1, 6, 5, 7}, rng);
  for (int r = 0; r < cfg.num_rounds; ++r) {
    const auto a = inter_sim::slsh_hash(x, cfg, r);
    ASSERT_EQ(a.bucket_id.size(), 35u);
    EXPECT_TRUE(is_permutation_of_range(a.sort_order));
    for (std::size_t i = 1; i < a.sort_order.size(); ++i)
      EXPECT_LE(a.bucket_id[a.sort_order[i - 1]], a.bucket_id[a.sort_order[i]]);
    for (int b : a.bucket_id) EXPECT_TRUE(b >= 0 && b < cfg.num_buckets);
  }
}

TEST(Slsh, IdenticalAndScaledVectorsShareBuckets) {
  Rng rng(2);
  LshConfig cfg;
  cfg.num_buckets = 8;
  const std::size_t dim = 5;
  std::vector<double> rows(4 * dim);
  for (std::size_t c = 0; c < dim; ++c) {
    const double v = rng.uniform() - 0.5;
    rows[0 * dim + c] = v;
    rows[1 * dim + c] = v;
    rows[2 * dim + c] = 3 * v;
    rows[3 * dim + c] = rng.uniform() - 0.5;
  }
  for (int r = 0; r < cfg.num_rounds; ++r) {
    const auto a = inter_sim::slsh_hash_rows(rows, 4, dim, cfg, r);
    EXPECT_EQ(a.bucket_id[0], a.bucket_id[1]);
    EXPECT_EQ(a.bucket_id[0], a.bucket_id[2]);
  }
}

TEST(Slsh, ZeroVectorLandsInBucketZero) {
  LshConfig cfg;
  const std::vector<double> rows(3 * 4, 0.0);
  const auto a = inter_sim::slsh_hash_rows(rows, 3, 4, cfg, 0);
  for (int b : a.bucket_id) EXPECT_EQ(b, 0);
}

TEST(Slsh, DeterministicForFixedSeed) {
  Rng rng(3);
  LshConfig cfg;
  cfg.seed = 9;
  const Tensor x = random_tensor({1, 4, 6, 6}, rng);
  for (int r = 0; r < cfg.num_rounds; ++r) {
    const auto a = inter_sim::slsh_hash(x, cfg, r);
    const auto b = inter_sim::slsh_hash(x, cfg, r);
    EXPECT_EQ(a.bucket_id, b.bucket_id);
    EXPECT_EQ(a.sort_order, b.sort_order);
  }
}

// Input for the golden bucket file: 8x4 positions, 4 channels, drawn from
// Rng(2024) uniform in [-1, 1); hashed with seed 7, 4 rounds, 16 buckets.
Tensor golden_input() {
  Rng rng(2024);
  return random_tensor({1, 4, 8, 4}, rng);
}

TEST(Slsh, MatchesGoldenBuckets) {
  LshConfig cfg;
  cfg.seed = 7;
  std::ifstream in(std::string(DGN_FIXTURE_DIR) + "/lsh_buckets_8x4.txt");
  ASSERT_TRUE(in) << "missing golden bucket file";
  const Tensor x = golden_input();
  std::string line;
  int round = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::vector<int> want;
    for (int v; fields >> v;) want.push_back(v);
    EXPECT_EQ(inter_sim::slsh_hash(x, cfg, round).bucket_id, want) << "round " << round;
    ++round;
  }
  EXPECT_EQ(round, cfg.num_rounds);
}

TEST(Slsh, RejectsBadConfig) {
  LshConfig cfg;
  cfg.num_buckets = 6;
  EXPECT_DGN_ERROR(cfg.validate(), ErrorCode::kInvalidConfig);
  cfg.num_buckets = 16;
  cfg.chunk_size = 0;
  EXPECT_DGN_ERROR(cfg.validate(), ErrorCode::kInvalidConfig);
  Rng rng(4);
  const auto p = inter_sim::NonLocalParams::create(2, rng);
  EXPECT_DGN_ERROR(inter_sim::sparse_nonlocal_attention(Tensor::zeros({1, 2, 2, 2}), cfg, p),
                   ErrorCode::kInvalidConfig);
}

TEST(SparseAttention, DegenerateBucketingMatchesDenseOracle) {
  Rng rng(5);
  const auto p = inter_sim::NonLocalParams::create(4, rng);
  const Tensor x = random_tensor({2, 4, 5, 6}, rng);
  LshConfig cfg;
  cfg.num_rounds = 1;
  cfg.chunk_size = 30;
  const Tensor sparse = inter_sim::sparse_nonlocal_attention(x, cfg, p);
  const Tensor dense = inter_sim::dense_nonlocal_oracle(x, p);
  EXPECT_LE(max_abs_diff(sparse.data(), dense.data()), 1e-6);
}

TEST(SparseAttention, ConstantFieldGivesUniformOutput) {
  Rng rng(6);
  const auto p = inter_sim::NonLocalParams::create(3, rng);
  const Tensor x = Tensor::full({1, 3, 4, 4}, 0.25);
  LshConfig cfg;
  cfg.chunk_size = 5;
  const Tensor y = inter_sim::sparse_nonlocal_attention(x, cfg, p);
  for (std::size_t c = 0; c < 3; ++c) {
    double proj = p.proj_b.data()[c];
    for (std::size_t k = 0; k < 3; ++k) proj += p.proj_w.data()[c * 3 + k] * 0.25;
    for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(y.data()[c * 16 + i], 0.25 + proj, 1e-12);
  }
}

TEST(SparseAttention, MatchesSlowPathOracle) {
  Rng rng(7);
  const auto p = inter_sim::NonLocalParams::create(3, rng);
  const Tensor x = random_tensor({1, 3, 4, 4}, rng);
  LshConfig cfg;
  cfg.chunk_size = 4;
  cfg.num_buckets = 4;
  cfg.seed = 11;
  const Tensor y = inter_sim::sparse_nonlocal_attention(x, cfg, p);
  EXPECT_LE(max_abs_diff(y.data(), testing::oracle_sparse_attention(x, cfg, p)), 1e-6);
}

TEST(SparseAttention, RowsSumToOne) {
  Rng rng(8);
  const auto p = inter_sim::NonLocalParams::create(4, rng);
  const Tensor x = random_tensor({2, 4, 6, 5}, rng);
  LshConfig cfg;
  cfg.chunk_size = 7;
  for (bool look_back : {false, true}) {
    cfg.look_back = look_back;
    inter_sim::AttentionTrace trace;
    inter_sim::sparse_nonlocal_attention(x, cfg, p, &trace);
    ASSERT_EQ(trace.assignments.size(), 2u * cfg.num_rounds);
    for (std::size_t k = 0; k < trace.chunk_weights.size(); ++k) {
      const auto& w = trace.chunk_weights[k];
      const std::size_t nq = trace.chunk_queries[k], nk = w.size() / nq;
      for (std::size_t i = 0; i < nq; ++i) {
        const double s = std::accumulate(w.begin() + i * nk, w.begin() + (i + 1) * nk, 0.0);
        EXPECT_NEAR(s, 1.0, 1e-6);
      }
    }
  }
}

TEST(SparseAttention, LookBackWidensKeys) {
  Rng rng(9);
  const auto p = inter_sim::NonLocalParams::create(2, rng);
  const Tensor x = random_tensor({1, 2, 4, 4}, rng);
  LshConfig cfg;
  cfg.num_rounds = 1;
  cfg.chunk_size = 4;
  cfg.look_back = true;
  inter_sim::AttentionTrace trace;
  inter_sim::sparse_nonlocal_attention(x, cfg, p, &trace);
  ASSERT_EQ(trace.chunk_weights.size(), 4u);
  for (const auto& w : trace.chunk_weights) EXPECT_EQ(w.size(), 4u * 8u);
}

TEST(SparseAttention, PermutationConsistent) {
  Rng rng(10);
  const auto p = inter_sim::NonLocalParams::create(4, rng);
  const std::size_t h = 5, w = 6, plane = h * w;
  const Tensor x = random_tensor({1, 4, h, w}, rng);
  std::vector<std::size_t> perm(plane);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = plane - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  std::vector<double> xp(x.numel());
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t i = 0; i < plane; ++i) xp[c * plane + i] = x.data()[c * plane + perm[i]];
  LshConfig cfg;
  cfg.chunk_size = 4;
  const Tensor y = inter_sim::sparse_nonlocal_attention(x, cfg, p);
  const Tensor yp = inter_sim::sparse_nonlocal_attention(Tensor::from(x.shape(), xp), cfg, p);
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t i = 0; i < plane; ++i)
      EXPECT_NEAR(yp.data()[c * plane + i], y.data()[c * plane + perm[i]], 1e-12);
}

TEST(SparseAttention, GradientMatchesFiniteDifferences) {
  Rng rng(11);
  auto p = inter_sim::NonLocalParams::create(4, rng);
  Tensor x = random_tensor({1, 4, 4, 8}, rng, -1, 1, true);
  LshConfig cfg;
  cfg.chunk_size = 5;
  cfg.num_buckets = 4;
  cfg.look_back = true;
  auto loss = [&] { return testing::probe_sum(inter_sim::sparse_nonlocal_attention(x, cfg, p), 4); };
  const auto r = testing::gradcheck(loss, {{"x", x}, {"proj_w", p.proj_w}, {"proj_b", p.proj_b}});
  EXPECT_LE(r.max_rel_error, 1e-4) << r.worst;
}

TEST(DenseOracle, SinglePosition) {
  Rng rng(12);
  const auto p = inter_sim::NonLocalParams::create(2, rng);
  const Tensor x = Tensor::from({1, 2, 1, 1}, {0.3, -0.7});
  const Tensor y = inter_sim::dense_nonlocal_oracle(x, p);
  for (std::size_t c = 0; c < 2; ++c) {
    const double e = p.proj_b.data()[c] + p.proj_w.data()[c * 2] * 0.3 - p.proj_w.data()[c * 2 + 1] * 0.7;
    EXPECT_NEAR(y.data()[c], x.data()[c] + e, 1e-15);
  }
}

TEST(DenseOracle, IdenticalPositionsIdenticalOutputs) {
  Rng rng(13);
  const auto p = inter_sim::NonLocalParams::create(2, rng);
  const Tensor x = Tensor::from({1, 2, 1, 3}, {0.5, 0.5, -0.1, 0.2, 0.2, 0.9});
  const Tensor y = inter_sim::dense_nonlocal_oracle(x, p);
  EXPECT_EQ(y.data()[0], y.data()[1]);
  EXPECT_EQ(y.data()[3], y.data()[4]);
}

TEST(DenseOracle, RefusesLargeInputs) {
  Rng rng(14);
  const auto p = inter_sim::NonLocalParams::create(1, rng);
  EXPECT_DGN_ERROR(inter_sim::dense_nonlocal_oracle(Tensor::zeros({1, 1, 65, 64}), p),
                   ErrorCode::kOracleScaleExceeded);
  EXPECT_NO_THROW(inter_sim::dense_nonlocal_oracle(Tensor::zeros({1, 1, 64, 64}), p));
}

}  // namespace
}  // namespace dgn
