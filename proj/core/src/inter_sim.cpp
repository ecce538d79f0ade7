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

#include "dgn/inter_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dgn/error.hpp"
#include "dgn/init.hpp"
#include "dgn/ops.hpp"
#include "matrix_kernels.hpp"

namespace dgn::inter_sim {

namespace {

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

// NCHW -> per-image row-major [H*W, C].
std::vector<double> to_rows(std::span<const double> x, std::size_t b, std::size_t c,
                            std::size_t plane) {
  std::vector<double> rows(plane * c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* src = x.data() + (b * c + ch) * plane;
    for (std::size_t p = 0; p < plane; ++p) rows[p * c + ch] = src[p];
  }
  return rows;
}

void softmax_rows(double* s, std::size_t rows, std::size_t cols) {
  for (std::size_t i = 0; i < rows; ++i) {
    double* row = s + i * cols;
    const double mx = *std::max_element(row, row + cols);
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      row[j] = std::exp(row[j] - mx);
      total += row[j];
    }
    for (std::size_t j = 0; j < cols; ++j) row[j] /= total;
  }
}

struct Chunk {
  std::vector<std::size_t> queries;  // positions
  std::vector<std::size_t> keys;     // positions
  std::vector<double> weights;       // [queries x keys]
};

std::vector<Chunk> make_chunks(const std::vector<std::size_t>& order, const LshConfig& cfg) {
  const std::size_t p = order.size();
  const std::size_t cs = static_cast<std::size_t>(cfg.chunk_size);
  const std::size_t count = (p + cs - 1) / cs;
  std::vector<Chunk> chunks(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t begin = k * cs, end = std::min(p, begin + cs);
    chunks[k].queries.assign(order.begin() + begin, order.begin() + end);
    chunks[k].keys = chunks[k].queries;
    if (cfg.look_back && count > 1) {
      const std::size_t prev = (k + count - 1) % count;
      const std::size_t pb = prev * cs, pe = std::min(p, pb + cs);
      chunks[k].keys.insert(chunks[k].keys.end(), order.begin() + pb, order.begin() + pe);
    }
  }
  return chunks;
}

}  // namespace

void LshConfig::validate() const {
  require(num_rounds >= 1, ErrorCode::kInvalidConfig, "lsh: num_rounds must be positive");
  require(num_buckets >= 2 && is_power_of_two(num_buckets), ErrorCode::kInvalidConfig,
          "lsh: num_buckets must be a power of two >= 2");
  require(chunk_size >= 1, ErrorCode::kInvalidConfig, "lsh: chunk_size must be >= 1");
}

std::vector<double> rotation_matrix(std::size_t dim, const LshConfig& cfg, int round) {
  const std::size_t half = static_cast<std::size_t>(cfg.num_buckets) / 2;
  Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(round)));
  std::vector<double> rot(dim * half);
  for (auto& v : rot) v = rng.normal();
  return rot;
}

BucketAssignment slsh_hash_rows(std::span<const double> rows, std::size_t num_positions,
                                std::size_t dim, const LshConfig& cfg, int round) {
  cfg.validate();
  require(round >= 0 && round < cfg.num_rounds, ErrorCode::kInvalidArgument,
          "slsh_hash: round out of range");
  require(rows.size() == num_positions * dim, ErrorCode::kInvalidArgument,
          "slsh_hash: feature buffer does not match [num_positions, dim]");
  const std::size_t half = static_cast<std::size_t>(cfg.num_buckets) / 2;
  const std::vector<double> rot = rotation_matrix(dim, cfg, round);

  BucketAssignment result;
  result.bucket_id.assign(num_positions, 0);
  std::vector<double> rotated(half);
  for (std::size_t p = 0; p < num_positions; ++p) {
    const double* f = rows.data() + p * dim;
    double norm = 0.0;
    for (std::size_t c = 0; c < dim; ++c) norm += f[c] * f[c];
    norm = std::sqrt(norm);
    if (norm == 0.0 || !std::isfinite(norm)) continue;
    std::fill(rotated.begin(), rotated.end(), 0.0);
    for (std::size_t c = 0; c < dim; ++c) {
      const double fc = f[c] / norm;
      for (std::size_t j = 0; j < half; ++j) rotated[j] += fc * rot[c * half + j];
    }
    // argmax over [r, -r]; strict > keeps the lowest index on ties
    int best = 0;
    double best_value = rotated[0];
    for (std::size_t j = 0; j < 2 * half; ++j) {
      const double value = j < half ? rotated[j] : -rotated[j - half];
      if (value > best_value) {
        best_value = value;
        best = static_cast<int>(j);
      }
    }
    result.bucket_id[p] = best;
  }

  result.sort_order.resize(num_positions);
  std::iota(result.sort_order.begin(), result.sort_order.end(), std::size_t{0});
  std::sort(result.sort_order.begin(), result.sort_order.end(),
            [&](std::size_t a, std::size_t b) {
              if (result.bucket_id[a] != result.bucket_id[b])
                return result.bucket_id[a] < result.bucket_id[b];
              const double* fa = rows.data() + a * dim;
              const double* fb = rows.data() + b * dim;
              for (std::size_t c = 0; c < dim; ++c)
                if (fa[c] != fb[c]) return fa[c] < fb[c];
              return a < b;
            });
  return result;
}

BucketAssignment slsh_hash(const Tensor& features, const LshConfig& cfg, int round) {
  require(features.defined() && features.rank() == 4 && features.dim(0) == 1,
          ErrorCode::kInvalidArgument, "slsh_hash: expected a [1, C, H, W] feature map");
  const std::size_t c = features.dim(1), plane = features.dim(2) * features.dim(3);
  const auto rows = to_rows(features.data(), 0, c, plane);
  return slsh_hash_rows(rows, plane, c, cfg, round);
}

NonLocalParams NonLocalParams::create(std::size_t channels, Rng& rng) {
  NonLocalParams p;
  p.proj_w = init::fan_in_uniform({channels, channels, 1, 1}, rng);
  p.proj_b = init::bias_uniform(channels, channels, rng);
  return p;
}

Tensor sparse_nonlocal_attention(const Tensor& x, const LshConfig& cfg,
                                 const NonLocalParams& params, AttentionTrace* trace) {
  cfg.validate();
  require(x.defined() && x.rank() == 4, ErrorCode::kInvalidArgument,
          "sparse_nonlocal_attention: expected NCHW input");
  const Tensor embed = ops::conv2d(x, params.proj_w, params.proj_b);
  const std::size_t batch = embed.dim(0), c = embed.dim(1), plane = embed.dim(2) * embed.dim(3);
  const double inv = 1.0 / std::sqrt(static_cast<double>(c));
  const double round_weight = 1.0 / cfg.num_rounds;

  // chunks[b][r] hold the attention weights needed by the backward pass
  std::vector<std::vector<std::vector<Chunk>>> plan(batch);
  std::vector<double> out(embed.numel(), 0.0);
  std::vector<double> acc(plane * c);
  for (std::size_t b = 0; b < batch; ++b) {
    const auto rows = to_rows(embed.data(), b, c, plane);
    std::fill(acc.begin(), acc.end(), 0.0);
    plan[b].resize(static_cast<std::size_t>(cfg.num_rounds));
    // Rounds are accumulated in fixed order so the mean is bitwise reproducible.
    for (int r = 0; r < cfg.num_rounds; ++r) {
      BucketAssignment assignment = slsh_hash_rows(rows, plane, c, cfg, r);
      auto chunks = make_chunks(assignment.sort_order, cfg);
      std::vector<double> eq, ek, o;
      for (auto& chunk : chunks) {
        const std::size_t nq = chunk.queries.size(), nk = chunk.keys.size();
        eq.resize(nq * c);
        ek.resize(nk * c);
        for (std::size_t i = 0; i < nq; ++i)
          std::copy_n(rows.data() + chunk.queries[i] * c, c, eq.data() + i * c);
        for (std::size_t j = 0; j < nk; ++j)
          std::copy_n(rows.data() + chunk.keys[j] * c, c, ek.data() + j * c);
        chunk.weights.assign(nq * nk, 0.0);
        kernels::gemm_nt(eq.data(), ek.data(), chunk.weights.data(), nq, c, nk, inv);
        softmax_rows(chunk.weights.data(), nq, nk);
        o.assign(nq * c, 0.0);
        kernels::gemm_nn(chunk.weights.data(), ek.data(), o.data(), nq, nk, c);
        for (std::size_t i = 0; i < nq; ++i)
          for (std::size_t ch = 0; ch < c; ++ch)
            acc[chunk.queries[i] * c + ch] += round_weight * o[i * c + ch];
        if (trace) {
          trace->chunk_weights.push_back(chunk.weights);
          trace->chunk_queries.push_back(nq);
        }
      }
      if (trace) trace->assignments.push_back(std::move(assignment));
      plan[b][static_cast<std::size_t>(r)] = std::move(chunks);
    }
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t p = 0; p < plane; ++p) out[(b * c + ch) * plane + p] = acc[p * c + ch];
  }

  Tensor attended = make_result(
      embed.shape(), std::move(out), {embed},
      [embed, batch, c, plane, inv, round_weight,
       plan = std::move(plan)](const std::vector<double>& g) {
        auto* ge = grad_target(embed);
        if (!ge) return;
        std::vector<double> eq, ek, dout, da, grad_rows(plane * c);
        for (std::size_t b = 0; b < batch; ++b) {
          const auto rows = to_rows(embed.data(), b, c, plane);
          const auto g_rows = to_rows(g, b, c, plane);
          std::fill(grad_rows.begin(), grad_rows.end(), 0.0);
          for (const auto& chunks : plan[b]) {
            for (const auto& chunk : chunks) {
              const std::size_t nq = chunk.queries.size(), nk = chunk.keys.size();
              eq.resize(nq * c);
              ek.resize(nk * c);
              dout.resize(nq * c);
              for (std::size_t i = 0; i < nq; ++i) {
                std::copy_n(rows.data() + chunk.queries[i] * c, c, eq.data() + i * c);
                for (std::size_t ch = 0; ch < c; ++ch)
                  dout[i * c + ch] = round_weight * g_rows[chunk.queries[i] * c + ch];
              }
              for (std::size_t j = 0; j < nk; ++j)
                std::copy_n(rows.data() + chunk.keys[j] * c, c, ek.data() + j * c);
              const double* a = chunk.weights.data();
              // dA = dO Ek^T, then through the row softmax
              da.assign(nq * nk, 0.0);
              kernels::gemm_nt(dout.data(), ek.data(), da.data(), nq, c, nk);
              for (std::size_t i = 0; i < nq; ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < nk; ++j) dot += da[i * nk + j] * a[i * nk + j];
                for (std::size_t j = 0; j < nk; ++j)
                  da[i * nk + j] = a[i * nk + j] * (da[i * nk + j] - dot);
              }
              std::vector<double> gq(nq * c, 0.0), gk(nk * c, 0.0);
              kernels::gemm_tn(a, dout.data(), gk.data(), nk, nq, c);
              kernels::gemm_tn(da.data(), eq.data(), gk.data(), nk, nq, c, inv);
              kernels::gemm_nn(da.data(), ek.data(), gq.data(), nq, nk, c, inv);
              for (std::size_t i = 0; i < nq; ++i)
                for (std::size_t ch = 0; ch < c; ++ch)
                  grad_rows[chunk.queries[i] * c + ch] += gq[i * c + ch];
              for (std::size_t j = 0; j < nk; ++j)
                for (std::size_t ch = 0; ch < c; ++ch)
                  grad_rows[chunk.keys[j] * c + ch] += gk[j * c + ch];
            }
          }
          for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t p = 0; p < plane; ++p)
              (*ge)[(b * c + ch) * plane + p] += grad_rows[p * c + ch];
        }
      });
  return ops::add(x, attended);
}

Tensor dense_nonlocal_oracle(const Tensor& x, const NonLocalParams& params) {
  require(x.defined() && x.rank() == 4, ErrorCode::kInvalidArgument,
          "dense_nonlocal_oracle: expected NCHW input");
  const std::size_t plane = x.dim(2) * x.dim(3);
  require(plane <= kOracleMaxPositions, ErrorCode::kOracleScaleExceeded,
          "dense_nonlocal_oracle: " + std::to_string(plane) + " positions exceed the limit of " +
              std::to_string(kOracleMaxPositions));
  NoGradGuard no_grad;
  const Tensor embed = ops::conv2d(x, params.proj_w, params.proj_b);
  const std::size_t batch = x.dim(0), c = embed.dim(1);
  const double inv = 1.0 / std::sqrt(static_cast<double>(c));
  std::vector<double> out(x.data().begin(), x.data().end());
  std::vector<double> weights(plane);
  for (std::size_t b = 0; b < batch; ++b) {
    const auto rows = to_rows(embed.data(), b, c, plane);
    for (std::size_t i = 0; i < plane; ++i) {
      for (std::size_t j = 0; j < plane; ++j) {
        double s = 0.0;
        for (std::size_t ch = 0; ch < c; ++ch) s += rows[i * c + ch] * rows[j * c + ch];
        weights[j] = s * inv;
      }
      softmax_rows(weights.data(), 1, plane);
      for (std::size_t ch = 0; ch < c; ++ch) {
        double v = 0.0;
        for (std::size_t j = 0; j < plane; ++j) v += weights[j] * rows[j * c + ch];
        out[(b * c + ch) * plane + i] += v;
      }
    }
  }
  return Tensor::from(x.shape(), std::move(out));
}

}  // namespace dgn::inter_sim
