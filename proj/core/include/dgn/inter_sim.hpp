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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dgn/random.hpp"
#include "dgn/tensor.hpp"

// Inter-object similarity: non-local attention over the whole feature map,
// restricted to buckets of similar features found by spherical
// (cross-polytope) locality-sensitive hashing.
namespace dgn::inter_sim {

struct LshConfig {
  int num_rounds = 4;
  int num_buckets = 16;  // power of two, >= 2
  int chunk_size = 128;
  std::uint64_t seed = 0;
  bool look_back = false;  // chunks also attend to the preceding chunk

  void validate() const;
};

struct BucketAssignment {
  std::vector<int> bucket_id;           // per position
  std::vector<std::size_t> sort_order;  // positions ordered by bucket
};

/// Random rotation for one hashing round: [dim, num_buckets / 2] standard
/// normal entries drawn from Rng(mix_seed(seed, round)).
std::vector<double> rotation_matrix(std::size_t dim, const LshConfig& cfg, int round);

/// Hashes row-major [num_positions, dim] feature rows. Each row is L2
/// normalized, rotated, and assigned argmax over [r, -r]; zero rows land
/// in bucket 0. Within a bucket, rows are ordered by their feature values
/// (then position) so the grouping does not depend on where a feature sits.
BucketAssignment slsh_hash_rows(std::span<const double> rows, std::size_t num_positions,
                                std::size_t dim, const LshConfig& cfg, int round);

/// Convenience overload for a single-image [1, C, H, W] feature map.
BucketAssignment slsh_hash(const Tensor& features, const LshConfig& cfg, int round);

/// Shared query/key/value embedding (a 1x1 convolution C -> C).
struct NonLocalParams {
  Tensor proj_w;
  Tensor proj_b;

  static NonLocalParams create(std::size_t channels, Rng& rng);
};

/// Optional inspection output of the sparse path.
struct AttentionTrace {
  // One entry per (batch, round, chunk): row-major [queries x keys] weights.
  std::vector<std::vector<double>> chunk_weights;
  std::vector<std::size_t> chunk_queries;
  std::vector<BucketAssignment> assignments;  // per (batch, round)
};

/// x + mean over rounds of chunked softmax(E E^T / sqrt(C)) E, where
/// E = proj(x) and each chunk holds `chunk_size` consecutive positions of the
/// bucket-sorted sequence.
Tensor sparse_nonlocal_attention(const Tensor& x, const LshConfig& cfg,
                                 const NonLocalParams& params, AttentionTrace* trace = nullptr);

inline constexpr std::size_t kOracleMaxPositions = 4096;

/// Exact softmax attention over all position pairs (no gradient).
Tensor dense_nonlocal_oracle(const Tensor& x, const NonLocalParams& params);

}  // namespace dgn::inter_sim
