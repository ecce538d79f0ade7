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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dgn/image.hpp"
#include "dgn/random.hpp"
#include "dgn/tensor.hpp"

// Degradation synthesis, depth sidecar ingestion and training batch sampling.
namespace dgn::data {

/// Keys cubic convolution kernel with a = -0.5.
double cubic_kernel(double x);

/// Separable bicubic resize. With `antialias` and downscaling, the kernel is
/// stretched by the scale factor. Borders replicate the edge sample.
Image resize_bicubic(const Image& image, std::size_t out_h, std::size_t out_w, bool antialias = true);

/// One training example; all images in [0, 1], depth maps with 3 identical channels.
struct SamplePair {
  std::string id;
  Image lq, hq;
  Image lq_depth, hq_depth;
};

/// Bicubic downsampling by `scale` (clipped to [0, 1]).
Image degrade_sr(const Image& hq, int scale);
/// clip(hq + n), n ~ N(0, (sigma / 255)^2) per sample, seeded.
Image degrade_noise(const Image& hq, double sigma, std::uint64_t seed);

/// Bicubic upsampling baseline for a low-resolution input.
Image bicubic_upsample(const Image& lq, int scale);

/// Per-image min-max normalization of raw depth replicated to 3 channels; a
/// constant map becomes all zeros.
Image normalize_depth(const RawPlane& raw);

/// Smooth deterministic depth field (a ramp plus Gaussian blobs) sampled at
/// pixel centres, so fields at different resolutions describe the same scene.
RawPlane synthetic_depth_field(std::size_t height, std::size_t width, std::uint64_t seed);

struct DepthSource {
  std::string sidecar_dir;  // holds <id>.lqdepth and <id>.hqdepth
  bool synthetic = false;
  std::uint64_t seed = 0;
};

/// (lq_depth, hq_depth) for an image. Sidecars are single-channel 16-bit
/// rasters; missing sidecars raise missing-depth unless synthetic mode is on.
std::pair<Image, Image> ingest_depth(const std::string& image_id, const DepthSource& source,
                                     std::size_t lq_h, std::size_t lq_w, std::size_t hq_h,
                                     std::size_t hq_w);

/// Builds a full-image SamplePair for the given task (scale 1 means noise).
SamplePair make_pair(const std::string& id, const Image& hq, int scale, double sigma,
                     std::uint64_t noise_seed, const DepthSource& depth);

struct BatchOptions {
  std::size_t batch_size = 8;
  std::size_t patch_size = 256;  // high-quality patch side
  int scale = 4;
  bool augment = true;
};

struct Batch {
  Tensor lq, hq, lq_depth, hq_depth;  // [B, 3, ...]
};

/// Seeded random crops (aligned between resolutions) with the same random
/// rotation/flip applied to all four maps of a sample.
Batch sample_batch(const std::vector<SamplePair>& dataset, const BatchOptions& options, Rng& rng);

/// Applies rotation (counter-clockwise quarter turns) then optional flip.
Image augment(const Image& image, int quarter_turns, bool flip);

}  // namespace dgn::data
