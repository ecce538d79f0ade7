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

#include "dgn/degradation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "dgn/error.hpp"

namespace dgn::data {

namespace {

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

struct Taps {
  std::vector<std::size_t> first;  // first source index per output sample
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<std::size_t>> index;
};

Taps resize_taps(std::size_t in, std::size_t out, bool antialias) {
  Taps taps;
  taps.weights.resize(out);
  taps.index.resize(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  const double stretch = (antialias && scale > 1.0) ? scale : 1.0;
  const double support = 2.0 * stretch;
  for (std::size_t o = 0; o < out; ++o) {
    const double center = (o + 0.5) * scale - 0.5;
    const long lo = static_cast<long>(std::floor(center - support));
    const long hi = static_cast<long>(std::ceil(center + support));
    double total = 0.0;
    for (long i = lo; i <= hi; ++i) {
      const double w = cubic_kernel((center - static_cast<double>(i)) / stretch);
      if (w == 0.0) continue;
      const long clamped = std::clamp(i, 0L, static_cast<long>(in) - 1);
      taps.index[o].push_back(static_cast<std::size_t>(clamped));
      taps.weights[o].push_back(w);
      total += w;
    }
    for (auto& w : taps.weights[o]) w /= total;
  }
  return taps;
}

}  // namespace

double cubic_kernel(double x) {
  constexpr double a = -0.5;
  const double t = std::abs(x);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

Image resize_bicubic(const Image& image, std::size_t out_h, std::size_t out_w, bool antialias) {
  require(!image.empty() && out_h > 0 && out_w > 0, ErrorCode::kInvalidArgument,
          "resize_bicubic: empty input or output");
  const Taps tx = resize_taps(image.width, out_w, antialias);
  const Taps ty = resize_taps(image.height, out_h, antialias);
  Image horizontal(image.channels, image.height, out_w);
  for (std::size_t c = 0; c < image.channels; ++c)
    for (std::size_t y = 0; y < image.height; ++y)
      for (std::size_t x = 0; x < out_w; ++x) {
        double s = 0.0;
        for (std::size_t k = 0; k < tx.index[x].size(); ++k) s += tx.weights[x][k] * image.at(c, y, tx.index[x][k]);
        horizontal.at(c, y, x) = s;
      }
  Image out(image.channels, out_h, out_w);
  for (std::size_t c = 0; c < image.channels; ++c)
    for (std::size_t y = 0; y < out_h; ++y)
      for (std::size_t x = 0; x < out_w; ++x) {
        double s = 0.0;
        for (std::size_t k = 0; k < ty.index[y].size(); ++k)
          s += ty.weights[y][k] * horizontal.at(c, ty.index[y][k], x);
        out.at(c, y, x) = s;
      }
  return out;
}

Image degrade_sr(const Image& hq, int scale) {
  require(scale >= 1, ErrorCode::kInvalidArgument, "degrade_sr: scale must be positive");
  const auto s = static_cast<std::size_t>(scale);
  require(hq.height % s == 0 && hq.width % s == 0 && !hq.empty(), ErrorCode::kInvalidArgument,
          "degrade_sr: image " + std::to_string(hq.height) + "x" + std::to_string(hq.width) +
              " is not divisible by scale " + std::to_string(scale));
  return clip01(resize_bicubic(hq, hq.height / s, hq.width / s, true));
}

Image degrade_noise(const Image& hq, double sigma, std::uint64_t seed) {
  require(sigma >= 0.0, ErrorCode::kInvalidArgument, "degrade_noise: sigma must be non-negative");
  if (sigma == 0.0) return hq;
  Rng rng(seed);
  Image out = hq;
  const double stddev = sigma / 255.0;
  for (auto& v : out.data) v = std::clamp(v + stddev * rng.normal(), 0.0, 1.0);
  return out;
}

Image bicubic_upsample(const Image& lq, int scale) {
  const auto s = static_cast<std::size_t>(scale);
  return clip01(resize_bicubic(lq, lq.height * s, lq.width * s, false));
}

Image normalize_depth(const RawPlane& raw) {
  require(!raw.values.empty(), ErrorCode::kInvalidArgument, "normalize_depth: empty depth map");
  const auto [mn, mx] = std::minmax_element(raw.values.begin(), raw.values.end());
  const double lo = *mn, range = *mx - *mn;
  Image out(3, raw.height, raw.width);
  const std::size_t plane = raw.height * raw.width;
  for (std::size_t i = 0; i < plane; ++i) {
    const double v = range > 0.0 ? (raw.values[i] - lo) / range : 0.0;
    out.data[i] = out.data[plane + i] = out.data[2 * plane + i] = v;
  }
  return out;
}

RawPlane synthetic_depth_field(std::size_t height, std::size_t width, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0xDE97));
  const double angle = 2.0 * 3.141592653589793 * rng.uniform();
  const double gx = std::cos(angle), gy = std::sin(angle);
  struct Blob { double cx, cy, radius, amplitude; };
  std::vector<Blob> blobs(3);
  for (auto& b : blobs) {
    b.cx = rng.uniform();
    b.cy = rng.uniform();
    b.radius = 0.08 + 0.2 * rng.uniform();
    b.amplitude = 0.5 + rng.uniform();
  }
  RawPlane out;
  out.height = height;
  out.width = width;
  out.values.resize(height * width);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      const double u = (x + 0.5) / static_cast<double>(width);
      const double v = (y + 0.5) / static_cast<double>(height);
      double d = 0.5 * (gx * u + gy * v);
      for (const auto& b : blobs) {
        const double r2 = (u - b.cx) * (u - b.cx) + (v - b.cy) * (v - b.cy);
        d += b.amplitude * std::exp(-r2 / (2.0 * b.radius * b.radius));
      }
      out.values[y * width + x] = d;
    }
  return out;
}

std::pair<Image, Image> ingest_depth(const std::string& image_id, const DepthSource& source,
                                     std::size_t lq_h, std::size_t lq_w, std::size_t hq_h,
                                     std::size_t hq_w) {
  namespace fs = std::filesystem;
  if (!source.sidecar_dir.empty()) {
    const fs::path lq_path = fs::path(source.sidecar_dir) / (image_id + ".lqdepth");
    const fs::path hq_path = fs::path(source.sidecar_dir) / (image_id + ".hqdepth");
    if (fs::exists(lq_path) && fs::exists(hq_path)) {
      const RawPlane lq = read_raw_plane(lq_path.string());
      const RawPlane hq = read_raw_plane(hq_path.string());
      require(lq.height == lq_h && lq.width == lq_w && hq.height == hq_h && hq.width == hq_w,
              ErrorCode::kInvalidArgument, "depth sidecar dimensions do not match image " + image_id);
      return {normalize_depth(lq), normalize_depth(hq)};
    }
  }
  require(source.synthetic, ErrorCode::kMissingDepth,
          "no depth sidecars (.lqdepth/.hqdepth) for image '" + image_id + "'");
  const std::uint64_t seed = mix_seed(source.seed, fnv1a(image_id));
  return {normalize_depth(synthetic_depth_field(lq_h, lq_w, seed)),
          normalize_depth(synthetic_depth_field(hq_h, hq_w, seed))};
}

SamplePair make_pair(const std::string& id, const Image& hq, int scale, double sigma,
                     std::uint64_t noise_seed, const DepthSource& depth) {
  SamplePair pair;
  pair.id = id;
  pair.hq = hq;
  pair.lq = scale > 1 ? degrade_sr(hq, scale) : degrade_noise(hq, sigma, noise_seed);
  std::tie(pair.lq_depth, pair.hq_depth) =
      ingest_depth(id, depth, pair.lq.height, pair.lq.width, hq.height, hq.width);
  return pair;
}

Image augment(const Image& image, int quarter_turns, bool flip) {
  Image out = rotate90(image, quarter_turns);
  return flip ? flip_horizontal(out) : out;
}

Batch sample_batch(const std::vector<SamplePair>& dataset, const BatchOptions& options, Rng& rng) {
  require(!dataset.empty(), ErrorCode::kInvalidArgument, "sample_batch: empty dataset");
  require(options.batch_size > 0 && options.patch_size > 0 && options.scale >= 1,
          ErrorCode::kInvalidArgument, "sample_batch: invalid options");
  const auto s = static_cast<std::size_t>(options.scale);
  require(options.patch_size % s == 0, ErrorCode::kInvalidArgument,
          "sample_batch: patch size must be divisible by the scale");
  const std::size_t lq_patch = options.patch_size / s;
  std::vector<Image> lq, hq, lqd, hqd;
  for (std::size_t i = 0; i < options.batch_size; ++i) {
    const SamplePair& pair = dataset[rng.below(dataset.size())];
    require(pair.lq.height >= lq_patch && pair.lq.width >= lq_patch &&
                pair.hq.height >= options.patch_size && pair.hq.width >= options.patch_size,
            ErrorCode::kInvalidArgument,
            "sample_batch: patch " + std::to_string(options.patch_size) + " larger than image " + pair.id);
    const std::size_t y = rng.below(pair.lq.height - lq_patch + 1);
    const std::size_t x = rng.below(pair.lq.width - lq_patch + 1);
    int turns = 0;
    bool flip = false;
    if (options.augment) {
      turns = static_cast<int>(rng.below(4));
      flip = rng.below(2) == 1;
    }
    lq.push_back(augment(crop(pair.lq, y, x, lq_patch, lq_patch), turns, flip));
    lqd.push_back(augment(crop(pair.lq_depth, y, x, lq_patch, lq_patch), turns, flip));
    hq.push_back(augment(crop(pair.hq, y * s, x * s, options.patch_size, options.patch_size), turns, flip));
    hqd.push_back(augment(crop(pair.hq_depth, y * s, x * s, options.patch_size, options.patch_size), turns, flip));
  }
  return Batch{stack(lq), stack(hq), stack(lqd), stack(hqd)};
}

}  // namespace dgn::data
