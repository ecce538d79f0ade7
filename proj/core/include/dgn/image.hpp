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
#include <string>
#include <vector>

#include "dgn/tensor.hpp"

namespace dgn {

/// Planar (CHW) image with samples in [0, 1].
struct Image {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  Image() = default;
  Image(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
      : channels(c), height(h), width(w), data(c * h * w, fill) {}

  double& at(std::size_t c, std::size_t y, std::size_t x) { return data[(c * height + y) * width + x]; }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return data[(c * height + y) * width + x];
  }
  std::size_t plane() const { return height * width; }
  bool empty() const { return data.empty(); }
};

/// [1, C, H, W] tensor copy.
Tensor to_tensor(const Image& image);
/// Stacks images of equal shape into [N, C, H, W].
Tensor stack(const std::vector<Image>& images);
/// Image `n` of an NCHW tensor.
Image from_tensor(const Tensor& t, std::size_t n = 0);

/// Luma on the 0-255 scale (weights 0.299, 0.587, 0.114); single-channel
/// input is passed through scaled to 0-255.
std::vector<double> grayscale_255(const Image& image);

Image crop(const Image& image, std::size_t y, std::size_t x, std::size_t h, std::size_t w);
Image center_crop_to_multiple(const Image& image, std::size_t multiple);
/// Counter-clockwise rotation by quarter_turns * 90 degrees.
Image rotate90(const Image& image, int quarter_turns);
Image flip_horizontal(const Image& image);
Image clip01(Image image);

/// Raw single-channel samples with their bit depth (used for 16-bit depth sidecars).
struct RawPlane {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;  // integer sample values, 0..maxval
};

/// Reads PNG (8/16-bit gray, gray+alpha, RGB, RGBA) or binary PNM (P5/P6).
/// Alpha is dropped. Throws decode-error on anything else.
Image read_image(const std::string& path);
/// Reads a single-channel PNG or P5 PGM without normalization.
RawPlane read_raw_plane(const std::string& path);

/// Writes by extension: .png (8-bit) or .ppm/.pgm (8-bit binary).
void write_image(const std::string& path, const Image& image);
/// Writes a single-channel 16-bit P5 PGM (the depth sidecar format).
void write_pgm16(const std::string& path, const RawPlane& plane);

}  // namespace dgn
