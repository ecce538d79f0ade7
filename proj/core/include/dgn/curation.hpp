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
#include <iosfwd>
#include <string>
#include <vector>

#include "dgn/image.hpp"

// Dataset curation: perceptual hashing, near-duplicate removal, low-light
// filtering and fixed-size patch tiling.
namespace dgn::curation {

struct HashCode {
  std::uint64_t bits = 0;

  friend bool operator==(HashCode a, HashCode b) { return a.bits == b.bits; }
  std::string hex() const;  // 16 lowercase hex digits
  static HashCode from_hex(const std::string& text);
};

/// 64-bit average hash of a 0-255 grayscale plane. With
/// `normalize_brightness` the plane is first shifted to mean 128. The plane
/// is area-averaged to 8x8; bit i (row-major, MSB first) is set iff that
/// cell is strictly above the mean of the 64 cells.
HashCode phash_gray(const std::vector<double>& gray, std::size_t height, std::size_t width,
                    bool normalize_brightness);
HashCode phash(const Image& image, bool normalize_brightness);

/// Number of differing bits.
int hamming(HashCode a, HashCode b);

/// Area-averaging resize of a single plane (exact fractional coverage).
std::vector<double> area_resize(const std::vector<double>& plane, std::size_t height,
                                std::size_t width, std::size_t out_h, std::size_t out_w);

inline constexpr int kDefaultDelta = 10;
inline constexpr double kDefaultBrightnessThreshold = 40.0;
inline constexpr std::size_t kDefaultPatchWidth = 1535;
inline constexpr std::size_t kDefaultPatchHeight = 1151;

double mean_brightness(const Image& image);

enum class Verdict { kKept, kDroppedDuplicate, kDroppedDark };

/// kDroppedDark iff mean < threshold (strict).
Verdict brightness_filter(double mean_brightness, double threshold = kDefaultBrightnessThreshold);
Verdict brightness_filter(const Image& image, double threshold = kDefaultBrightnessThreshold);

struct PatchRect {
  std::size_t x = 0, y = 0, w = 0, h = 0;
  friend bool operator==(const PatchRect&, const PatchRect&) = default;
};

/// Row-major grid of floor(W / pw) x floor(H / ph) rectangles anchored at
/// the origin; empty when the patch does not fit.
std::vector<PatchRect> tile(std::size_t image_w, std::size_t image_h, std::size_t patch_w,
                            std::size_t patch_h);

struct ManifestEntry {
  std::string image_id;
  std::string category;
  HashCode hash;
  double mean_brightness = 0.0;
  Verdict verdict = Verdict::kKept;
  std::string duplicate_of;  // set for kDroppedDuplicate
  std::vector<PatchRect> patches;
  std::size_t width = 0, height = 0;  // not serialized
};

struct CurationManifest {
  std::vector<ManifestEntry> entries;
};

/// Within each category, scans entries in image_id order; an entry closer
/// than `delta` (Hamming) to an already kept entry is dropped as a duplicate
/// of the first such entry. Entries that arrive already dropped are passed
/// through untouched and never serve as representatives.
CurationManifest dedup(std::vector<ManifestEntry> entries, int delta = kDefaultDelta);

struct CurateOptions {
  std::string input_dir;
  std::string categories_file;
  int delta = kDefaultDelta;
  double brightness_threshold = kDefaultBrightnessThreshold;
  bool normalize_brightness = false;
  std::size_t patch_w = kDefaultPatchWidth;
  std::size_t patch_h = kDefaultPatchHeight;
};

/// Full pipeline: hash and measure every listed image, drop dark images,
/// deduplicate the rest per category, tile the kept ones.
CurationManifest curate(const CurateOptions& options);

/// Categories file: one "<file name> <category>" pair per line; blank lines
/// and lines starting with '#' are ignored.
std::vector<std::pair<std::string, std::string>> read_categories(const std::string& path);

void write_manifest(std::ostream& out, const CurationManifest& manifest);
CurationManifest read_manifest(std::istream& in);

std::string to_string(Verdict verdict);

}  // namespace dgn::curation
