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

#include "dgn/curation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "dgn/error.hpp"

namespace dgn::curation {

std::string HashCode::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(bits));
  return buf;
}

HashCode HashCode::from_hex(const std::string& text) {
  require(text.size() == 16 && text.find_first_not_of("0123456789abcdef") == std::string::npos,
          ErrorCode::kInvalidArgument, "hash must be 16 lowercase hex digits: '" + text + "'");
  return HashCode{std::stoull(text, nullptr, 16)};
}

std::vector<double> area_resize(const std::vector<double>& plane, std::size_t height,
                                std::size_t width, std::size_t out_h, std::size_t out_w) {
  require(height > 0 && width > 0 && plane.size() == height * width, ErrorCode::kInvalidArgument,
          "area_resize: empty or inconsistent plane");
  // Coverage of source cells by each destination cell along one axis.
  auto weights = [](std::size_t in, std::size_t out) {
    std::vector<std::vector<std::pair<std::size_t, double>>> w(out);
    const double step = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t o = 0; o < out; ++o) {
      const double lo = o * step, hi = (o + 1) * step;
      for (auto i = static_cast<std::size_t>(std::floor(lo)); i < in && static_cast<double>(i) < hi; ++i) {
        const double overlap = std::min(hi, i + 1.0) - std::max(lo, static_cast<double>(i));
        if (overlap > 0.0) w[o].emplace_back(i, overlap / step);
      }
    }
    return w;
  };
  const auto wy = weights(height, out_h);
  const auto wx = weights(width, out_w);
  std::vector<double> out(out_h * out_w, 0.0);
  for (std::size_t oy = 0; oy < out_h; ++oy)
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      double s = 0.0;
      for (const auto& [iy, fy] : wy[oy])
        for (const auto& [ix, fx] : wx[ox]) s += fy * fx * plane[iy * width + ix];
      out[oy * out_w + ox] = s;
    }
  return out;
}

HashCode phash_gray(const std::vector<double>& gray, std::size_t height, std::size_t width,
                    bool normalize_brightness) {
  std::vector<double> plane = gray;
  if (normalize_brightness) {
    double mean = 0.0;
    for (double v : plane) mean += v;
    mean /= static_cast<double>(plane.size());
    for (double& v : plane) v = v - mean + 128.0;
  }
  auto cells = area_resize(plane, height, width, 8, 8);
  // Snap to a 1e-9 grid so cells that are equal up to summation order
  // compare equal against the mean.
  for (double& v : cells) v = std::round(v * 1e9) / 1e9;
  double mean = 0.0;
  for (double v : cells) mean += v;
  mean = std::round(mean / 64.0 * 1e9) / 1e9;
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < 64; ++i)
    if (cells[i] > mean) bits |= std::uint64_t{1} << (63 - i);
  return HashCode{bits};
}

HashCode phash(const Image& image, bool normalize_brightness) {
  require(!image.empty(), ErrorCode::kDecodeError, "phash: empty image");
  return phash_gray(grayscale_255(image), image.height, image.width, normalize_brightness);
}

int hamming(HashCode a, HashCode b) { return std::popcount(a.bits ^ b.bits); }

double mean_brightness(const Image& image) {
  const auto gray = grayscale_255(image);
  double s = 0.0;
  for (double v : gray) s += v;
  return gray.empty() ? 0.0 : s / static_cast<double>(gray.size());
}

Verdict brightness_filter(double mean, double threshold) {
  return mean < threshold ? Verdict::kDroppedDark : Verdict::kKept;
}

Verdict brightness_filter(const Image& image, double threshold) {
  return brightness_filter(mean_brightness(image), threshold);
}

std::vector<PatchRect> tile(std::size_t image_w, std::size_t image_h, std::size_t patch_w,
                            std::size_t patch_h) {
  require(patch_w > 0 && patch_h > 0, ErrorCode::kInvalidArgument, "tile: patch dims must be positive");
  std::vector<PatchRect> rects;
  const std::size_t cols = image_w / patch_w, rows = image_h / patch_h;
  rects.reserve(cols * rows);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) rects.push_back({c * patch_w, r * patch_h, patch_w, patch_h});
  return rects;
}

CurationManifest dedup(std::vector<ManifestEntry> entries, int delta) {
  std::stable_sort(entries.begin(), entries.end(),
                   [](const ManifestEntry& a, const ManifestEntry& b) { return a.image_id < b.image_id; });
  std::map<std::string, std::vector<std::size_t>> kept;  // category -> kept entry indices
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& e = entries[i];
    if (e.verdict != Verdict::kKept) continue;
    auto& reps = kept[e.category];
    auto dup = std::find_if(reps.begin(), reps.end(), [&](std::size_t k) {
      return hamming(entries[k].hash, e.hash) < delta;
    });
    if (dup != reps.end()) {
      e.verdict = Verdict::kDroppedDuplicate;
      e.duplicate_of = entries[*dup].image_id;
      e.patches.clear();
    } else {
      reps.push_back(i);
    }
  }
  return CurationManifest{std::move(entries)};
}

std::vector<std::pair<std::string, std::string>> read_categories(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIoError, "cannot open categories file " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::string file, category;
    if (!(fields >> file) || file[0] == '#') continue;
    require(static_cast<bool>(fields >> category), ErrorCode::kInvalidArgument,
            path + ":" + std::to_string(lineno) + ": missing category");
    out.emplace_back(file, category);
  }
  return out;
}

CurationManifest curate(const CurateOptions& options) {
  namespace fs = std::filesystem;
  std::vector<ManifestEntry> entries;
  for (const auto& [file, category] : read_categories(options.categories_file)) {
    const Image image = read_image((fs::path(options.input_dir) / file).string());
    ManifestEntry e;
    e.image_id = fs::path(file).stem().string();
    e.category = category;
    e.hash = phash(image, options.normalize_brightness);
    e.mean_brightness = mean_brightness(image);
    e.verdict = brightness_filter(e.mean_brightness, options.brightness_threshold);
    e.width = image.width;
    e.height = image.height;
    entries.push_back(std::move(e));
  }
  CurationManifest manifest = dedup(std::move(entries), options.delta);
  for (auto& e : manifest.entries)
    if (e.verdict == Verdict::kKept) e.patches = tile(e.width, e.height, options.patch_w, options.patch_h);
  return manifest;
}

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::kKept: return "kept";
    case Verdict::kDroppedDuplicate: return "dropped_duplicate";
    case Verdict::kDroppedDark: return "dropped_dark";
  }
  return "?";
}

void write_manifest(std::ostream& out, const CurationManifest& manifest) {
  out << "# dgn-manifest v1\n";
  out << "# image_id\tcategory\thash\tmean_brightness\tverdict\tpatches\n";
  char brightness[32];
  for (const auto& e : manifest.entries) {
    std::snprintf(brightness, sizeof(brightness), "%.4f", e.mean_brightness);
    out << e.image_id << '\t' << e.category << '\t' << e.hash.hex() << '\t' << brightness << '\t'
        << to_string(e.verdict);
    if (e.verdict == Verdict::kDroppedDuplicate) out << '(' << e.duplicate_of << ')';
    out << '\t';
    if (e.patches.empty()) out << '-';
    for (std::size_t i = 0; i < e.patches.size(); ++i) {
      const auto& p = e.patches[i];
      out << (i ? ";" : "") << p.x << ',' << p.y << ',' << p.w << ',' << p.h;
    }
    out << '\n';
  }
}

CurationManifest read_manifest(std::istream& in) {
  CurationManifest manifest;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, '\t')) fields.push_back(field);
    require(fields.size() == 6, ErrorCode::kInvalidArgument, "manifest: expected 6 fields in '" + line + "'");
    ManifestEntry e;
    e.image_id = fields[0];
    e.category = fields[1];
    e.hash = HashCode::from_hex(fields[2]);
    e.mean_brightness = std::stod(fields[3]);
    const std::string& v = fields[4];
    if (v == "kept") {
      e.verdict = Verdict::kKept;
    } else if (v == "dropped_dark") {
      e.verdict = Verdict::kDroppedDark;
    } else if (v.rfind("dropped_duplicate(", 0) == 0 && v.back() == ')') {
      e.verdict = Verdict::kDroppedDuplicate;
      e.duplicate_of = v.substr(18, v.size() - 19);
    } else {
      fail(ErrorCode::kInvalidArgument, "manifest: unknown verdict '" + v + "'");
    }
    if (fields[5] != "-") {
      std::istringstream ps(fields[5]);
      std::string rect;
      while (std::getline(ps, rect, ';')) {
        PatchRect r;
        char c1, c2, c3;
        std::istringstream rs(rect);
        require(static_cast<bool>(rs >> r.x >> c1 >> r.y >> c2 >> r.w >> c3 >> r.h),
                ErrorCode::kInvalidArgument, "manifest: bad patch '" + rect + "'");
        e.patches.push_back(r);
      }
    }
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

}  // namespace dgn::curation
