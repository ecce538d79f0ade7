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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dgn/curation.hpp"
#include "expect_error.hpp"
#include "oracles.hpp"

namespace dgn {
namespace {

using namespace curation;

ManifestEntry entry(const std::string& id, const std::string& category, std::uint64_t bits) {
  ManifestEntry e;
  e.image_id = id;
  e.category = category;
  e.hash = HashCode{bits};
  e.mean_brightness = 100.0;
  return e;
}

const ManifestEntry& find(const CurationManifest& m, const std::string& id) {
  for (const auto& e : m.entries)
    if (e.image_id == id) return e;
  throw std::runtime_error("no entry " + id);
}

TEST(Phash, ConstantImageHasNoBits) {
  const Image gray(3, 40, 30, 0.5);
  EXPECT_EQ(phash(gray, false).bits, 0u);
  EXPECT_EQ(phash(gray, true).bits, 0u);
  EXPECT_EQ(phash(gray, false).hex(), "0000000000000000");
}

TEST(Phash, BrightnessNormalizationRemovesOffset) {
  Rng rng(1);
  std::vector<double> g(48 * 64), brighter(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = 20 + 180 * rng.uniform();
    brighter[i] = g[i] + 30;
  }
  EXPECT_EQ(phash_gray(g, 48, 64, true), phash_gray(brighter, 48, 64, true));
}

TEST(Phash, Checkerboard) {
  Image board(1, 8, 8);
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x) board.at(0, y, x) = (x + y) % 2 == 0 ? 1.0 : 0.0;
  const HashCode h = phash(board, false);
  EXPECT_EQ(std::popcount(h.bits), 32);
  EXPECT_EQ(h.bits, 0xAA55AA55AA55AA55ull);
  EXPECT_EQ(HashCode::from_hex(h.hex()), h);
}

TEST(Phash, AreaResizeAveragesBlocks) {
  std::vector<double> plane(16 * 16);
  for (std::size_t y = 0; y < 16; ++y)
    for (std::size_t x = 0; x < 16; ++x) plane[y * 16 + x] = double(y / 2 * 8 + x / 2);
  const auto cells = area_resize(plane, 16, 16, 8, 8);
  for (std::size_t i = 0; i < 64; ++i) EXPECT_DOUBLE_EQ(cells[i], double(i));
}

TEST(Hamming, MetricProperties) {
  EXPECT_EQ(hamming(HashCode{0}, HashCode{0}), 0);
  EXPECT_EQ(hamming(HashCode{0}, HashCode{~0ull}), 64);
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const HashCode a{rng.next_u64()}, b{rng.next_u64()}, c{rng.next_u64()};
    EXPECT_EQ(hamming(a, b), testing::oracle_hamming(a.bits, b.bits));
    EXPECT_EQ(hamming(a, b), hamming(b, a));
    EXPECT_LE(hamming(a, c), hamming(a, b) + hamming(b, c));
    EXPECT_EQ(hamming(a, a), 0);
  }
}

TEST(Dedup, KeepsDesignedRepresentatives) {
  // B is 3 bits from A; C is far from both
  const std::uint64_t a = 0x0123456789abcdefull, b = a ^ 0x7ull, c = ~a;
  const auto m = dedup({entry("C", "leaf", c), entry("B", "leaf", b), entry("A", "leaf", a)}, 10);
  EXPECT_EQ(find(m, "A").verdict, Verdict::kKept);
  EXPECT_EQ(find(m, "C").verdict, Verdict::kKept);
  EXPECT_EQ(find(m, "B").verdict, Verdict::kDroppedDuplicate);
  EXPECT_EQ(find(m, "B").duplicate_of, "A");
  EXPECT_EQ(m.entries.front().image_id, "A");  // image_id order
}

TEST(Dedup, DistanceBoundaryIsStrict) {
  const std::uint64_t a = 0, nine = 0x1ffull, ten = 0x3ffull;
  const auto m = dedup({entry("a", "x", a), entry("b", "x", nine), entry("c", "x", ten)}, 10);
  EXPECT_EQ(find(m, "b").verdict, Verdict::kDroppedDuplicate);
  EXPECT_EQ(find(m, "c").verdict, Verdict::kKept);
}

TEST(Dedup, DeltaZeroDropsNothing) {
  const auto m = dedup({entry("a", "x", 5), entry("b", "x", 5), entry("c", "x", 5)}, 0);
  for (const auto& e : m.entries) EXPECT_EQ(e.verdict, Verdict::kKept);
}

TEST(Dedup, CategoriesAreIndependent) {
  const auto m = dedup({entry("a", "fruit", 42), entry("b", "leaf", 42), entry("c", "stem", 42)}, 10);
  for (const auto& e : m.entries) EXPECT_EQ(e.verdict, Verdict::kKept);
}

TEST(Dedup, IdempotentOnKeptSet) {
  Rng rng(3);
  std::vector<ManifestEntry> entries;
  for (int i = 0; i < 40; ++i) {
    // clusters of near-duplicates around 4 base hashes
    const std::uint64_t base = 0x1111111111111111ull * std::uint64_t(i % 4 + 1);
    entries.push_back(entry("img" + std::to_string(100 + i), i % 2 ? "a" : "b",
                            base ^ (std::uint64_t{1} << rng.below(64))));
  }
  const auto first = dedup(entries, 10);
  std::vector<ManifestEntry> kept;
  for (const auto& e : first.entries)
    if (e.verdict == Verdict::kKept) kept.push_back(e);
  ASSERT_LT(kept.size(), entries.size());
  const auto second = dedup(kept, 10);
  for (const auto& e : second.entries) EXPECT_EQ(e.verdict, Verdict::kKept);
  for (const auto& e : first.entries)
    if (e.verdict == Verdict::kDroppedDuplicate) {
      const auto& rep = find(first, e.duplicate_of);
      EXPECT_EQ(rep.verdict, Verdict::kKept);
      EXPECT_EQ(rep.category, e.category);
    }
}

TEST(Brightness, ThresholdBoundary) {
  EXPECT_EQ(brightness_filter(Image(3, 4, 4, 0.0)), Verdict::kDroppedDark);
  EXPECT_EQ(brightness_filter(40.0), Verdict::kKept);
  EXPECT_EQ(brightness_filter(39.9), Verdict::kDroppedDark);
  EXPECT_EQ(brightness_filter(Image(1, 4, 4, 40.0 / 255.0)), Verdict::kKept);
  EXPECT_EQ(brightness_filter(Image(1, 4, 4, 39.9 / 255.0)), Verdict::kDroppedDark);
}

TEST(Tile, Examples) {
  const auto rects = tile(6159, 4131, 1535, 1151);
  ASSERT_EQ(rects.size(), 12u);
  EXPECT_EQ(rects[1], (PatchRect{1535, 0, 1535, 1151}));
  EXPECT_EQ(rects[4], (PatchRect{0, 1151, 1535, 1151}));
  for (const auto& r : rects) {
    EXPECT_LE(r.x + r.w, 6159u);
    EXPECT_LE(r.y + r.h, 4131u);
  }
  EXPECT_EQ(tile(1535, 1151, 1535, 1151).size(), 1u);
  EXPECT_TRUE(tile(1534, 1151, 1535, 1151).empty());
}

TEST(Manifest, RoundTrip) {
  CurationManifest m = dedup({entry("a", "x", 0xdeadbeefull), entry("b", "x", 0xdeadbeefull)}, 10);
  m.entries[0].patches = {{0, 0, 4, 4}, {4, 0, 4, 4}};
  std::ostringstream out;
  write_manifest(out, m);
  EXPECT_NE(out.str().find("00000000deadbeef"), std::string::npos);
  EXPECT_NE(out.str().find("dropped_duplicate(a)"), std::string::npos);
  std::istringstream in(out.str());
  const auto back = read_manifest(in);
  ASSERT_EQ(back.entries.size(), 2u);
  EXPECT_EQ(back.entries[0].patches, m.entries[0].patches);
  EXPECT_EQ(back.entries[1].verdict, Verdict::kDroppedDuplicate);
  EXPECT_EQ(back.entries[1].duplicate_of, "a");
  EXPECT_EQ(back.entries[0].hash, m.entries[0].hash);
}

class CurateFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::path(::testing::TempDir()) / "dgn_curate";
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  std::filesystem::path dir_;
};

TEST_F(CurateFixture, EndToEnd) {
  auto pattern = [](double base, double shift) {
    Image img(3, 24, 32);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < 24; ++y)
        for (std::size_t x = 0; x < 32; ++x)
          img.at(c, y, x) = std::clamp(base + 0.3 * std::sin(0.4 * x + 0.3 * y + shift), 0.0, 1.0);
    return img;
  };
  write_image((dir_ / "p1.png").string(), pattern(0.5, 0.0));
  write_image((dir_ / "p2.png").string(), pattern(0.52, 0.0));  // near duplicate of p1
  write_image((dir_ / "p3.png").string(), pattern(0.5, 2.0));
  write_image((dir_ / "p4.png").string(), Image(3, 24, 32, 0.05));  // dark
  std::ofstream((dir_ / "cats.txt").string()) << "# file category\np1.png leaf\np2.png leaf\np3.png leaf\np4.png leaf\n";
  CurateOptions opts;
  opts.input_dir = dir_.string();
  opts.categories_file = (dir_ / "cats.txt").string();
  opts.patch_w = 16;
  opts.patch_h = 12;
  const auto m = curate(opts);
  EXPECT_EQ(find(m, "p1").verdict, Verdict::kKept);
  EXPECT_EQ(find(m, "p2").verdict, Verdict::kDroppedDuplicate);
  EXPECT_EQ(find(m, "p3").verdict, Verdict::kKept);
  EXPECT_EQ(find(m, "p4").verdict, Verdict::kDroppedDark);
  EXPECT_EQ(find(m, "p1").patches.size(), 4u);
  EXPECT_TRUE(find(m, "p4").patches.empty());
  for (const auto& e : m.entries)
    if (e.verdict == Verdict::kKept) EXPECT_GE(e.mean_brightness, 40.0);
}

TEST_F(CurateFixture, UndecodableImage) {
  std::ofstream((dir_ / "bad.png").string()) << "not an image";
  std::ofstream((dir_ / "cats.txt").string()) << "bad.png x\n";
  CurateOptions opts;
  opts.input_dir = dir_.string();
  opts.categories_file = (dir_ / "cats.txt").string();
  EXPECT_DGN_ERROR(curate(opts), ErrorCode::kDecodeError);
}

}  // namespace
}  // namespace dgn
