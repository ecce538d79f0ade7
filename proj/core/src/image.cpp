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

#include "dgn/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include "dgn/error.hpp"

namespace dgn {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::string lower_extension(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return ext;
}

// Decoded interleaved samples straight from the file.
struct Decoded {
  std::size_t channels = 0, height = 0, width = 0;
  double maxval = 255.0;
  std::vector<double> interleaved;
};

Decoded decode_png(const std::string& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  require(file != nullptr, ErrorCode::kIoError, "cannot open " + path);
  png_byte sig[8];
  require(std::fread(sig, 1, 8, file.get()) == 8 && png_sig_cmp(sig, 0, 8) == 0,
          ErrorCode::kDecodeError, path + " is not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  require(png && info, ErrorCode::kDecodeError, "libpng initialization failed");
  Decoded out;
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::kDecodeError, "corrupt PNG data in " + path);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (depth == 16) png_set_swap(png);  // host little-endian 16-bit samples
  png_read_update_info(png, info);
  out.width = png_get_image_width(png, info);
  out.height = png_get_image_height(png, info);
  out.channels = png_get_channels(png, info);
  const int out_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * out.height);
  rows.resize(out.height);
  for (std::size_t y = 0; y < out.height; ++y) rows[y] = buffer.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t count = out.width * out.height * out.channels;
  out.interleaved.resize(count);
  if (out_depth == 16) {
    out.maxval = 65535.0;
    for (std::size_t i = 0; i < count; ++i) {
      std::uint16_t v;
      std::memcpy(&v, buffer.data() + 2 * i, 2);
      out.interleaved[i] = v;
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) out.interleaved[i] = buffer[i];
  }
  return out;
}

Decoded decode_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kIoError, "cannot open " + path);
  std::string magic;
  in >> magic;
  require(magic == "P5" || magic == "P6", ErrorCode::kDecodeError,
          path + ": only binary P5/P6 PNM files are supported");
  auto next_int = [&]() {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string comment;
      std::getline(in, comment);
      in >> std::ws;
    }
    long v = -1;
    in >> v;
    require(in.good() && v > 0, ErrorCode::kDecodeError, path + ": malformed PNM header");
    return static_cast<std::size_t>(v);
  };
  Decoded out;
  out.channels = magic == "P5" ? 1 : 3;
  out.width = next_int();
  out.height = next_int();
  const std::size_t maxval = next_int();
  require(maxval <= 65535, ErrorCode::kDecodeError, path + ": maxval out of range");
  out.maxval = static_cast<double>(maxval);
  in.get();  // single whitespace byte before the raster
  const std::size_t count = out.width * out.height * out.channels;
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(count * bytes_per);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  require(static_cast<std::size_t>(in.gcount()) == raw.size(), ErrorCode::kDecodeError,
          path + ": truncated raster");
  out.interleaved.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    out.interleaved[i] = bytes_per == 2 ? (raw[2 * i] << 8) | raw[2 * i + 1] : raw[i];
  return out;
}

Decoded decode(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  require(probe.good(), ErrorCode::kIoError, "cannot open " + path);
  char head[2] = {0, 0};
  probe.read(head, 2);
  if (static_cast<unsigned char>(head[0]) == 0x89 && head[1] == 'P') return decode_png(path);
  if (head[0] == 'P' && (head[1] == '5' || head[1] == '6')) return decode_pnm(path);
  fail(ErrorCode::kDecodeError, path + ": unrecognized image format");
}

unsigned char to_byte(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

Tensor to_tensor(const Image& image) {
  return Tensor::from({1, image.channels, image.height, image.width}, image.data);
}

Tensor stack(const std::vector<Image>& images) {
  require(!images.empty(), ErrorCode::kInvalidArgument, "stack: no images");
  const Image& first = images.front();
  std::vector<double> values;
  values.reserve(images.size() * first.data.size());
  for (const auto& im : images) {
    require(im.channels == first.channels && im.height == first.height && im.width == first.width,
            ErrorCode::kInvalidArgument, "stack: image shapes differ");
    values.insert(values.end(), im.data.begin(), im.data.end());
  }
  return Tensor::from({images.size(), first.channels, first.height, first.width}, std::move(values));
}

Image from_tensor(const Tensor& t, std::size_t n) {
  require(t.rank() == 4 && n < t.dim(0), ErrorCode::kInvalidArgument, "from_tensor: bad index");
  Image im(t.dim(1), t.dim(2), t.dim(3));
  const auto src = t.data().subspan(n * im.data.size(), im.data.size());
  std::copy(src.begin(), src.end(), im.data.begin());
  return im;
}

std::vector<double> grayscale_255(const Image& image) {
  std::vector<double> gray(image.plane());
  if (image.channels < 3) {
    for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = image.data[i] * 255.0;
    return gray;
  }
  const std::size_t p = image.plane();
  for (std::size_t i = 0; i < p; ++i)
    gray[i] = 255.0 * (0.299 * image.data[i] + 0.587 * image.data[p + i] + 0.114 * image.data[2 * p + i]);
  return gray;
}

Image crop(const Image& image, std::size_t y, std::size_t x, std::size_t h, std::size_t w) {
  require(y + h <= image.height && x + w <= image.width, ErrorCode::kInvalidArgument,
          "crop: region exceeds image bounds");
  Image out(image.channels, h, w);
  for (std::size_t c = 0; c < image.channels; ++c)
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t col = 0; col < w; ++col) out.at(c, r, col) = image.at(c, y + r, x + col);
  return out;
}

Image center_crop_to_multiple(const Image& image, std::size_t multiple) {
  const std::size_t h = image.height / multiple * multiple;
  const std::size_t w = image.width / multiple * multiple;
  require(h > 0 && w > 0, ErrorCode::kInvalidArgument, "center_crop: image smaller than the scale");
  return crop(image, (image.height - h) / 2, (image.width - w) / 2, h, w);
}

Image rotate90(const Image& image, int quarter_turns) {
  int k = ((quarter_turns % 4) + 4) % 4;
  Image cur = image;
  while (k-- > 0) {
    Image next(cur.channels, cur.width, cur.height);
    // counter-clockwise: new(y, x) = old(x, W - 1 - y)
    for (std::size_t c = 0; c < cur.channels; ++c)
      for (std::size_t y = 0; y < next.height; ++y)
        for (std::size_t x = 0; x < next.width; ++x)
          next.at(c, y, x) = cur.at(c, x, cur.width - 1 - y);
    cur = std::move(next);
  }
  return cur;
}

Image flip_horizontal(const Image& image) {
  Image out(image.channels, image.height, image.width);
  for (std::size_t c = 0; c < image.channels; ++c)
    for (std::size_t y = 0; y < image.height; ++y)
      for (std::size_t x = 0; x < image.width; ++x)
        out.at(c, y, x) = image.at(c, y, image.width - 1 - x);
  return out;
}

Image clip01(Image image) {
  for (auto& v : image.data) v = std::clamp(v, 0.0, 1.0);
  return image;
}

Image read_image(const std::string& path) {
  const Decoded d = decode(path);
  require(d.width > 0 && d.height > 0, ErrorCode::kDecodeError, path + ": empty image");
  // gray -> 1 channel, gray+alpha -> 1, RGB -> 3, RGBA -> 3
  const std::size_t keep = d.channels >= 3 ? 3 : 1;
  Image im(keep, d.height, d.width);
  for (std::size_t y = 0; y < d.height; ++y)
    for (std::size_t x = 0; x < d.width; ++x)
      for (std::size_t c = 0; c < keep; ++c)
        im.at(c, y, x) = d.interleaved[(y * d.width + x) * d.channels + c] / d.maxval;
  return im;
}

RawPlane read_raw_plane(const std::string& path) {
  const Decoded d = decode(path);
  require(d.channels == 1 || d.channels == 2, ErrorCode::kDecodeError,
          path + ": expected a single-channel raster");
  RawPlane out;
  out.height = d.height;
  out.width = d.width;
  out.values.resize(d.height * d.width);
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = d.interleaved[i * d.channels];
  return out;
}

void write_image(const std::string& path, const Image& image) {
  require(image.channels == 1 || image.channels == 3, ErrorCode::kInvalidArgument,
          "write_image: expected 1 or 3 channels");
  std::vector<unsigned char> interleaved(image.plane() * image.channels);
  for (std::size_t y = 0; y < image.height; ++y)
    for (std::size_t x = 0; x < image.width; ++x)
      for (std::size_t c = 0; c < image.channels; ++c)
        interleaved[(y * image.width + x) * image.channels + c] = to_byte(image.at(c, y, x));

  const std::string ext = lower_extension(path);
  if (ext == "png") {
    FilePtr file(std::fopen(path.c_str(), "wb"));
    require(file != nullptr, ErrorCode::kIoError, "cannot write " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    require(png && info, ErrorCode::kIoError, "libpng initialization failed");
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      fail(ErrorCode::kIoError, "failed writing " + path);
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
                 image.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t y = 0; y < image.height; ++y)
      png_write_row(png, interleaved.data() + y * image.width * image.channels);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return;
  }
  require(ext == "ppm" || ext == "pgm" || ext == "pnm", ErrorCode::kInvalidArgument,
          "write_image: unsupported extension for " + path);
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::kIoError, "cannot write " + path);
  out << (image.channels == 3 ? "P6" : "P5") << '\n' << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(interleaved.data()), static_cast<std::streamsize>(interleaved.size()));
  require(out.good(), ErrorCode::kIoError, "failed writing " + path);
}

void write_pgm16(const std::string& path, const RawPlane& plane) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::kIoError, "cannot write " + path);
  out << "P5\n" << plane.width << ' ' << plane.height << "\n65535\n";
  std::vector<unsigned char> raw(plane.values.size() * 2);
  for (std::size_t i = 0; i < plane.values.size(); ++i) {
    const auto v = static_cast<std::uint16_t>(std::lround(std::clamp(plane.values[i], 0.0, 65535.0)));
    raw[2 * i] = static_cast<unsigned char>(v >> 8);
    raw[2 * i + 1] = static_cast<unsigned char>(v & 0xFF);
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  require(out.good(), ErrorCode::kIoError, "failed writing " + path);
}

}  // namespace dgn
