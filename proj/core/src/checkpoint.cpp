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

#include "dgn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "dgn/error.hpp"

namespace dgn::checkpoint {

namespace {

constexpr char kMagic[8] = {'D', 'G', 'N', 'C', 'K', 'P', 'T', '\0'};
static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  require(in.good(), ErrorCode::kDecodeError, "truncated checkpoint " + path);
  return value;
}

}  // namespace

void save(const std::string& path, const Container& container) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCode::kIoError, "cannot write checkpoint " + tmp);
    out.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kFormatVersion);
    const std::string meta = container.metadata.dump();
    put<std::uint64_t>(out, meta.size());
    out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
    put<std::uint64_t>(out, container.arrays.size());
    for (const auto& [name, tensor] : container.arrays) {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      put<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.rank()));
      for (auto d : tensor.shape()) put<std::uint64_t>(out, d);
      const auto values = tensor.data();
      out.write(reinterpret_cast<const char*>(values.data()),
                static_cast<std::streamsize>(values.size() * sizeof(double)));
    }
    out.flush();
    if (!out.good()) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      fail(ErrorCode::kIoError, "failed writing checkpoint " + path + " (disk full?)");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require(!ec, ErrorCode::kIoError, "cannot move checkpoint into place: " + ec.message());
}

Container load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kIoError, "cannot open checkpoint " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  require(in.good() && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0, ErrorCode::kDecodeError,
          path + " is not a checkpoint file");
  const auto version = get<std::uint32_t>(in, path);
  require(version == kFormatVersion, ErrorCode::kDecodeError,
          "unsupported checkpoint version " + std::to_string(version));
  Container c;
  const auto meta_len = get<std::uint64_t>(in, path);
  std::string meta(meta_len, '\0');
  in.read(meta.data(), static_cast<std::streamsize>(meta_len));
  require(in.good(), ErrorCode::kDecodeError, "truncated checkpoint metadata in " + path);
  try {
    c.metadata = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kDecodeError, "corrupt checkpoint metadata: " + std::string(e.what()));
  }
  const auto count = get<std::uint64_t>(in, path);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = get<std::uint32_t>(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rank = get<std::uint32_t>(in, path);
    require(rank <= 8, ErrorCode::kDecodeError, "implausible rank for " + name);
    Shape shape(rank);
    for (auto& d : shape) d = get<std::uint64_t>(in, path);
    std::vector<double> values(shape_numel(shape));
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
    require(in.good(), ErrorCode::kDecodeError, "truncated array " + name + " in " + path);
    c.arrays.emplace(name, Tensor::from(shape, std::move(values)));
  }
  return c;
}

void assign_checked(const std::string& name, Tensor& target, const Tensor& source) {
  require(target.shape() == source.shape(), ErrorCode::kInvalidConfig,
          "checkpoint array " + name + " has shape " + shape_string(source.shape()) + ", model expects " +
              shape_string(target.shape()));
  std::copy(source.data().begin(), source.data().end(), target.data().begin());
}

}  // namespace dgn::checkpoint
