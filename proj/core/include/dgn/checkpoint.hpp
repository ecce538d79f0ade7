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

#include <cstdint>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "dgn/tensor.hpp"

// Versioned binary container for named arrays plus JSON metadata.
//
// Layout (all integers little-endian):
//   bytes  "DGNCKPT\0"
//   u32    format version (1)
//   u64    metadata length, then that many bytes of UTF-8 JSON
//   u64    array count, then per array:
//            u32 name length, name bytes,
//            u32 rank, u64 dims[rank],
//            f64 values[prod(dims)] (IEEE-754 binary64)
namespace dgn::checkpoint {

inline constexpr std::uint32_t kFormatVersion = 1;

struct Container {
  nlohmann::json metadata;
  std::map<std::string, Tensor> arrays;
};

/// Writes to `path` through a temporary file and rename, so an interrupted
/// or failed write leaves any previous file at `path` intact.
void save(const std::string& path, const Container& container);
Container load(const std::string& path);

/// Copies `source` into `target` after checking the shape; throws
/// invalid-config naming the array on mismatch.
void assign_checked(const std::string& name, Tensor& target, const Tensor& source);

}  // namespace dgn::checkpoint
