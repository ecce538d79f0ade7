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
#include <random>
#include <string>

namespace dgn {

// Platform-stable random source. The engine is std::mt19937_64, whose output
// sequence is fixed by the C++ standard. The distributions below are written
// out explicitly because the std:: distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) using the top 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();

  /// Normal with std `stddev`, redrawn until within two standard deviations.
  double truncated_normal(double stddev);

  /// Derives an independent child stream; used to split the root generator
  /// per consumer (data sampling, noise, hashing).
  Rng split(std::uint64_t stream_id);

  std::string serialize() const;
  void deserialize(const std::string& text);

 private:
  std::mt19937_64 engine_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

/// SplitMix64 finalizer, used to combine seeds into well-separated streams.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace dgn
