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

#include "dgn/random.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace dgn {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t r = engine_();
  while (r >= limit) r = engine_();
  return r % n;
}

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

double Rng::truncated_normal(double stddev) {
  double z = normal();
  while (std::abs(z) > 2.0) z = normal();
  return z * stddev;
}

Rng Rng::split(std::uint64_t stream_id) { return Rng(mix_seed(engine_(), stream_id)); }

std::string Rng::serialize() const {
  std::ostringstream out;
  out << engine_ << ' ' << (has_cached_ ? 1 : 0) << ' ';
  out.precision(17);
  out << std::hexfloat << cached_;
  return out.str();
}

void Rng::deserialize(const std::string& text) {
  std::istringstream in(text);
  int cached_flag = 0;
  in >> engine_ >> cached_flag;
  std::string cached_text;
  in >> cached_text;
  has_cached_ = cached_flag != 0;
  cached_ = std::strtod(cached_text.c_str(), nullptr);
}

}  // namespace dgn
