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

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dgn/inter_sim.hpp"
#include "dgn/intra_sim.hpp"

namespace dgn {

enum class Task { kSr, kDenoise };

/// Which image the affine-invariant depth term compares the predicted depth
/// against: the ground-truth depth (default) or the restored RGB output.
enum class AidReference { kDepthTarget, kRestoredImage };

std::string to_string(Task task);
Task parse_task(const std::string& text);

struct DgnConfig {
  int num_groups = 6;
  int blocks_per_group = 6;
  int channels = 64;
  int base_window = 8;
  std::vector<double> ratios{0.5, 1, 2, 4, 6, 8};
  int scale = 4;
  Task task = Task::kSr;
  bool depth_enabled = true;
  inter_sim::LshConfig lsh;
  double lambda1 = 0.01;
  double lambda2 = 0.01;

  intra_sim::CscMode csc_mode = intra_sim::CscMode::kChannel;
  AidReference aid_reference = AidReference::kDepthTarget;
  bool denoise_global_skip = true;

  /// Throws invalid-config on any violated constraint.
  void validate() const;
  std::vector<int> window_sizes() const;

  /// Small configuration used by tests and desk-scale runs.
  static DgnConfig tiny(Task task = Task::kSr);
};

void to_json(nlohmann::json& j, const DgnConfig& cfg);
void from_json(const nlohmann::json& j, DgnConfig& cfg);

DgnConfig load_config(const std::string& path);

}  // namespace dgn
