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

#include "dgn/config.hpp"

#include <fstream>

#include "dgn/error.hpp"

namespace dgn {

std::string to_string(Task task) { return task == Task::kSr ? "sr" : "denoise"; }

Task parse_task(const std::string& text) {
  if (text == "sr") return Task::kSr;
  if (text == "denoise") return Task::kDenoise;
  fail(ErrorCode::kInvalidConfig, "unknown task '" + text + "' (expected sr or denoise)");
}

void DgnConfig::validate() const {
  require(num_groups >= 1, ErrorCode::kInvalidConfig, "num_groups must be positive");
  require(blocks_per_group >= 1, ErrorCode::kInvalidConfig, "blocks_per_group must be positive");
  require(channels >= 4 && channels % 4 == 0, ErrorCode::kInvalidConfig,
          "channels must be a positive multiple of 4, got " + std::to_string(channels));
  require(static_cast<int>(ratios.size()) == blocks_per_group, ErrorCode::kInvalidConfig,
          "ratios must have one entry per block");
  require(scale == 1 || scale == 4, ErrorCode::kInvalidConfig, "scale must be 1 or 4");
  require(!(task == Task::kDenoise && scale != 1), ErrorCode::kInvalidConfig,
          "denoise requires scale 1");
  require(!(task == Task::kSr && scale != 4), ErrorCode::kInvalidConfig, "sr requires scale 4");
  require(lambda1 >= 0.0 && lambda2 >= 0.0, ErrorCode::kInvalidConfig,
          "loss weights must be non-negative");
  lsh.validate();
  (void)window_sizes();
}

std::vector<int> DgnConfig::window_sizes() const {
  return intra_sim::window_schedule(base_window, ratios);
}

DgnConfig DgnConfig::tiny(Task task) {
  DgnConfig cfg;
  cfg.num_groups = 2;
  cfg.blocks_per_group = 2;
  cfg.channels = 16;
  cfg.base_window = 8;
  cfg.ratios = {0.5, 1};
  cfg.task = task;
  cfg.scale = task == Task::kSr ? 4 : 1;
  return cfg;
}

void to_json(nlohmann::json& j, const DgnConfig& cfg) {
  j = nlohmann::json{
      {"num_groups", cfg.num_groups},
      {"blocks_per_group", cfg.blocks_per_group},
      {"channels", cfg.channels},
      {"base_window", cfg.base_window},
      {"ratios", cfg.ratios},
      {"scale", cfg.scale},
      {"task", to_string(cfg.task)},
      {"depth_enabled", cfg.depth_enabled},
      {"lsh",
       {{"num_rounds", cfg.lsh.num_rounds},
        {"num_buckets", cfg.lsh.num_buckets},
        {"chunk_size", cfg.lsh.chunk_size},
        {"seed", cfg.lsh.seed},
        {"look_back", cfg.lsh.look_back}}},
      {"lambda1", cfg.lambda1},
      {"lambda2", cfg.lambda2},
      {"csc_mode", cfg.csc_mode == intra_sim::CscMode::kChannel ? "channel" : "spatial"},
      {"aid_reference",
       cfg.aid_reference == AidReference::kDepthTarget ? "depth_target" : "restored_image"},
      {"denoise_global_skip", cfg.denoise_global_skip},
  };
}

void from_json(const nlohmann::json& j, DgnConfig& cfg) {
  cfg = DgnConfig{};
  try {
    cfg.num_groups = j.value("num_groups", cfg.num_groups);
    cfg.blocks_per_group = j.value("blocks_per_group", cfg.blocks_per_group);
    cfg.channels = j.value("channels", cfg.channels);
    cfg.base_window = j.value("base_window", cfg.base_window);
    cfg.ratios = j.value("ratios", cfg.ratios);
    cfg.scale = j.value("scale", cfg.scale);
    cfg.task = parse_task(j.value("task", to_string(cfg.task)));
    cfg.depth_enabled = j.value("depth_enabled", cfg.depth_enabled);
    if (j.contains("lsh")) {
      const auto& l = j.at("lsh");
      cfg.lsh.num_rounds = l.value("num_rounds", cfg.lsh.num_rounds);
      cfg.lsh.num_buckets = l.value("num_buckets", cfg.lsh.num_buckets);
      cfg.lsh.chunk_size = l.value("chunk_size", cfg.lsh.chunk_size);
      cfg.lsh.seed = l.value("seed", cfg.lsh.seed);
      cfg.lsh.look_back = l.value("look_back", cfg.lsh.look_back);
    }
    cfg.lambda1 = j.value("lambda1", cfg.lambda1);
    cfg.lambda2 = j.value("lambda2", cfg.lambda2);
    const std::string csc = j.value("csc_mode", std::string("channel"));
    require(csc == "channel" || csc == "spatial", ErrorCode::kInvalidConfig,
            "csc_mode must be channel or spatial");
    cfg.csc_mode = csc == "channel" ? intra_sim::CscMode::kChannel : intra_sim::CscMode::kSpatial;
    const std::string aid = j.value("aid_reference", std::string("depth_target"));
    require(aid == "depth_target" || aid == "restored_image", ErrorCode::kInvalidConfig,
            "aid_reference must be depth_target or restored_image");
    cfg.aid_reference =
        aid == "depth_target" ? AidReference::kDepthTarget : AidReference::kRestoredImage;
    cfg.denoise_global_skip = j.value("denoise_global_skip", cfg.denoise_global_skip);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidConfig, std::string("malformed config: ") + e.what());
  }
}

DgnConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIoError, "cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidConfig, "cannot parse config " + path + ": " + e.what());
  }
  // Model settings may sit at top level or under a "model" key next to
  // harness settings.
  DgnConfig cfg = j.contains("model") ? j.at("model").get<DgnConfig>() : j.get<DgnConfig>();
  cfg.validate();
  return cfg;
}

}  // namespace dgn
