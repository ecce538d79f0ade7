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
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dgn/config.hpp"
#include "dgn/degradation.hpp"
#include "dgn/network.hpp"
#include "dgn/objectives.hpp"
#include "dgn/random.hpp"

namespace dgn::harness {

inline constexpr long kFullTotalIters = 500000;

/// Piecewise-constant schedule: lr(i) = base_lr * factor^(#milestones <= i).
struct LrSchedule {
  double base_lr = 3e-4;
  std::vector<long> milestones{250000, 400000, 450000, 475000};
  double factor = 0.5;
  long total_iters = kFullTotalIters;

  void validate() const;

  /// Full-length schedule shrunk to `total_iters`, milestones scaled by
  /// total_iters / 500000 and rounded down.
  static LrSchedule scaled(long total_iters, double base_lr = 3e-4);
};

double lr_at(const LrSchedule& schedule, long iter);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction; no weight decay or clipping.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  /// Updates every tensor in `params` from its accumulated gradient.
  void step(std::vector<std::pair<std::string, Tensor>>& params, double lr);

  long steps() const { return steps_; }
  const AdamConfig& config() const { return cfg_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }
  void restore(long steps, std::vector<std::vector<double>> m, std::vector<std::vector<double>> v);

 private:
  AdamConfig cfg_;
  long steps_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

struct TrainOptions {
  DgnConfig model;
  LrSchedule schedule = LrSchedule::scaled(1000);
  AdamConfig adam;
  data::BatchOptions batch{2, 64, 4, true};
  long iterations = 1000;   // stop after this many iterations (<= schedule.total_iters)
  long checkpoint_every = 0;  // 0 disables periodic checkpoints
  std::uint64_t seed = 0;
  std::string out_dir;  // empty: no files written
};

struct LogRecord {
  long iter = 0;  // 1-based
  double lr = 0.0;
  objectives::LossReport loss;
};

/// Metric log line: iter, lr, image_loss, depth_l1, depth_aid, total
/// (tab separated, 17 significant digits).
std::string format_log_record(const LogRecord& record);

struct TrainState {
  long iteration = 0;  // completed iterations
  net::DgnModel model;
  Adam optimizer;
  Rng rng;
  double best_psnr = 0.0;
};

TrainState initial_state(const TrainOptions& options);

/// Per iteration: sample a batch, run the network, total loss, Adam step at
/// lr_at(iteration). Runs until options.iterations. Non-finite loss raises
/// nan-loss naming the last good checkpoint.
std::vector<LogRecord> train(const TrainOptions& options, const std::vector<data::SamplePair>& dataset,
                             TrainState& state,
                             const std::function<void(const LogRecord&)>& on_iteration = {});

/// Checkpoint: model parameters, Adam moments, iteration, sampler state and
/// the configuration.
void save_state(const std::string& path, const TrainState& state, const TrainOptions& options);
TrainState load_state(const std::string& path);
net::DgnModel load_model(const std::string& path);

struct MetricRow {
  std::string method;  // "dgn", or "bicubic" / "input" for the baseline
  std::string id;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct EvalOptions {
  double sigma = 25.0;
  std::uint64_t seed = 0;
  data::DepthSource depth;
};

struct EvalReport {
  std::vector<MetricRow> rows;  // per image, then one "mean" row per method
};

/// Degrades each image per the model's task, restores it, and scores model
/// and baseline against the (center-cropped) original.
EvalReport evaluate(const net::DgnModel& model, Task task,
                    const std::vector<std::pair<std::string, Image>>& images, const EvalOptions& options);

void write_report(std::ostream& out, const EvalReport& report);

/// Runs the model on one low-quality image (values clipped to [0, 1]).
Image restore(const net::DgnModel& model, const Image& lq, const Image& lq_depth);

}  // namespace dgn::harness
