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

#include "dgn/training.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "dgn/checkpoint.hpp"
#include "dgn/error.hpp"
#include "dgn/ops.hpp"

namespace dgn::harness {

namespace {

constexpr std::uint64_t kSamplerStream = 1;

Image to_rgb(const Image& image) {
  if (image.channels == 3) return image;
  require(image.channels == 1, ErrorCode::kInvalidArgument, "expected a gray or RGB image");
  Image out(3, image.height, image.width);
  for (std::size_t c = 0; c < 3; ++c)
    std::copy(image.data.begin(), image.data.end(), out.data.begin() + static_cast<long>(c * image.plane()));
  return out;
}

}  // namespace

void LrSchedule::validate() const {
  require(base_lr > 0.0 && factor > 0.0 && total_iters > 0, ErrorCode::kInvalidConfig,
          "lr schedule: base_lr, factor and total_iters must be positive");
  for (std::size_t i = 0; i < milestones.size(); ++i) {
    require(milestones[i] < total_iters, ErrorCode::kInvalidConfig,
            "lr schedule: milestones must be below total_iters");
    require(i == 0 || milestones[i] > milestones[i - 1], ErrorCode::kInvalidConfig,
            "lr schedule: milestones must be strictly increasing");
  }
}

LrSchedule LrSchedule::scaled(long total_iters, double base_lr) {
  require(total_iters > 0, ErrorCode::kInvalidConfig, "lr schedule: total_iters must be positive");
  LrSchedule s;
  s.base_lr = base_lr;
  s.total_iters = total_iters;
  for (auto& m : s.milestones)
    m = static_cast<long>((static_cast<__int128>(m) * total_iters) / kFullTotalIters);
  return s;
}

double lr_at(const LrSchedule& schedule, long iter) {
  require(iter >= 0 && iter < schedule.total_iters, ErrorCode::kInvalidArgument,
          "lr_at: iteration " + std::to_string(iter) + " outside [0, " +
              std::to_string(schedule.total_iters) + ")");
  double lr = schedule.base_lr;
  for (long m : schedule.milestones)
    if (m <= iter) lr *= schedule.factor;
  return lr;
}

void Adam::step(std::vector<std::pair<std::string, Tensor>>& params, double lr) {
  if (m_.empty()) {
    for (auto& [name, t] : params) {
      m_.emplace_back(t.numel(), 0.0);
      v_.emplace_back(t.numel(), 0.0);
    }
  }
  require(m_.size() == params.size(), ErrorCode::kInvalidArgument,
          "adam: parameter list changed between steps");
  ++steps_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& t = params[k].second;
    if (!t.has_grad()) continue;
    const std::vector<double> g = t.grad();
    auto p = t.data();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
  }
}

void Adam::restore(long steps, std::vector<std::vector<double>> m, std::vector<std::vector<double>> v) {
  steps_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

std::string format_log_record(const LogRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%ld\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g", r.iter, r.lr, r.loss.image_loss,
                r.loss.depth_l1, r.loss.depth_aid, r.loss.total);
  return buf;
}

TrainState initial_state(const TrainOptions& options) {
  options.model.validate();
  Rng root(options.seed);
  return TrainState{0, net::DgnModel(options.model, mix_seed(options.seed, 0)), Adam(options.adam),
                    root.split(kSamplerStream), 0.0};
}

std::vector<LogRecord> train(const TrainOptions& options, const std::vector<data::SamplePair>& dataset,
                             TrainState& state, const std::function<void(const LogRecord&)>& on_iteration) {
  options.schedule.validate();
  require(options.iterations <= options.schedule.total_iters, ErrorCode::kInvalidConfig,
          "train: iterations exceed the schedule length");
  const DgnConfig& cfg = state.model.config();
  require(options.batch.scale == cfg.scale, ErrorCode::kInvalidConfig,
          "train: batch scale does not match the model scale");
  for (const auto& pair : dataset)
    require(pair.hq.height == pair.lq.height * static_cast<std::size_t>(cfg.scale) &&
                pair.hq.width == pair.lq.width * static_cast<std::size_t>(cfg.scale),
            ErrorCode::kInvalidConfig, "train: sample " + pair.id + " does not match the model scale");

  std::ofstream log;
  std::string last_checkpoint = "(none)";
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    log.open(std::filesystem::path(options.out_dir) / "train_log.tsv", std::ios::app);
    require(log.good(), ErrorCode::kIoError, "cannot open training log in " + options.out_dir);
  }

  auto params = net::named_parameters(state.model.params());
  std::vector<LogRecord> records;
  while (state.iteration < options.iterations) {
    const double lr = lr_at(options.schedule, state.iteration);
    const data::Batch batch = data::sample_batch(dataset, options.batch, state.rng);
    const net::DgnOutput out = state.model.forward(batch.lq, batch.lq_depth);
    const Tensor aid_reference = cfg.aid_reference == AidReference::kRestoredImage ? out.image : Tensor();
    const objectives::TotalLoss loss =
        objectives::total_loss(out.image, batch.hq, out.depth, batch.hq_depth, cfg.lambda1, cfg.lambda2,
                               aid_reference);
    if (!std::isfinite(loss.report.total))
      fail(ErrorCode::kNanLoss, "non-finite loss at iteration " + std::to_string(state.iteration + 1) +
                                    "; last good checkpoint: " + last_checkpoint);
    for (auto& [name, t] : params) t.zero_grad();
    backward(loss.total);
    state.optimizer.step(params, lr);
    ++state.iteration;

    LogRecord record{state.iteration, lr, loss.report};
    records.push_back(record);
    if (log.is_open()) log << format_log_record(record) << '\n' << std::flush;
    if (on_iteration) on_iteration(record);
    if (!options.out_dir.empty() && options.checkpoint_every > 0 &&
        state.iteration % options.checkpoint_every == 0) {
      const auto path = (std::filesystem::path(options.out_dir) /
                         ("checkpoint_" + std::to_string(state.iteration) + ".dgnckpt"))
                            .string();
      save_state(path, state, options);
      last_checkpoint = path;
    }
  }
  return records;
}

void save_state(const std::string& path, const TrainState& state, const TrainOptions& options) {
  checkpoint::Container c;
  c.metadata["config"] = state.model.config();
  c.metadata["iteration"] = state.iteration;
  c.metadata["adam_steps"] = state.optimizer.steps();
  c.metadata["adam"] = {{"beta1", state.optimizer.config().beta1},
                        {"beta2", state.optimizer.config().beta2},
                        {"eps", state.optimizer.config().eps}};
  c.metadata["rng"] = state.rng.serialize();
  c.metadata["best_psnr"] = state.best_psnr;
  c.metadata["seed"] = options.seed;
  net::DgnParams handles = state.model.params();  // shallow: tensors share storage
  const auto params = net::named_parameters(handles);
  const auto& m = state.optimizer.first_moments();
  const auto& v = state.optimizer.second_moments();
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& [name, t] = params[k];
    c.arrays.emplace("param/" + name, t.detach());
    if (k < m.size()) {
      c.arrays.emplace("adam_m/" + name, Tensor::from(t.shape(), m[k]));
      c.arrays.emplace("adam_v/" + name, Tensor::from(t.shape(), v[k]));
    }
  }
  checkpoint::save(path, c);
}

namespace {

net::DgnModel model_from(const checkpoint::Container& c) {
  require(c.metadata.contains("config"), ErrorCode::kDecodeError, "checkpoint has no config");
  const DgnConfig cfg = c.metadata.at("config").get<DgnConfig>();
  cfg.validate();
  net::DgnModel model(cfg, 0);
  net::for_each_parameter(model.params(), [&](const std::string& name, Tensor& t) {
    const auto it = c.arrays.find("param/" + name);
    require(it != c.arrays.end(), ErrorCode::kInvalidConfig, "checkpoint is missing array param/" + name);
    checkpoint::assign_checked(name, t, it->second);
  });
  return model;
}

}  // namespace

TrainState load_state(const std::string& path) {
  const checkpoint::Container c = checkpoint::load(path);
  net::DgnModel model = model_from(c);
  AdamConfig adam;
  if (c.metadata.contains("adam")) {
    adam.beta1 = c.metadata["adam"].value("beta1", adam.beta1);
    adam.beta2 = c.metadata["adam"].value("beta2", adam.beta2);
    adam.eps = c.metadata["adam"].value("eps", adam.eps);
  }
  TrainState state{c.metadata.value("iteration", 0L), std::move(model), Adam(adam), Rng(0),
                   c.metadata.value("best_psnr", 0.0)};
  state.rng.deserialize(c.metadata.value("rng", std::string()));
  std::vector<std::vector<double>> m, v;
  bool has_moments = true;
  net::for_each_parameter(state.model.params(), [&](const std::string& name, Tensor& t) {
    const auto mi = c.arrays.find("adam_m/" + name);
    const auto vi = c.arrays.find("adam_v/" + name);
    if (mi == c.arrays.end() || vi == c.arrays.end()) {
      has_moments = false;
      return;
    }
    require(mi->second.shape() == t.shape() && vi->second.shape() == t.shape(), ErrorCode::kInvalidConfig,
            "optimizer moments for " + name + " do not match the parameter shape");
    m.emplace_back(mi->second.data().begin(), mi->second.data().end());
    v.emplace_back(vi->second.data().begin(), vi->second.data().end());
  });
  if (has_moments) state.optimizer.restore(c.metadata.value("adam_steps", 0L), std::move(m), std::move(v));
  return state;
}

net::DgnModel load_model(const std::string& path) { return model_from(checkpoint::load(path)); }

Image restore(const net::DgnModel& model, const Image& lq, const Image& lq_depth) {
  NoGradGuard no_grad;
  const Tensor depth = model.config().depth_enabled ? to_tensor(to_rgb(lq_depth)) : Tensor();
  const net::DgnOutput out = model.forward(to_tensor(to_rgb(lq)), depth);
  return clip01(from_tensor(out.image));
}

EvalReport evaluate(const net::DgnModel& model, Task task,
                    const std::vector<std::pair<std::string, Image>>& images, const EvalOptions& options) {
  const DgnConfig& cfg = model.config();
  require(cfg.task == task, ErrorCode::kInvalidConfig,
          "evaluate: checkpoint was trained for " + to_string(cfg.task) + ", requested " + to_string(task));
  EvalReport report;
  const std::string baseline = task == Task::kSr ? "bicubic" : "input";
  double sum_psnr[2] = {0, 0}, sum_ssim[2] = {0, 0};
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto& [id, raw] = images[i];
    const Image hq = center_crop_to_multiple(to_rgb(raw), static_cast<std::size_t>(cfg.scale));
    const data::SamplePair pair =
        data::make_pair(id, hq, cfg.scale, options.sigma, mix_seed(options.seed, i), options.depth);
    const Image restored = restore(model, pair.lq, pair.lq_depth);
    const Image base = task == Task::kSr ? data::bicubic_upsample(pair.lq, cfg.scale) : pair.lq;
    const Tensor target = to_tensor(hq);
    const Tensor ours = to_tensor(restored), theirs = to_tensor(base);
    MetricRow model_row{"dgn", id, objectives::psnr(ours, target), objectives::ssim(ours, target)};
    MetricRow base_row{baseline, id, objectives::psnr(theirs, target), objectives::ssim(theirs, target)};
    sum_psnr[0] += model_row.psnr;
    sum_ssim[0] += model_row.ssim;
    sum_psnr[1] += base_row.psnr;
    sum_ssim[1] += base_row.ssim;
    report.rows.push_back(model_row);
    report.rows.push_back(base_row);
  }
  if (!images.empty()) {
    const double n = static_cast<double>(images.size());
    report.rows.push_back({"dgn", "mean", sum_psnr[0] / n, sum_ssim[0] / n});
    report.rows.push_back({baseline, "mean", sum_psnr[1] / n, sum_ssim[1] / n});
  }
  return report;
}

void write_report(std::ostream& out, const EvalReport& report) {
  out << "# method\tid\tpsnr\tssim\n";
  for (const auto& row : report.rows)
    out << row.method << '\t' << objectives::format_metric_row(row.id, row.psnr, row.ssim) << '\n';
}

}  // namespace dgn::harness
