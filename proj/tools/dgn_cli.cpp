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

// dgn: command-line entry points for curation, degradation, training,
// evaluation and inference.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#ifdef DGN_CLI11_PACKAGE
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif
#include <nlohmann/json.hpp>

#include "dgn/config.hpp"
#include "dgn/curation.hpp"
#include "dgn/degradation.hpp"
#include "dgn/error.hpp"
#include "dgn/image.hpp"
#include "dgn/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Exit status per error category; 1 is kept for unexpected failures and
// CLI11 uses its own codes for usage errors.
int exit_code(dgn::ErrorCode code) {
  switch (code) {
    case dgn::ErrorCode::kInvalidArgument: return 3;
    case dgn::ErrorCode::kInvalidConfig: return 4;
    case dgn::ErrorCode::kDecodeError: return 5;
    case dgn::ErrorCode::kMissingDepth: return 6;
    case dgn::ErrorCode::kIoError: return 7;
    case dgn::ErrorCode::kNanLoss: return 8;
    case dgn::ErrorCode::kCorruptWindowSet:
    case dgn::ErrorCode::kOracleScaleExceeded: return 9;
  }
  return 1;
}

json read_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  dgn::require(in.good(), dgn::ErrorCode::kIoError, "cannot open config " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    dgn::fail(dgn::ErrorCode::kInvalidConfig, "cannot parse config " + path + ": " + e.what());
  }
}

json section(const json& cfg, const char* key) {
  return cfg.contains(key) ? cfg.at(key) : json::object();
}

template <typename T>
T pick(const json& s, const char* key, T fallback) {
  try {
    return s.value(key, fallback);
  } catch (const json::exception& e) {
    dgn::fail(dgn::ErrorCode::kInvalidConfig, std::string("bad value for ") + key + ": " + e.what());
  }
}

bool is_image(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return char(std::tolower(c)); });
  return ext == ".png" || ext == ".ppm" || ext == ".pgm";
}

// (id, path) for every image in a directory, or the single file given.
std::vector<std::pair<std::string, std::string>> list_images(const std::string& input) {
  std::vector<std::pair<std::string, std::string>> out;
  if (fs::is_regular_file(input)) {
    out.emplace_back(fs::path(input).stem().string(), input);
    return out;
  }
  dgn::require(fs::is_directory(input), dgn::ErrorCode::kIoError, "no such file or directory: " + input);
  for (const auto& e : fs::directory_iterator(input))
    if (e.is_regular_file() && is_image(e.path())) out.emplace_back(e.path().stem().string(), e.path().string());
  std::sort(out.begin(), out.end());
  dgn::require(!out.empty(), dgn::ErrorCode::kIoError, "no images found in " + input);
  return out;
}

dgn::data::DepthSource depth_source(const std::string& dir, bool synthetic, std::uint64_t seed) {
  return dgn::data::DepthSource{dir, synthetic, seed};
}

// Depth-free models still take a depth tensor; it is never read.
dgn::Image inference_depth(const dgn::net::DgnModel& model, const dgn::Image& lq, const std::string& path,
                           bool synthetic, std::uint64_t seed, const std::string& id) {
  if (!model.config().depth_enabled) return dgn::Image(3, lq.height, lq.width);
  if (!path.empty()) {
    const dgn::RawPlane raw = dgn::read_raw_plane(path);
    dgn::require(raw.height == lq.height && raw.width == lq.width, dgn::ErrorCode::kInvalidArgument,
                 "depth map " + path + " does not match the input size");
    return dgn::data::normalize_depth(raw);
  }
  dgn::require(synthetic, dgn::ErrorCode::kMissingDepth,
               "no depth map for " + id + " (pass --depth or --synthetic-depth)");
  return dgn::data::normalize_depth(dgn::data::synthetic_depth_field(lq.height, lq.width, seed));
}

dgn::RawPlane to_raw16(const dgn::Image& depth) {
  dgn::RawPlane raw{depth.height, depth.width, std::vector<double>(depth.plane())};
  for (std::size_t i = 0; i < raw.values.size(); ++i) raw.values[i] = std::round(depth.data[i] * 65535.0);
  return raw;
}

struct CommonFlags {
  std::string config;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON config file");
  cmd->add_option("--seed", f.seed, "root random seed");
}

int run_curate(const CommonFlags& common, dgn::curation::CurateOptions opts, const std::string& patch_size,
               const std::string& manifest_out, CLI::App* cmd) {
  const json s = section(read_config(common.config), "curate");
  if (cmd->count("--input-dir") == 0) opts.input_dir = pick(s, "input_dir", opts.input_dir);
  if (cmd->count("--categories-file") == 0) opts.categories_file = pick(s, "categories_file", opts.categories_file);
  if (cmd->count("--delta") == 0) opts.delta = pick(s, "delta", opts.delta);
  if (cmd->count("--brightness-threshold") == 0)
    opts.brightness_threshold = pick(s, "brightness_threshold", opts.brightness_threshold);
  if (cmd->count("--normalize-brightness") == 0)
    opts.normalize_brightness = pick(s, "normalize_brightness", opts.normalize_brightness);
  std::string size = cmd->count("--patch-size") ? patch_size : pick(s, "patch_size", patch_size);
  std::string out = cmd->count("--manifest-out") ? manifest_out : pick(s, "manifest_out", manifest_out);
  unsigned long pw = 0, ph = 0;
  char tail = 0;
  dgn::require(std::sscanf(size.c_str(), "%lux%lu%c", &pw, &ph, &tail) == 2 && pw > 0 && ph > 0,
               dgn::ErrorCode::kInvalidArgument, "--patch-size must look like 1535x1151");
  opts.patch_w = pw;
  opts.patch_h = ph;
  dgn::require(!opts.input_dir.empty() && !opts.categories_file.empty(), dgn::ErrorCode::kInvalidArgument,
               "curate needs --input-dir and --categories-file");

  const auto manifest = dgn::curation::curate(opts);
  std::size_t kept = 0, patches = 0;
  for (const auto& e : manifest.entries)
    if (e.verdict == dgn::curation::Verdict::kKept) {
      ++kept;
      patches += e.patches.size();
    }
  if (out.empty()) {
    dgn::curation::write_manifest(std::cout, manifest);
  } else {
    std::ofstream f(out);
    dgn::require(f.good(), dgn::ErrorCode::kIoError, "cannot write " + out);
    dgn::curation::write_manifest(f, manifest);
  }
  std::cerr << manifest.entries.size() << " images, " << kept << " kept, " << patches << " patches\n";
  return 0;
}

struct DegradeFlags {
  std::string input, output_dir, task = "sr", depth_dir;
  int scale = 4;
  double sigma = 25.0;
  bool synthetic_depth = false;
};

int run_degrade(const CommonFlags& common, DegradeFlags f, CLI::App* cmd) {
  const json s = section(read_config(common.config), "data");
  if (cmd->count("--task") == 0) f.task = pick(s, "task", f.task);
  if (cmd->count("--scale") == 0) f.scale = pick(s, "scale", f.scale);
  if (cmd->count("--sigma") == 0) f.sigma = pick(s, "sigma", f.sigma);
  if (cmd->count("--depth-dir") == 0) f.depth_dir = pick(s, "depth_dir", f.depth_dir);
  if (cmd->count("--synthetic-depth") == 0) f.synthetic_depth = pick(s, "synthetic_depth", f.synthetic_depth);
  const dgn::Task task = dgn::parse_task(f.task);
  const int scale = task == dgn::Task::kSr ? f.scale : 1;
  const double sigma = task == dgn::Task::kDenoise ? f.sigma : 0.0;
  fs::create_directories(f.output_dir);
  const bool with_depth = f.synthetic_depth || !f.depth_dir.empty();
  std::uint64_t index = 0;
  for (const auto& [id, path] : list_images(f.input)) {
    const dgn::Image hq = dgn::read_image(path);
    const auto pair = dgn::data::make_pair(id, hq, scale, sigma, dgn::mix_seed(common.seed, index++),
                                           with_depth ? depth_source(f.depth_dir, f.synthetic_depth, common.seed)
                                                      : depth_source("", true, common.seed));
    const fs::path out(f.output_dir);
    dgn::write_image((out / (id + ".png")).string(), pair.lq);
    if (with_depth) {
      dgn::write_pgm16((out / (id + ".lqdepth")).string(), to_raw16(pair.lq_depth));
      dgn::write_pgm16((out / (id + ".hqdepth")).string(), to_raw16(pair.hq_depth));
    }
    std::cout << id << '\t' << pair.lq.width << 'x' << pair.lq.height << '\n';
  }
  return 0;
}

struct TrainFlags {
  std::string data_dir, depth_dir, out_dir, resume;
  long iterations = 1000;
  long checkpoint_every = 0;
  bool synthetic_depth = false;
};

int run_train(const CommonFlags& common, TrainFlags f, CLI::App* cmd) {
  const json cfg = read_config(common.config);
  const json t = section(cfg, "train"), d = section(cfg, "data");
  dgn::harness::TrainOptions o;
  o.model = cfg.contains("model") ? cfg.at("model").get<dgn::DgnConfig>() : dgn::DgnConfig::tiny();
  o.model.validate();
  o.seed = cmd->count("--seed") ? common.seed : pick(t, "seed", common.seed);
  o.iterations = cmd->count("--iterations") ? f.iterations : pick(t, "iterations", f.iterations);
  o.checkpoint_every = cmd->count("--checkpoint-every") ? f.checkpoint_every
                                                          : pick(t, "checkpoint_every", f.checkpoint_every);
  o.out_dir = cmd->count("--out-dir") ? f.out_dir : pick(t, "out_dir", f.out_dir);
  const long total = pick(t, "total_iters", o.iterations);
  o.schedule = dgn::harness::LrSchedule::scaled(total, pick(t, "base_lr", 3e-4));
  o.adam.beta1 = pick(t, "beta1", o.adam.beta1);
  o.adam.beta2 = pick(t, "beta2", o.adam.beta2);
  o.adam.eps = pick(t, "eps", o.adam.eps);
  o.batch.batch_size = pick(t, "batch_size", o.batch.batch_size);
  o.batch.patch_size = pick(t, "patch_size", o.batch.patch_size);
  o.batch.augment = pick(t, "augment", o.batch.augment);
  o.batch.scale = o.model.scale;

  const std::string data_dir = cmd->count("--data-dir") ? f.data_dir : pick(d, "hq_dir", f.data_dir);
  const std::string depth_dir = cmd->count("--depth-dir") ? f.depth_dir : pick(d, "depth_dir", f.depth_dir);
  const bool synthetic = cmd->count("--synthetic-depth") ? f.synthetic_depth : pick(d, "synthetic_depth", false);
  const double sigma = o.model.task == dgn::Task::kDenoise ? pick(d, "sigma", 25.0) : 0.0;
  dgn::require(!data_dir.empty(), dgn::ErrorCode::kInvalidArgument, "train needs --data-dir");

  std::vector<dgn::data::SamplePair> dataset;
  std::uint64_t index = 0;
  for (const auto& [id, path] : list_images(data_dir))
    dataset.push_back(dgn::data::make_pair(id, dgn::read_image(path), o.model.scale, sigma,
                                           dgn::mix_seed(o.seed, 1000 + index++),
                                           depth_source(depth_dir, synthetic, o.seed)));

  dgn::harness::TrainState state =
      f.resume.empty() ? dgn::harness::initial_state(o) : dgn::harness::load_state(f.resume);
  const auto start = std::chrono::steady_clock::now();
  const auto logs = dgn::harness::train(o, dataset, state, [&](const dgn::harness::LogRecord& r) {
    if (r.iter == 1 || r.iter % 10 == 0 || r.iter == o.iterations)
      std::cout << dgn::harness::format_log_record(r) << '\n' << std::flush;
  });
  if (!o.out_dir.empty()) dgn::harness::save_state((fs::path(o.out_dir) / "final.dgnckpt").string(), state, o);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cerr << logs.size() << " iterations in " << secs << " s\n";
  return 0;
}

struct EvalFlags {
  std::string checkpoint, data_dir, depth_dir, report_out;
  double sigma = 25.0;
  bool synthetic_depth = false;
};

int run_eval(const CommonFlags& common, EvalFlags f, CLI::App* cmd) {
  const json e = section(read_config(common.config), "eval");
  if (cmd->count("--checkpoint") == 0) f.checkpoint = pick(e, "checkpoint", f.checkpoint);
  if (cmd->count("--data-dir") == 0) f.data_dir = pick(e, "hq_dir", f.data_dir);
  if (cmd->count("--depth-dir") == 0) f.depth_dir = pick(e, "depth_dir", f.depth_dir);
  if (cmd->count("--sigma") == 0) f.sigma = pick(e, "sigma", f.sigma);
  if (cmd->count("--synthetic-depth") == 0) f.synthetic_depth = pick(e, "synthetic_depth", f.synthetic_depth);
  if (cmd->count("--report-out") == 0) f.report_out = pick(e, "report_out", f.report_out);
  dgn::require(!f.checkpoint.empty() && !f.data_dir.empty(), dgn::ErrorCode::kInvalidArgument,
               "eval needs --checkpoint and --data-dir");
  const auto model = dgn::harness::load_model(f.checkpoint);
  std::vector<std::pair<std::string, dgn::Image>> images;
  for (const auto& [id, path] : list_images(f.data_dir)) images.emplace_back(id, dgn::read_image(path));
  dgn::harness::EvalOptions opts;
  opts.sigma = f.sigma;
  opts.seed = common.seed;
  opts.depth = model.config().depth_enabled ? depth_source(f.depth_dir, f.synthetic_depth, common.seed)
                                            : depth_source("", true, common.seed);
  const auto report = dgn::harness::evaluate(model, model.config().task, images, opts);
  if (f.report_out.empty()) {
    dgn::harness::write_report(std::cout, report);
  } else {
    std::ofstream out(f.report_out);
    dgn::require(out.good(), dgn::ErrorCode::kIoError, "cannot write " + f.report_out);
    dgn::harness::write_report(out, report);
  }
  return 0;
}

struct InferFlags {
  std::string checkpoint, input, depth, output;
  bool synthetic_depth = false;
};

int run_infer(const CommonFlags& common, InferFlags f, CLI::App* cmd) {
  const json s = section(read_config(common.config), "infer");
  if (cmd->count("--checkpoint") == 0) f.checkpoint = pick(s, "checkpoint", f.checkpoint);
  if (cmd->count("--synthetic-depth") == 0) f.synthetic_depth = pick(s, "synthetic_depth", f.synthetic_depth);
  const auto start = std::chrono::steady_clock::now();
  const auto model = dgn::harness::load_model(f.checkpoint);
  const dgn::Image lq = dgn::read_image(f.input);
  const std::string id = fs::path(f.input).stem().string();
  const dgn::Image depth = inference_depth(model, lq, f.depth, f.synthetic_depth, common.seed, id);
  const dgn::Image out = dgn::harness::restore(model, lq, depth);
  dgn::write_image(f.output, out);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%s: %zux%zu -> %zux%zu in %.3f s\n", f.output.c_str(), lq.width, lq.height, out.width,
              out.height, secs);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Depth-guided image restoration toolkit"};
  app.require_subcommand(1);
  CommonFlags common;

  auto* curate = app.add_subcommand("curate", "hash, deduplicate, filter and tile a raw image collection");
  add_common(curate, common);
  dgn::curation::CurateOptions copts;
  std::string patch_size = "1535x1151", manifest_out;
  curate->add_option("--input-dir", copts.input_dir);
  curate->add_option("--categories-file", copts.categories_file, "lines of '<file> <category>'");
  curate->add_option("--delta", copts.delta, "Hamming distance below which images are duplicates");
  curate->add_option("--brightness-threshold", copts.brightness_threshold);
  curate->add_flag("--normalize-brightness", copts.normalize_brightness);
  curate->add_option("--patch-size", patch_size, "WxH");
  curate->add_option("--manifest-out", manifest_out, "default: stdout");

  auto* degrade = app.add_subcommand("degrade", "synthesize low-quality inputs and depth sidecars");
  add_common(degrade, common);
  DegradeFlags dflags;
  degrade->add_option("--input", dflags.input, "image file or directory")->required();
  degrade->add_option("--output-dir", dflags.output_dir)->required();
  degrade->add_option("--task", dflags.task, "sr or denoise");
  degrade->add_option("--scale", dflags.scale);
  degrade->add_option("--sigma", dflags.sigma, "noise level on the 0-255 scale");
  degrade->add_option("--depth-dir", dflags.depth_dir, "directory of <id>.lqdepth/<id>.hqdepth sidecars");
  degrade->add_flag("--synthetic-depth", dflags.synthetic_depth);

  auto* train = app.add_subcommand("train", "train a model");
  add_common(train, common);
  TrainFlags tflags;
  train->add_option("--data-dir", tflags.data_dir, "high-quality training images");
  train->add_option("--depth-dir", tflags.depth_dir);
  train->add_flag("--synthetic-depth", tflags.synthetic_depth);
  train->add_option("--out-dir", tflags.out_dir, "log and checkpoint directory");
  train->add_option("--iterations", tflags.iterations);
  train->add_option("--checkpoint-every", tflags.checkpoint_every);
  train->add_option("--resume", tflags.resume, "checkpoint to continue from");

  auto* eval = app.add_subcommand("eval", "report PSNR/SSIM of a checkpoint on high-quality images");
  add_common(eval, common);
  EvalFlags eflags;
  eval->add_option("--checkpoint", eflags.checkpoint);
  eval->add_option("--data-dir", eflags.data_dir);
  eval->add_option("--depth-dir", eflags.depth_dir);
  eval->add_flag("--synthetic-depth", eflags.synthetic_depth);
  eval->add_option("--sigma", eflags.sigma);
  eval->add_option("--report-out", eflags.report_out, "default: stdout");

  auto* infer = app.add_subcommand("infer", "restore one image");
  add_common(infer, common);
  InferFlags iflags;
  infer->add_option("--checkpoint", iflags.checkpoint);
  infer->add_option("--input", iflags.input)->required();
  infer->add_option("--depth", iflags.depth, "16-bit depth map matching the input");
  infer->add_flag("--synthetic-depth", iflags.synthetic_depth);
  infer->add_option("--output", iflags.output)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (curate->parsed()) return run_curate(common, copts, patch_size, manifest_out, curate);
    if (degrade->parsed()) return run_degrade(common, dflags, degrade);
    if (train->parsed()) return run_train(common, tflags, train);
    if (eval->parsed()) return run_eval(common, eflags, eval);
    if (infer->parsed()) return run_infer(common, iflags, infer);
  } catch (const dgn::Error& e) {
    std::cerr << "dgn: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "dgn: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
