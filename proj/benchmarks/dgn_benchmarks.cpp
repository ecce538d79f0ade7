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

#include <benchmark/benchmark.h>

#include "dgn/inter_sim.hpp"
#include "dgn/intra_sim.hpp"
#include "dgn/network.hpp"
#include "dgn/ops.hpp"

namespace {

using namespace dgn;

Tensor random(const Shape& shape, Rng& rng) {
  Tensor t = Tensor::zeros(shape);
  for (auto& v : t.data()) v = 2.0 * rng.uniform() - 1.0;
  return t;
}

void BM_Conv3x3(benchmark::State& state) {
  const auto c = std::size_t(state.range(0));
  Rng rng(1);
  const Tensor x = random({1, c, 32, 32}, rng), w = random({c, c, 3, 3}, rng), b = random({c}, rng);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(ops::conv2d(x, w, b));
}
BENCHMARK(BM_Conv3x3)->Arg(16)->Arg(64);

void BM_WindowAttention(benchmark::State& state) {
  const int win = int(state.range(0));
  Rng rng(2);
  const Tensor q = random({1, 16, 32, 32}, rng), v = random({1, 16, 32, 32}, rng);
  const auto bias = intra_sim::RelPosBias::create(std::size_t(win), rng);
  NoGradGuard guard;
  for (auto _ : state) {
    const auto qw = intra_sim::window_partition(q, win), vw = intra_sim::window_partition(v, win);
    benchmark::DoNotOptimize(intra_sim::ssc(qw, vw, bias.matrix()));
    benchmark::DoNotOptimize(intra_sim::csc(qw, vw));
  }
}
BENCHMARK(BM_WindowAttention)->Arg(4)->Arg(8)->Arg(16);

void BM_SparseAttention(benchmark::State& state) {
  const auto side = std::size_t(state.range(0));
  Rng rng(3);
  const auto params = inter_sim::NonLocalParams::create(32, rng);
  const Tensor x = random({1, 32, side, side}, rng);
  inter_sim::LshConfig cfg;
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(inter_sim::sparse_nonlocal_attention(x, cfg, params));
  state.SetItemsProcessed(state.iterations() * std::int64_t(side * side));
}
BENCHMARK(BM_SparseAttention)->Arg(16)->Arg(32)->Arg(64);

void BM_TinyForward(benchmark::State& state) {
  const net::DgnModel model(DgnConfig::tiny(Task::kSr), 4);
  Rng rng(5);
  const Tensor x = random({1, 3, 16, 16}, rng), xd = random({1, 3, 16, 16}, rng);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(x, xd));
}
BENCHMARK(BM_TinyForward);

void BM_TinyTrainStep(benchmark::State& state) {
  net::DgnModel model(DgnConfig::tiny(Task::kSr), 6);
  Rng rng(7);
  const Tensor x = random({1, 3, 16, 16}, rng), xd = random({1, 3, 16, 16}, rng);
  auto params = net::named_parameters(model.params());
  for (auto _ : state) {
    for (auto& [name, t] : params) t.zero_grad();
    const auto out = model.forward(x, xd);
    backward(ops::add(ops::sum(out.image), ops::sum(out.depth)));
  }
}
BENCHMARK(BM_TinyTrainStep);

}  // namespace

BENCHMARK_MAIN();
