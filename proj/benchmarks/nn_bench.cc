// Copyright 2026 The fedsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <vector>

#include "benchmark/benchmark.h"
#include "fedsim/nn.h"
#include "fedsim/random.h"

namespace fedsim {
namespace {

const std::vector<std::size_t> kHidden = {128, 64, 32, 16};

struct Examples {
  std::vector<std::vector<double>> features;
  std::vector<nn::Example> batch;
};

Examples RandomExamples(std::size_t n, std::size_t dim, std::size_t classes) {
  Rng rng(3);
  Examples out;
  out.features.assign(n, std::vector<double>(dim));
  for (auto& f : out.features) {
    for (double& x : f) x = rng.Normal();
    out.batch.push_back({f, rng.Below(classes)});
  }
  return out;
}

void BM_Forward(benchmark::State& state) {
  const nn::ModelWeights w = nn::BuildNetwork(33, 5, kHidden, 1);
  const auto examples = RandomExamples(64, 33, 5);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(nn::Forward(w, examples.batch[i++ % examples.batch.size()].features));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Forward);

void BM_TrainEpoch(benchmark::State& state) {
  const auto examples = RandomExamples(static_cast<std::size_t>(state.range(0)), 33, 5);
  nn::ModelWeights w = nn::BuildNetwork(33, 5, kHidden, 1);
  nn::AdamState adam = nn::AdamState::For(w, {});
  std::uint64_t seed = 0;
  for (auto _ : state) {
    nn::Train(w, adam, examples.batch, {1, 30, seed++});
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainEpoch)->Arg(300)->Arg(2000);

}  // namespace
}  // namespace fedsim
