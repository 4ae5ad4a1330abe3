// Copyright 2026 The o2il Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <random>

#include <benchmark/benchmark.h>

#include "o2il/finetune.h"
#include "o2il/mdp.h"

namespace o2il {
namespace {

void BM_GailIteration(benchmark::State& state) {
  const TabularMdp mdp = build_gridworld({});
  const int S = mdp.n_states();
  const int A = mdp.n_actions();
  const Dataset expert = sample_trajectories(mdp, value_iteration(mdp, 1e-10), 5, 100, 1,
                                             Source::kExpert);
  GailConfig cfg;
  cfg.episodes = 4;
  cfg.horizon = 100;
  cfg.episodes_per_iter = 4;
  cfg.disc_init = DiscInit::kRandom;
  const GailDiscriminator d = GailDiscriminator::random(S, A, 1.0, {1e-4, 1.0 - 1e-4}, 0.5, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_gail(mdp, SoftmaxPolicy(S, A), d, expert, cfg));
  }
}
BENCHMARK(BM_GailIteration)->Unit(benchmark::kMicrosecond);

void BM_Rollout(benchmark::State& state) {
  const TabularMdp mdp = build_gridworld({});
  const SoftmaxPolicy pi(mdp.n_states(), mdp.n_actions());
  std::mt19937_64 rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(rollout(mdp, pi, 4, 100, rng));
}
BENCHMARK(BM_Rollout)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace o2il
