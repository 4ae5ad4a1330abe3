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

#include <cstdio>
#include <filesystem>
#include <string>

#include <benchmark/benchmark.h>

#include "o2il/data.h"
#include "o2il/mdp.h"

namespace o2il {
namespace {

void BM_ReadJsonl(benchmark::State& state) {
  const TabularMdp mdp = build_gridworld({});
  const auto n = static_cast<int>(state.range(0));
  const Dataset data = sample_trajectories(mdp, TabularPolicy::uniform(mdp.n_states(), 4),
                                           n / 100, 100, 1, Source::kSupplementary);
  const std::string path =
      (std::filesystem::temp_directory_path() / "o2il_bench_read.jsonl").string();
  write_jsonl(path, data);
  for (auto _ : state) benchmark::DoNotOptimize(read_jsonl(path));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(data.transitions.size()));
  std::remove(path.c_str());
}
BENCHMARK(BM_ReadJsonl)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_EmpiricalDistribution(benchmark::State& state) {
  const TabularMdp mdp = build_gridworld({});
  const Dataset data = sample_trajectories(mdp, TabularPolicy::uniform(mdp.n_states(), 4),
                                           200, 100, 1, Source::kSupplementary);
  for (auto _ : state) {
    benchmark::DoNotOptimize(empirical_distribution(data, SourceFilter::kAll, 64, 4));
  }
}
BENCHMARK(BM_EmpiricalDistribution)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace o2il
